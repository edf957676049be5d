"""oblivup: erasure-coded storage with oblivious stale-shard updates.

Two exact finite-field storage codes whose stale nodes resynchronize by
downloading the information-theoretic minimum, executable witnesses for the
matching download lower bounds, and a deterministic cluster simulator with
bit-level communication accounting.
"""

from ._accel import BACKEND, PURE_NUMPY
from .common import (
    FingerprintMismatchError,
    Located,
    NoChange,
    NodeShard,
    NoRatioMatchError,
    SymbolLocation,
    UpdateTranscript,
    match_projective_ratio,
)
from .field import PrimeField, SingularMatrixError, SubmatrixViolation, is_prime, next_prime
from .rng import DetRng

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PURE_NUMPY",
    "DetRng",
    "PrimeField",
    "SingularMatrixError",
    "SubmatrixViolation",
    "is_prime",
    "next_prime",
    "FingerprintMismatchError",
    "NoRatioMatchError",
    "NodeShard",
    "SymbolLocation",
    "NoChange",
    "Located",
    "UpdateTranscript",
    "match_projective_ratio",
    "__version__",
]
