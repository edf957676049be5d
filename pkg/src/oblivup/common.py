"""Shared protocol types: shards, update transcripts, ratio matching."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np


class FingerprintMismatchError(ValueError):
    """Shard or request belongs to a different code instance."""


class NoRatioMatchError(RuntimeError):
    """Observed difference pair matched no candidate location.

    Signals that more than one symbol changed, or that a response was
    corrupted; the protocol refuses to apply anything.
    """

    def __init__(self, d1: int, d2: int):
        super().__init__(
            f"difference pair ({d1}, {d2}) matches no single-symbol location"
        )
        self.d1 = d1
        self.d2 = d2


class SymbolLocation(NamedTuple):
    """1-based position of a message symbol: matrix p, upper-triangle (i, j)."""

    p: int
    i: int
    j: int


@dataclass(frozen=True)
class NoChange:
    """Both observed differences were zero; the shard was already current."""


@dataclass(frozen=True)
class Located:
    """Identified single-symbol change: location and additive delta.

    location is a SymbolLocation for matrix-coded shards, or a 1-based
    message index for generator-coded shards.
    """

    location: Union[SymbolLocation, int]
    delta: int


Diagnosis = Union[NoChange, Located]


@dataclass(frozen=True, eq=False)
class NodeShard:
    """One node's stored symbols plus the fingerprint of the governing code."""

    node_id: int
    symbols: np.ndarray
    fingerprint: str

    def __post_init__(self):
        self.symbols.setflags(write=False)


@dataclass(frozen=True, eq=False)
class UpdateTranscript:
    """Full record of one oblivious update at a stale node."""

    stale_id: int
    helper_ids: tuple[int, ...]
    downloaded_symbols: tuple[int, ...]
    diagnosis: Diagnosis
    shard: NodeShard

    @property
    def symbols_downloaded(self) -> int:
        return len(self.downloaded_symbols)


def fingerprint_of(payload: dict) -> str:
    """Short content hash over a canonical JSON form of public fields."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def check_fingerprint(expected: str, actual: str, what: str) -> None:
    if expected != actual:
        raise FingerprintMismatchError(
            f"{what} fingerprint {actual!r} does not match code fingerprint {expected!r}"
        )


def match_projective_ratio(
    pairs: Sequence[tuple[int, int]], d1: int, d2: int, q: int
) -> int:
    """Index of the unique candidate (a, b) with (d1 : d2) == (a : b).

    Ratios are compared by cross-multiplication (d1*b == d2*a mod q) so
    pairs with a zero component, such as 10:0, compare correctly. Callers
    must rule out (d1, d2) == (0, 0) first. Raises NoRatioMatchError when
    nothing matches; a double match means the candidate table itself is
    degenerate and raises ValueError.
    """
    hit = -1
    for t, (a, b) in enumerate(pairs):
        if (d1 * b) % q == (d2 * a) % q:
            if hit >= 0:
                raise ValueError(
                    f"ambiguous ratio match at candidates {hit} and {t}: table is degenerate"
                )
            hit = t
    if hit < 0:
        raise NoRatioMatchError(d1, d2)
    return hit


def hamming(u: np.ndarray, v: np.ndarray) -> int:
    return int(np.count_nonzero(np.asarray(u) != np.asarray(v)))
