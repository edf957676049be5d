"""Kernel backend selection.

The numba backend is the default. Set OU_PURE_NUMPY=1 to force the pure
NumPy/Python twins (also used automatically when numba is not importable).
Both backends are bit-identical; only speed differs.
"""

from __future__ import annotations

import os

_flag = os.environ.get("OU_PURE_NUMPY", "").strip().lower()
PURE_NUMPY = _flag not in ("", "0", "false")

if not PURE_NUMPY:
    try:
        from . import _kernels_nb as _impl
    except ImportError:
        PURE_NUMPY = True

if PURE_NUMPY:
    from . import _kernels_np as _impl

BACKEND = "numpy" if PURE_NUMPY else "numba"

sm64_sequence = _impl.sm64_sequence
mod_matmul = _impl.mod_matmul
mod_matvec = _impl.mod_matvec
mod_dot = _impl.mod_dot
mod_inv = _impl.mod_inv
det = _impl.det
mat_inv = _impl.mat_inv
rref = _impl.rref
first_singular_minor = _impl.first_singular_minor
condition_b_first_violation = _impl.condition_b_first_violation
mbr_search = _impl.mbr_search
