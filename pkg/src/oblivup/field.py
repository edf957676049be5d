"""Exact arithmetic and dense linear algebra over prime fields F_q.

Field elements are plain ints in [0, q); vectors and matrices are int64
numpy arrays. The modulus travels in a PrimeField context object rather
than per element. Heavy loops run through the selected kernel backend
(see _accel).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _accel

MAX_MODULUS = 2**31


class SingularMatrixError(ValueError):
    """Square matrix has no inverse; pivot_col is the 1-based column where
    elimination found no pivot."""

    def __init__(self, pivot_col: int):
        super().__init__(f"singular matrix: no pivot in column {pivot_col}")
        self.pivot_col = pivot_col


class SubmatrixViolation:
    """Witness for a singular square submatrix: 1-based row and column sets."""

    __slots__ = ("rows", "cols")

    def __init__(self, rows: tuple[int, ...], cols: tuple[int, ...]):
        self.rows = rows
        self.cols = cols

    def __repr__(self):
        return f"SubmatrixViolation(rows={self.rows}, cols={self.cols})"

    def __eq__(self, other):
        return (
            isinstance(other, SubmatrixViolation)
            and self.rows == other.rows
            and self.cols == other.cols
        )


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    """Deterministic trial division; moduli stay below 2**31."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    c = max(n, 2)
    while not is_prime(c):
        c += 1
    return c


class PrimeField:
    """Arithmetic context for F_q with q prime, q < 2**31."""

    __slots__ = ("q",)

    def __init__(self, q: int):
        if not 2 <= q < MAX_MODULUS:
            raise ValueError(f"modulus must be in [2, 2**31), got {q}")
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        self.q = q

    def __repr__(self):
        return f"PrimeField({self.q})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and self.q == other.q

    def __hash__(self):
        return hash(("PrimeField", self.q))

    # -- scalars ---------------------------------------------------------
    def element(self, value: int) -> int:
        return int(value) % self.q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        """Multiplicative inverse via extended Euclid; zero has none."""
        if a % self.q == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(_accel.mod_inv(np.int64(a % self.q), np.int64(self.q)))

    def pow(self, a: int, e: int) -> int:
        return pow(a % self.q, e, self.q)

    # -- vectors and matrices -------------------------------------------
    def vector(self, values: Sequence[int]) -> np.ndarray:
        arr = np.asarray(values, dtype=np.int64) % self.q
        if arr.ndim != 1:
            raise ValueError("expected a one-dimensional sequence")
        arr.setflags(write=False)
        return arr

    def matrix(self, rows: Sequence[Sequence[int]]) -> np.ndarray:
        arr = np.asarray(rows, dtype=np.int64) % self.q
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("expected a non-empty two-dimensional array")
        arr.setflags(write=False)
        return arr

    def rand_vector(self, length: int, rng) -> np.ndarray:
        return self.vector([rng.randrange(self.q) for _ in range(length)])

    def mat_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch: {a.shape} x {b.shape}")
        return _accel.mod_matmul(np.ascontiguousarray(a), np.ascontiguousarray(b), self.q)

    def mat_vec(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        if a.shape[1] != v.shape[0]:
            raise ValueError(f"shape mismatch: {a.shape} x {v.shape}")
        return _accel.mod_matvec(np.ascontiguousarray(a), np.ascontiguousarray(v), self.q)

    def dot(self, u: np.ndarray, v: np.ndarray) -> int:
        if u.shape != v.shape:
            raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
        return int(_accel.mod_dot(np.ascontiguousarray(u), np.ascontiguousarray(v), self.q))

    def mat_inv(self, m: np.ndarray) -> np.ndarray:
        """Exact Gauss-Jordan inverse of a square matrix."""
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        status, pivot_col, inv = _accel.mat_inv(np.ascontiguousarray(m), self.q)
        if status != 0:
            raise SingularMatrixError(int(pivot_col) + 1)
        return inv

    def solve(self, m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve m @ x = rhs for square nonsingular m."""
        inv = self.mat_inv(m)
        if rhs.ndim == 1:
            return self.mat_vec(inv, rhs)
        return self.mat_mul(inv, rhs)

    def det(self, m: np.ndarray) -> int:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        return int(_accel.det(np.ascontiguousarray(m), self.q))

    def rref(self, m: np.ndarray) -> tuple[np.ndarray, tuple[int, ...], int]:
        """Reduced row echelon form; returns (R, 0-based pivot columns, rank)."""
        r, pivcols, rank = _accel.rref(np.ascontiguousarray(m), self.q)
        return r, tuple(int(c) for c in pivcols[: int(rank)]), int(rank)

    def rank(self, m: np.ndarray) -> int:
        return self.rref(m)[2]

    def all_square_submatrices_nonsingular(
        self, m: np.ndarray, size_cap: int
    ) -> SubmatrixViolation | None:
        """Exhaustively test every r x r submatrix for r = 1..size_cap.

        Returns None when all minors are nonsingular, else the first
        violation in (size, row set, column set) lexicographic order.
        The cost is combinatorial; callers keep dimensions at desk scale.
        """
        if not 1 <= size_cap <= min(m.shape):
            raise ValueError(f"size_cap must be in [1, {min(m.shape)}], got {size_cap}")
        r, rows, cols = _accel.first_singular_minor(
            np.ascontiguousarray(m), self.q, size_cap
        )
        if int(r) == 0:
            return None
        r = int(r)
        return SubmatrixViolation(
            tuple(int(x) + 1 for x in rows[:r]), tuple(int(x) + 1 for x in cols[:r])
        )

    def cauchy(self, rows: int, cols: int) -> np.ndarray:
        """Cauchy matrix with entry (i, j) = 1 / (x_i - y_j), where
        x_i = i - 1 and y_j = rows + j - 1 (1-based i, j).

        All evaluation points are distinct, so every square submatrix is
        nonsingular. Requires q >= rows + cols.
        """
        if rows < 1 or cols < 1:
            raise ValueError("dimensions must be positive")
        if self.q < rows + cols:
            raise ValueError(
                f"need q >= rows + cols ({rows + cols}) for distinct evaluation points, got q={self.q}"
            )
        out = np.empty((rows, cols), np.int64)
        for i in range(rows):
            for j in range(cols):
                out[i, j] = self.inv((i - (rows + j)) % self.q)
        out.setflags(write=False)
        return out
