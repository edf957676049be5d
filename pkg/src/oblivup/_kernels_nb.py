"""Numba-jitted kernels for exact mod-q arithmetic.

Loop-style implementations compiled with @njit. The pure-NumPy twins live in
_kernels_np.py; _accel.py picks one set at import time. Both sets must return
bit-identical results (tests/test_accel.py enforces this).

All matrices are C-contiguous int64 with entries in [0, q). Products of two
reduced entries stay below 2**62 for q < 2**31, so a single add before the
next reduction cannot overflow int64.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _sm64_next(state):
    state = state + _SM64_GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _SM64_M1
    z = (z ^ (z >> np.uint64(27))) * _SM64_M2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _sm64_draw_mod(state, q):
    # Rejection sampling below the largest multiple of q that fits in 64 bits
    # keeps the draw exactly uniform on [0, q).
    qq = np.uint64(q)
    lim = (_U64_MAX // qq) * qq
    while True:
        state, z = _sm64_next(state)
        if z < lim:
            return state, np.int64(z % qq)


@njit(cache=True)
def sm64_sequence(seed, count, q):
    out = np.empty(count, np.int64)
    state = np.uint64(seed)
    for i in range(count):
        state, v = _sm64_draw_mod(state, q)
        out[i] = v
    return out


@njit(cache=True)
def mod_matmul(a, b, q):
    m, inner = a.shape
    n = b.shape[1]
    out = np.empty((m, n), np.int64)
    for i in range(m):
        for j in range(n):
            acc = np.int64(0)
            for t in range(inner):
                acc = (acc + a[i, t] * b[t, j]) % q
            out[i, j] = acc
    return out


@njit(cache=True)
def mod_matvec(a, v, q):
    m, inner = a.shape
    out = np.empty(m, np.int64)
    for i in range(m):
        acc = np.int64(0)
        for t in range(inner):
            acc = (acc + a[i, t] * v[t]) % q
        out[i] = acc
    return out


@njit(cache=True)
def mod_dot(u, v, q):
    acc = np.int64(0)
    for t in range(u.shape[0]):
        acc = (acc + u[t] * v[t]) % q
    return acc


@njit(cache=True)
def mod_inv(a, q):
    # Extended Euclid; returns 0 for a ≡ 0 (caller treats 0 as "no inverse").
    a = a % q
    if a == 0:
        return np.int64(0)
    r0, r1 = np.int64(q), a
    s0, s1 = np.int64(0), np.int64(1)
    while r1 != 0:
        f = r0 // r1
        r0, r1 = r1, r0 - f * r1
        s0, s1 = s1, s0 - f * s1
    return s0 % q


@njit(cache=True)
def det(m, q):
    n = m.shape[0]
    a = m.copy()
    d = np.int64(1)
    for col in range(n):
        piv = -1
        for r in range(col, n):
            if a[r, col] != 0:
                piv = r
                break
        if piv < 0:
            return np.int64(0)
        if piv != col:
            for c in range(col, n):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            d = (q - d) % q
        pv = a[col, col]
        d = (d * pv) % q
        pvinv = mod_inv(pv, q)
        for r in range(col + 1, n):
            f = (a[r, col] * pvinv) % q
            if f != 0:
                for c in range(col, n):
                    a[r, c] = (a[r, c] - f * a[col, c]) % q
    return d


@njit(cache=True)
def mat_inv(m, q):
    # Gauss-Jordan on [M | I]. Returns (status, pivot_col, inverse); status 1
    # flags singularity with the 0-based column where no pivot was found.
    n = m.shape[0]
    aug = np.empty((n, 2 * n), np.int64)
    for i in range(n):
        for j in range(n):
            aug[i, j] = m[i, j]
            aug[i, n + j] = np.int64(1) if i == j else np.int64(0)
    for col in range(n):
        piv = -1
        for r in range(col, n):
            if aug[r, col] != 0:
                piv = r
                break
        if piv < 0:
            return np.int64(1), np.int64(col), np.empty((0, 0), np.int64)
        if piv != col:
            for c in range(2 * n):
                tmp = aug[col, c]
                aug[col, c] = aug[piv, c]
                aug[piv, c] = tmp
        pvinv = mod_inv(aug[col, col], q)
        for c in range(2 * n):
            aug[col, c] = (aug[col, c] * pvinv) % q
        for r in range(n):
            if r != col and aug[r, col] != 0:
                f = aug[r, col]
                for c in range(2 * n):
                    aug[r, c] = (aug[r, c] - f * aug[col, c]) % q
    return np.int64(0), np.int64(-1), aug[:, n:].copy()


@njit(cache=True)
def rref(m, q):
    # Returns (reduced form, pivot column indices, rank). pivcols has
    # min(rows, cols) slots; the first `rank` entries are ascending.
    rows, cols = m.shape
    a = m.copy()
    pivcols = np.full(min(rows, cols), -1, np.int64)
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        piv = -1
        for r in range(rank, rows):
            if a[r, col] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for c in range(cols):
                tmp = a[rank, c]
                a[rank, c] = a[piv, c]
                a[piv, c] = tmp
        pvinv = mod_inv(a[rank, col], q)
        for c in range(cols):
            a[rank, c] = (a[rank, c] * pvinv) % q
        for r in range(rows):
            if r != rank and a[r, col] != 0:
                f = a[r, col]
                for c in range(cols):
                    a[r, c] = (a[r, c] - f * a[rank, c]) % q
        pivcols[rank] = col
        rank += 1
    return a, pivcols, np.int64(rank)


@njit(cache=True)
def _next_combination(idx, n):
    # Lexicographic successor of an r-combination of range(n); False at end.
    r = idx.shape[0]
    i = r - 1
    while i >= 0 and idx[i] == n - r + i:
        i -= 1
    if i < 0:
        return False
    idx[i] += 1
    for j in range(i + 1, r):
        idx[j] = idx[j - 1] + 1
    return True


@njit(cache=True)
def first_singular_minor(m, q, cap):
    # Scans r = 1..cap, row sets then column sets in lexicographic order, and
    # reports the first singular r x r submatrix (0-based index sets).
    nr, nc = m.shape
    rows_out = np.full(cap, -1, np.int64)
    cols_out = np.full(cap, -1, np.int64)
    for r in range(1, cap + 1):
        rows = np.arange(r).astype(np.int64)
        while True:
            cols = np.arange(r).astype(np.int64)
            while True:
                sub = np.empty((r, r), np.int64)
                for i in range(r):
                    for j in range(r):
                        sub[i, j] = m[rows[i], cols[j]]
                if det(sub, q) == 0:
                    for i in range(r):
                        rows_out[i] = rows[i]
                        cols_out[i] = cols[i]
                    return np.int64(r), rows_out, cols_out
                if not _next_combination(cols, nc):
                    break
            if not _next_combination(rows, nr):
                break
    return np.int64(0), rows_out, cols_out


@njit(cache=True)
def _pair_products(psi, eta, locs, q, u1, u2, s, a, b):
    for t in range(locs.shape[0]):
        p = locs[t, 0]
        i = locs[t, 1]
        j = locs[t, 2]
        if i == j:
            g1 = (psi[i, u1] * psi[i, s]) % q
            g2 = (psi[i, u2] * psi[i, s]) % q
        else:
            g1 = (psi[i, u1] * psi[j, s] + psi[j, u1] * psi[i, s]) % q
            g2 = (psi[i, u2] * psi[j, s] + psi[j, u2] * psi[i, s]) % q
        a[t] = (eta[u1, p] * g1) % q
        b[t] = (eta[u2, p] * g2) % q


@njit(cache=True)
def condition_b_first_violation(psi, eta, locs, q):
    # Result layout: [code, u1, u2, s, t1, t2], all 0-based.
    # code 0 = ok; 1 = equal cross-products at locations t1 < t2;
    # 2 = both helper products zero at location t1.
    out = np.full(6, -1, np.int64)
    n = psi.shape[1]
    B = locs.shape[0]
    a = np.empty(B, np.int64)
    b = np.empty(B, np.int64)
    for u1 in range(n):
        for u2 in range(u1 + 1, n):
            for s in range(n):
                if s == u1 or s == u2:
                    continue
                _pair_products(psi, eta, locs, q, u1, u2, s, a, b)
                for t in range(B):
                    if a[t] == 0 and b[t] == 0:
                        out[0] = 2
                        out[1] = u1
                        out[2] = u2
                        out[3] = s
                        out[4] = t
                        return out
                for t1 in range(B):
                    for t2 in range(t1 + 1, B):
                        if (a[t1] * b[t2]) % q == (a[t2] * b[t1]) % q:
                            out[0] = 1
                            out[1] = u1
                            out[2] = u2
                            out[3] = s
                            out[4] = t1
                            out[5] = t2
                            return out
    out[0] = 0
    return out


@njit(cache=True)
def mbr_search(n, theta, q, locs, seed, budget):
    # Rejection-samples coefficient candidates until one satisfies both code
    # conditions. Draw order per attempt: psi column by column (abandoning on
    # a zero entry, which a 1x1 minor would reject anyway), then the minor
    # sweep, then eta row by row, then the cross-product scan.
    # Returns (status, attempts, psi, eta); status 1 = budget exhausted.
    d = n - 1
    state = np.uint64(seed)
    psi = np.empty((d, n), np.int64)
    eta = np.empty((n, theta), np.int64)
    attempts = np.int64(0)
    while attempts < budget:
        attempts += 1
        ok = True
        for col in range(n):
            for row in range(d):
                state, v = _sm64_draw_mod(state, q)
                if v == 0:
                    ok = False
                    break
                psi[row, col] = v
            if not ok:
                break
        if not ok:
            continue
        r, _, _ = first_singular_minor(psi, q, d)
        if r != 0:
            continue
        for row in range(n):
            for p in range(theta):
                state, v = _sm64_draw_mod(state, q)
                eta[row, p] = v
        res = condition_b_first_violation(psi, eta, locs, q)
        if res[0] == 0:
            return np.int64(0), attempts, psi, eta
    return np.int64(1), attempts, psi, eta
