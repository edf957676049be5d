"""Pure NumPy/Python kernels, bit-identical to the numba set in _kernels_nb.py.

These favor vectorized row operations over element loops; scan orders and
rejection-sampling streams match the jitted twins exactly so that either
backend yields the same specs, witnesses, and first-violation reports.
"""

from __future__ import annotations

import itertools

import numpy as np

_MASK64 = (1 << 64) - 1
_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_M1 = 0xBF58476D1CE4E5B9
_SM64_M2 = 0x94D049BB133111EB


def _sm64_next(state):
    state = (state + _SM64_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SM64_M1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM64_M2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def _sm64_draw_mod(state, q):
    lim = (_MASK64 // q) * q
    while True:
        state, z = _sm64_next(state)
        if z < lim:
            return state, z % q


def sm64_sequence(seed, count, q):
    out = np.empty(count, np.int64)
    state = int(seed) & _MASK64
    for i in range(count):
        state, v = _sm64_draw_mod(state, q)
        out[i] = v
    return out


def mod_matmul(a, b, q):
    # Accumulate one rank-1 term at a time so intermediates stay < q**2 + q.
    m, inner = a.shape
    n = b.shape[1]
    out = np.zeros((m, n), np.int64)
    for t in range(inner):
        out = (out + a[:, t, None] * b[None, t, :]) % q
    return out


def mod_matvec(a, v, q):
    out = np.zeros(a.shape[0], np.int64)
    for t in range(a.shape[1]):
        out = (out + a[:, t] * v[t]) % q
    return out


def mod_dot(u, v, q):
    # Per-term reduction keeps every partial below q * len(u) < 2**63.
    return int(np.mod(u * v, q).sum() % q)


def mod_inv(a, q):
    a = int(a) % q
    if a == 0:
        return 0
    r0, r1 = q, a
    s0, s1 = 0, 1
    while r1 != 0:
        f = r0 // r1
        r0, r1 = r1, r0 - f * r1
        s0, s1 = s1, s0 - f * s1
    return s0 % q


def _det_rows(sub, q):
    """Determinant of a list-of-rows of python ints, reduced mod q.

    Direct formulas through 3x3 (python ints never overflow), elimination
    above; small sizes dominate the minor sweeps, where per-call numpy
    overhead would swamp the arithmetic.
    """
    n = len(sub)
    if n == 1:
        return sub[0][0] % q
    if n == 2:
        return (sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0]) % q
    if n == 3:
        (a, b, c), (d, e, f), (g, h, i) = sub
        return (a * e * i + b * f * g + c * d * h - c * e * g - b * d * i - a * f * h) % q
    a = [row[:] for row in sub]
    det_val = 1
    for col in range(n):
        piv = -1
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv < 0:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det_val = -det_val
        pv = a[col][col]
        det_val = det_val * pv % q
        inv = mod_inv(pv, q)
        for r in range(col + 1, n):
            fac = a[r][col] * inv % q
            if fac:
                arow, acol = a[r], a[col]
                for c in range(col, n):
                    arow[c] = (arow[c] - fac * acol[c]) % q
    return det_val % q


def det(m, q):
    return _det_rows(m.tolist(), q)


def mat_inv(m, q):
    n = m.shape[0]
    aug = np.concatenate([m, np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        nz = np.nonzero(aug[col:, col])[0]
        if nz.size == 0:
            return 1, col, np.empty((0, 0), np.int64)
        piv = col + int(nz[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = (aug[col] * mod_inv(int(aug[col, col]), q)) % q
        f = aug[:, col].copy()
        f[col] = 0
        aug = (aug - f[:, None] * aug[col]) % q
    return 0, -1, aug[:, n:].copy()


def rref(m, q):
    rows, cols = m.shape
    a = m.copy()
    pivcols = np.full(min(rows, cols), -1, np.int64)
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        nz = np.nonzero(a[rank:, col])[0]
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        a[rank] = (a[rank] * mod_inv(int(a[rank, col]), q)) % q
        f = a[:, col].copy()
        f[rank] = 0
        a = (a - f[:, None] * a[rank]) % q
        pivcols[rank] = col
        rank += 1
    return a, pivcols, rank


def first_singular_minor(m, q, cap):
    nr, nc = m.shape
    rows_out = np.full(cap, -1, np.int64)
    cols_out = np.full(cap, -1, np.int64)
    mm = m.tolist()
    for r in range(1, cap + 1):
        for rows in itertools.combinations(range(nr), r):
            picked = [mm[i] for i in rows]
            for cols in itertools.combinations(range(nc), r):
                if _det_rows([[row[j] for j in cols] for row in picked], q) == 0:
                    rows_out[:r] = rows
                    cols_out[:r] = cols
                    return r, rows_out, cols_out
    return 0, rows_out, cols_out


def _has_singular_minor(mm, q, cap):
    # Boolean twin of first_singular_minor for candidates whose entries are
    # already known nonzero (1x1 minors cannot fail).
    nr = len(mm)
    nc = len(mm[0])
    for r in range(2, cap + 1):
        for rows in itertools.combinations(range(nr), r):
            picked = [mm[i] for i in rows]
            for cols in itertools.combinations(range(nc), r):
                if _det_rows([[row[j] for j in cols] for row in picked], q) == 0:
                    return True
    return False


def _pair_products(psi, eta, locs, q, u1, u2, s):
    p = locs[:, 0]
    i = locs[:, 1]
    j = locs[:, 2]
    diag = i == j
    g1 = np.where(diag, psi[i, u1] * psi[i, s] % q,
                  (psi[i, u1] * psi[j, s] + psi[j, u1] * psi[i, s]) % q)
    g2 = np.where(diag, psi[i, u2] * psi[i, s] % q,
                  (psi[i, u2] * psi[j, s] + psi[j, u2] * psi[i, s]) % q)
    a = eta[u1, p] * g1 % q
    b = eta[u2, p] * g2 % q
    return a, b


def condition_b_first_violation(psi, eta, locs, q):
    out = np.full(6, -1, np.int64)
    n = psi.shape[1]
    B = locs.shape[0]
    upper = np.triu(np.ones((B, B), bool), k=1)
    for u1 in range(n):
        for u2 in range(u1 + 1, n):
            for s in range(n):
                if s == u1 or s == u2:
                    continue
                a, b = _pair_products(psi, eta, locs, q, u1, u2, s)
                zz = np.nonzero((a == 0) & (b == 0))[0]
                if zz.size:
                    out[:5] = (2, u1, u2, s, int(zz[0]))
                    return out
                cross = a[:, None] * b[None, :] % q
                hits = np.argwhere((cross == cross.T) & upper)
                if hits.size:
                    t1, t2 = hits[0]
                    out[:] = (1, u1, u2, s, int(t1), int(t2))
                    return out
    out[0] = 0
    return out


def mbr_search(n, theta, q, locs, seed, budget):
    # Stream consumption matches the jitted twin exactly: psi column-major
    # with instant abandon on a zero entry, then the minor sweep, then eta
    # row-major, then the cross-product scan.
    d = n - 1
    state = int(seed) & _MASK64
    lim = (_MASK64 // q) * q
    attempts = 0
    while attempts < budget:
        attempts += 1
        cols = []
        ok = True
        for _ in range(n):
            vec = []
            for _ in range(d):
                while True:
                    state = (state + _SM64_GAMMA) & _MASK64
                    z = state
                    z = ((z ^ (z >> 30)) * _SM64_M1) & _MASK64
                    z = ((z ^ (z >> 27)) * _SM64_M2) & _MASK64
                    z ^= z >> 31
                    if z < lim:
                        v = z % q
                        break
                if v == 0:
                    ok = False
                    break
                vec.append(v)
            if not ok:
                break
            cols.append(vec)
        if not ok:
            continue
        mm = [[cols[c][r] for c in range(n)] for r in range(d)]
        if _has_singular_minor(mm, q, d):
            continue
        psi = np.array(mm, np.int64)
        eta = np.empty((n, theta), np.int64)
        for row in range(n):
            for p in range(theta):
                state, v = _sm64_draw_mod(state, q)
                eta[row, p] = v
        res = condition_b_first_violation(psi, eta, locs, q)
        if res[0] == 0:
            return 0, attempts, psi, eta
    return 1, attempts, np.zeros((d, n), np.int64), np.zeros((n, theta), np.int64)
