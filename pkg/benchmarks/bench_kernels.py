"""Benchmark the numba kernels against their pure NumPy twins.

Both backends are imported side by side, so one run prints the whole
comparison. The numba column excludes compilation: every kernel is warmed
up once before timing.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from oblivup import _kernels_nb as knb
from oblivup import _kernels_np as knp
from oblivup.mbr_code import _locations_array, message_locations
from oblivup.rng import DetRng


def timed(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def rand_matrix(rng, rows, cols, q):
    return np.array(
        [[rng.randrange(q) for _ in range(cols)] for _ in range(rows)], np.int64
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = DetRng(0)
    q = 1009
    a16 = rand_matrix(rng, 16, 16, q)
    b16 = rand_matrix(rng, 16, 16, q)
    m8 = rand_matrix(rng, 8, 8, q)
    while knp.det(m8, q) == 0:
        m8 = rand_matrix(rng, 8, 8, q)

    from oblivup.field import PrimeField

    cauchy = np.asarray(PrimeField(13).cauchy(8, 4))
    locs = _locations_array(message_locations(4, 2, 1))
    locs632 = _locations_array(message_locations(6, 3, 2))
    psi632 = rand_matrix(rng, 5, 6, 3631)
    eta632 = rand_matrix(rng, 6, 2, 3631)

    cases = [
        (
            "mod_matmul 16x16 (x200, q=1009)",
            lambda k: [k.mod_matmul(a16, b16, q) for _ in range(200)],
        ),
        (
            "mat_inv 8x8 (x200, q=1009)",
            lambda k: [k.mat_inv(m8, q) for _ in range(200)],
        ),
        (
            "minor sweep cauchy 8x4 (x50, q=13)",
            lambda k: [k.first_singular_minor(cauchy, 13, 4) for _ in range(50)],
        ),
        (
            "condition-b full scan (6,3,2) (x20)",
            lambda k: [
                k.condition_b_first_violation(psi632, eta632, locs632, 3631)
                for _ in range(20)
            ],
        ),
        (
            "coefficient search q=11 (budget 20000)",
            lambda k: k.mbr_search(
                4, 1, 11, locs, np.uint64(123) if k is knb else 123, 20000
            ),
        ),
    ]

    print(f"{'kernel':44s} {'numba':>10s} {'numpy':>10s} {'speedup':>9s}")
    for name, runner in cases:
        runner(knb)  # warm the jit once
        t_nb = timed(lambda: runner(knb), args.repeats)
        t_np = timed(lambda: runner(knp), max(1, args.repeats // 2))
        print(f"{name:44s} {t_nb:9.4f}s {t_np:9.4f}s {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
