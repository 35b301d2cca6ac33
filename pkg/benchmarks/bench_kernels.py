"""Benchmark the compiled kernels against their pure numpy/Python fallbacks.

Run:  python benchmarks/bench_kernels.py
The active path is whatever TOOLTRACK_NUMBA selects; rows labeled "fallback"
always time the pure-Python/numpy implementations directly, so the table is
a side-by-side comparison when numba is on.
"""

import time

import numpy as np

from tooltrack import kernels
from tooltrack.kernels import (
    _fit_tree_py,
    _iou_matrix_numpy,
    _lap_solve_py,
    _min_euclidean_numpy,
)


def timeit(fn, *args, repeat=5, number=20):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def main():
    rng = np.random.default_rng(0)
    kernels.warmup()

    rows = []

    cost = rng.uniform(0, 100, (64, 64))
    rows.append(("lap_solve 64x64", timeit(kernels.lap_solve, cost),
                 timeit(_lap_solve_py, cost, number=2)))

    gallery = rng.normal(0, 1, (30, 128))
    query = rng.normal(0, 1, 128)
    rows.append(("min_euclidean 30x128",
                 timeit(kernels.min_euclidean, gallery, query, number=2000),
                 timeit(_min_euclidean_numpy, gallery, query, number=2000)))

    a = np.column_stack([rng.uniform(0, 1000, (200, 2)), rng.uniform(10, 80, (200, 2))])
    b = np.column_stack([rng.uniform(0, 1000, (200, 2)), rng.uniform(10, 80, (200, 2))])
    rows.append(("iou_matrix 200x200", timeit(kernels.iou_matrix, a, b),
                 timeit(_iou_matrix_numpy, a, b)))

    n, F = 80, 8
    X = rng.normal(0, 1, (n, F))
    y = (X[:, 0] + 0.5 * rng.normal(0, 1, n) > 0).astype(np.int64)
    idx = rng.integers(0, n, n).astype(np.int64)
    pool = np.argsort(rng.random((2 * n + 1, F)), axis=1)[:, :3].astype(np.int64)
    rows.append(("fit_tree 80x8",
                 timeit(kernels.fit_tree, X, y, idx, pool, 1, 0, number=200),
                 timeit(_fit_tree_py, X, y, idx, pool, 1, 0, number=5)))

    print(f"numba enabled: {kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<22}{'active (ms)':>14}{'fallback (ms)':>16}{'speedup':>10}")
    for name, fast, slow in rows:
        print(f"{name:<22}{1e3 * fast:>14.4f}{1e3 * slow:>16.4f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
