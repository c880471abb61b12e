"""Benchmark the compiled kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import sys
import time

import numpy as np

from leadtime.kernels import pure

try:
    from leadtime.kernels import _speedups
except ImportError:
    print("compiled extension is not built; run `pip install -e .` first")
    sys.exit(1)


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_best_split(n, d, repeats):
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = rng.normal(size=n)
    rows = np.arange(n, dtype=np.int64)
    cols = np.arange(d, dtype=np.int64)
    args = (X, y, rows, cols, 1)
    assert _speedups.best_split(*args) == pure.best_split(*args)
    return (
        f"best_split (n={n}, d={d})",
        _best_of(lambda: pure.best_split(*args), repeats),
        _best_of(lambda: _speedups.best_split(*args), repeats),
    )


def bench_grow_tree(n, d, depth, m, repeats):
    rng = np.random.default_rng(1)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = rng.normal(size=n) + 3.0 * (X[:, 0] > 0) + X[:, 1] ** 2
    rows = np.arange(n, dtype=np.int64)
    args = (X, y, rows, depth, 2, m, 42)
    return (
        f"grow_tree (n={n}, d={d}, depth={depth}, m={m})",
        _best_of(lambda: pure.grow_tree(*args), repeats),
        _best_of(lambda: _speedups.grow_tree(*args), repeats),
    )


def bench_boost_stage(n, d, depth, repeats):
    rng = np.random.default_rng(2)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = rng.normal(size=n) + 2.0 * (X[:, 2] > 0.5)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.int64)
    dense_args = (X, y, order, depth, 1)
    generic_args = (X, y, np.arange(n, dtype=np.int64), depth, 1, d, 0)
    return (
        f"boost stage (n={n}, d={d}, depth={depth})",
        _best_of(lambda: pure.grow_tree(*generic_args), repeats),
        _best_of(lambda: _speedups.grow_tree_dense(*dense_args), repeats),
    )


def bench_cd_sweep(n, d, sweeps, repeats):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    G = np.ascontiguousarray(X.T @ X)
    c = np.ascontiguousarray(X.T @ y)

    def run(backend):
        w = np.zeros(d)
        for _ in range(sweeps):
            backend.cd_sweep(G, c, w, 0.5, 0.1)

    return (
        f"cd_sweep x{sweeps} (d={d})",
        _best_of(lambda: run(pure), repeats),
        _best_of(lambda: run(_speedups), repeats),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    if args.quick:
        cases = [
            bench_best_split(5_000, 20, 3),
            bench_grow_tree(5_000, 20, 12, 7, 3),
            bench_boost_stage(5_000, 40, 4, 3),
            bench_cd_sweep(500, 80, 50, 3),
        ]
    else:
        cases = [
            bench_best_split(50_000, 40, 3),
            bench_grow_tree(20_000, 60, 18, 20, 3),
            bench_boost_stage(20_000, 110, 5, 3),
            bench_cd_sweep(2_000, 200, 200, 3),
        ]

    width = max(len(name) for name, *_ in cases)
    print(f"{'kernel':<{width}}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, pure_s, compiled_s in cases:
        print(
            f"{name:<{width}}  {pure_s * 1e3:>8.1f}ms  {compiled_s * 1e3:>8.1f}ms  "
            f"{pure_s / compiled_s:>7.1f}x"
        )


if __name__ == "__main__":
    main()
