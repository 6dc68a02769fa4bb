#!/usr/bin/env python3
"""Benchmark the compiled core against the numpy fallback.

Times the two hot kernels on representative workloads: DTW distance
over trajectory pairs, and the leave-one-out CV error sweep over a
bandwidth grid. Run after ``pip install -e .``:

    python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from igroup import _core_py
from igroup._streams import stream

try:
    from igroup import _core
except ImportError:
    _core = None


def time_once(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_dtw(mod, trajs):
    def run():
        for i in range(len(trajs)):
            for j in range(i + 1, len(trajs)):
                mod.dtw_cost_len(trajs[i], trajs[j], -1)

    return time_once(run)


def bench_cv(mod, dist, theta, grid):
    def run():
        for b in grid:
            mod.loo_cv_error(dist, theta, float(b), 0, None, None)

    return time_once(run)


def main():
    rng = stream(0, 0)
    trajs = [np.ascontiguousarray(rng.normal(size=(80, 2))) for _ in range(40)]
    k = 1000
    z = rng.normal(size=k)
    theta = rng.normal(size=k)
    dist = np.ascontiguousarray(np.abs(z[:, None] - z[None, :]))
    grid = np.geomspace(0.02, 2.0, 20)

    rows = []
    py_dtw = bench_dtw(_core_py, trajs)
    py_cv = bench_cv(_core_py, dist, theta, grid)
    rows.append(("python", py_dtw, py_cv))
    if _core is not None:
        c_dtw = bench_dtw(_core, trajs)
        c_cv = bench_cv(_core, dist, theta, grid)
        rows.append(("compiled", c_dtw, c_cv))

    print(f"{'backend':<10} {'dtw 780 pairs (80 pts)':>24} {'cv sweep 20 b @ K=1000':>24}")
    for name, t_dtw, t_cv in rows:
        print(f"{name:<10} {t_dtw:>22.3f}s {t_cv:>22.3f}s")
    if _core is not None:
        print(
            f"{'speedup':<10} {py_dtw / c_dtw:>21.1f}x {py_cv / c_cv:>21.1f}x"
        )
    else:
        print("compiled core not built; only the fallback was timed")


if __name__ == "__main__":
    main()
