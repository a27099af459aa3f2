"""Timing comparison of the compiled SGD core against the numpy fallback.

Run from the repository root after an editable install:

    python3 benchmarks/bench_core.py
"""

import time

import numpy as np

from spheresgd import BACKEND, ExpDecaySchedule, sample_uniform_sphere
from spheresgd._core import fallback

KIND_NTK = 1


def bench(fn, x, y, etas, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(x, y, etas, KIND_NTK, 2, np.zeros(0))
        best = min(best, time.perf_counter() - start)
    return best


def main():
    if BACKEND != "cython":
        print(f"active backend is {BACKEND!r}; compiled core unavailable, timing fallback only")
    from spheresgd import _core

    d = 50
    rng = np.random.default_rng(0)
    print(f"{'n':>6}  {'fallback':>10}  {'compiled':>10}  {'speedup':>8}")
    for n in (500, 1000, 2000):
        x = sample_uniform_sphere(d, n, rng)
        y = rng.standard_normal(n)
        etas = ExpDecaySchedule(0.2, n).step_sizes()
        t_fb = bench(fallback.run_sgd, x, y, etas)
        if BACKEND == "cython":
            t_cy = bench(_core.run_sgd, x, y, etas)
            a = _core.run_sgd(x, y, etas, KIND_NTK, 2, np.zeros(0))
            b = fallback.run_sgd(x, y, etas, KIND_NTK, 2, np.zeros(0))
            assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))
            print(f"{n:>6}  {t_fb:>9.4f}s  {t_cy:>9.4f}s  {t_fb / t_cy:>7.1f}x")
        else:
            print(f"{n:>6}  {t_fb:>9.4f}s  {'-':>10}  {'-':>8}")


if __name__ == "__main__":
    main()
