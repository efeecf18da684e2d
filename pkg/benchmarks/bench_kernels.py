"""Benchmark: compiled kernels vs the pure-numpy fallback.

Run after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gtv._kernels import _py

try:
    from gtv._kernels import _core
except ImportError:
    _core = None


def time_call(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_enet_cd(mod, n=400, p=200, sweeps=200):
    rng = np.random.default_rng(0)
    X = np.asfortranarray(rng.standard_normal((n, p)))
    y = np.ascontiguousarray(rng.standard_normal(n))

    def run():
        beta = np.zeros(p)
        mod.enet_cd(X, y, 0.05, 0.01, beta, sweeps, 0.0)

    return time_call(run)


def bench_pav(mod, size=200_000):
    rng = np.random.default_rng(1)
    v = rng.standard_normal(size)

    def run():
        mod.pav_nonincreasing(v)

    return time_call(run)


def main():
    rows = []
    for name, fn in [("enet_cd (400x200, 200 sweeps)", bench_enet_cd),
                     ("pav (200k)", bench_pav)]:
        py_t = fn(_py)
        if _core is not None:
            cy_t = fn(_core)
            rows.append((name, py_t, cy_t, py_t / cy_t))
        else:
            rows.append((name, py_t, float("nan"), float("nan")))
    print(f"{'kernel':<32}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, py_t, cy_t, speedup in rows:
        print(f"{name:<32}{py_t:>12.4f}{cy_t:>12.4f}{speedup:>10.1f}")
    if _core is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
