"""Benchmark the compiled kernel against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from pairboson.kernels import pure

try:
    from pairboson.kernels import _fastkern
except ImportError:
    _fastkern = None


def agreement(n=10000, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, 30.0, n)
    lam = np.exp(-0.5 * r * r)
    args = (r, lam, 2.0, 1.0, 0.7, 0.3)
    a = pure.eval_rows(*args)
    b = _fastkern.eval_rows(*args)
    scale = np.maximum(np.abs(a), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def bench(fn, n, repeats=20):
    rng = np.random.default_rng(1)
    r = rng.uniform(0.0, 30.0, n)
    lam = np.exp(-0.5 * r * r)
    fn(r, lam, 2.0, 1.0, 0.7, 0.3)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(r, lam, 2.0, 1.0, 0.7, 0.3)
    return (time.perf_counter() - t0) / repeats


def main():
    if _fastkern is None:
        print("compiled kernel not built; numpy fallback only")
        return
    print(f"max relative disagreement (n=10000): {agreement():.3e}")
    print(f"{'n':>9} {'numpy [us]':>12} {'cython [us]':>12} {'speedup':>8}")
    for n in (60, 480, 3840, 30720, 245760):
        tp = bench(pure.eval_rows, n)
        tc = bench(_fastkern.eval_rows, n)
        print(f"{n:>9} {tp * 1e6:>12.1f} {tc * 1e6:>12.1f} {tp / tc:>8.2f}")


if __name__ == "__main__":
    main()
