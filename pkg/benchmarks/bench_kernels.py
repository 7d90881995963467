#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Workload sizes mirror the pipeline: 10,000-sample segments, a 420x22
training matrix, 105 test queries. Run as:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from afdetect.kernels import _numba, _numpy
from afdetect import dsp


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)

    f = dsp.design_butterworth_lowpass(4, 0.5, 125.0)
    nf = max(f.numerator.shape[0], f.denominator.shape[0])
    b = np.zeros(nf)
    a = np.zeros(nf)
    b[:f.numerator.shape[0]] = f.numerator
    a[:f.denominator.shape[0]] = f.denominator
    x = rng.normal(size=10054)
    zi = np.zeros(nf - 1)

    sig = rng.normal(size=10000)
    approx, detail = _numpy.dwt_periodic(sig, dsp.DB4_LO, dsp.DB4_HI)

    X = rng.normal(size=(420, 22))
    y = rng.integers(0, 2, size=420).astype(np.uint8)

    train = np.ascontiguousarray(rng.normal(size=(420, 11)))
    labels = rng.integers(0, 2, size=420).astype(np.uint8)
    queries = np.ascontiguousarray(rng.normal(size=(105, 11)))

    cases = [
        ("lfilter 10k order-4", 5,
         lambda impl: impl.lfilter(b, a, x, zi)),
        ("dwt_periodic 10k", 50,
         lambda impl: impl.dwt_periodic(sig, dsp.DB4_LO, dsp.DB4_HI)),
        ("idwt_periodic 10k", 50,
         lambda impl: impl.idwt_periodic(approx, detail, dsp.DB4_LO, dsp.DB4_HI)),
        ("best_split 420x22", 20,
         lambda impl: impl.best_split(X, y, 1)),
        ("knn_votes 105x420x11", 20,
         lambda impl: impl.knn_af_votes(train, labels, queries, 1)),
    ]

    # trigger jit compilation outside the timed region
    for _, _, fn in cases:
        fn(_numba)

    print(f"{'kernel':<24}{'numba':>12}{'numpy':>12}{'speedup':>9}")
    for name, repeats, fn in cases:
        t_nb = timeit(lambda: fn(_numba), repeats)
        t_np = timeit(lambda: fn(_numpy), repeats)
        print(f"{name:<24}{t_nb * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms"
              f"{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
