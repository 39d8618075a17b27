"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times batch mode seeking, Epanechnikov seeking, tight connected components,
and an end-to-end clustering run on synthetic mixtures.  Run from the repo
root after an editable install:

    python benchmarks/bench_backends.py [--sizes 1000 3000] [--repeats 3]
"""

import argparse
import os
import time

import numpy as np

from modeseek import Kernel, MsConfig, ms_cluster
from modeseek import _kernels
from modeseek._kernels import pure


def mixture(rng, n):
    k = 4
    centers = rng.uniform(-8, 8, size=(k, 2))
    labels = rng.integers(0, k, size=n)
    return centers[labels] + 0.4 * rng.normal(size=(n, 2))


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[1000, 3000])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    compiled = _kernels.compiled
    if compiled is None:
        print("compiled extension unavailable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    print(f"active backend: {_kernels.BACKEND}; "
          f"threads cap: {os.environ.get('MODESEEK_THREADS', '(unset)')}")
    header = f"{'benchmark':<34}{'N':>6}{'compiled':>12}{'pure':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))

    for n in args.sizes:
        X = mixture(rng, n)
        seeds = X.copy()
        cases = [
            (
                "gaussian seek (all points)",
                lambda b: b.seek_gaussian(X, seeds, 0.8, None, 1e-6, 2000),
            ),
            (
                "epanechnikov seek (all points)",
                lambda b: b.seek_epanechnikov(X, seeds, 1.2, None, 2000),
            ),
        ]
        endpoints, _, _ = compiled.seek_gaussian(X, seeds, 0.8, None, 1e-6, 2000)
        cases.append(
            ("tight components on endpoints", lambda b: b.cc_tight_labels(endpoints, 0.008))
        )
        for name, fn in cases:
            tc = timeit(lambda: fn(compiled), args.repeats)
            tp = timeit(lambda: fn(pure), args.repeats)
            print(f"{name:<34}{n:>6}{tc:>11.3f}s{tp:>11.3f}s{tp / tc:>8.1f}x")

        # end-to-end: force each backend through the seek entry point
        def cluster_with(backend):
            old = _kernels.seek_gaussian
            _kernels.seek_gaussian = backend.seek_gaussian
            try:
                return ms_cluster(X, Kernel.GAUSSIAN, 0.8, MsConfig(tol=1e-6))
            finally:
                _kernels.seek_gaussian = old

        tc = timeit(lambda: cluster_with(compiled), args.repeats)
        tp = timeit(lambda: cluster_with(pure), args.repeats)
        print(f"{'ms_cluster end to end':<34}{n:>6}{tc:>11.3f}s{tp:>11.3f}s{tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
