"""Benchmark the compiled kernels against the pure NumPy fallback.

Usage: python benchmarks/bench_backends.py [--quick]

Times the two hot kernels (batch pursuit and the 4-index block scan) on
learner-sized workloads and prints one table row per case.
"""

import argparse
import itertools
import time

import numpy as np

from shiftadd import _kernels_py
from shiftadd.factors import catalog_hadamard4

try:
    from shiftadd import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def omp_case(rng, n, atoms, cols, s):
    d = rng.normal(size=(n, atoms))
    d /= np.linalg.norm(d, axis=0)
    y = rng.normal(size=(n, cols))
    gram = np.ascontiguousarray(d.T @ d)
    corr = np.ascontiguousarray(d.T @ y)
    return lambda impl: impl.omp_batch(gram, corr, s)


def scan_case(rng, n, num_tuples):
    z = rng.normal(size=(n, n))
    tuples = np.array(
        [sorted(rng.choice(n, size=4, replace=False).tolist()) for _ in range(num_tuples)],
        dtype=np.int64,
    )
    cat = np.ascontiguousarray(
        np.stack([c.ravel() for c in catalog_hadamard4()])
    )
    return lambda impl: impl.hadamard4_scan(z, np.ascontiguousarray(tuples), cat)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    if args.quick:
        cases = [
            ("omp n=32 atoms=32 cols=1024 s=4", omp_case(rng, 32, 32, 1024, 4)),
            ("scan n=32 tuples=5000 cands=576", scan_case(rng, 32, 5000)),
        ]
    else:
        cases = [
            ("omp n=64 atoms=64 cols=4096 s=4", omp_case(rng, 64, 64, 4096, 4)),
            ("omp n=64 atoms=64 cols=12288 s=8", omp_case(rng, 64, 64, 12288, 8)),
            ("scan n=64 tuples=20000 cands=576", scan_case(rng, 64, 20000)),
            ("scan n=64 tuples=150000 cands=576", scan_case(rng, 64, 150000)),
        ]

    header = f"{'case':40s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, case in cases:
        t_py = best_of(lambda: case(_kernels_py))
        if _kernels is None:
            print(f"{name:40s} {t_py * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_c = best_of(lambda: case(_kernels))
        print(
            f"{name:40s} {t_py * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms "
            f"{t_py / t_c:7.1f}x"
        )


if __name__ == "__main__":
    main()
