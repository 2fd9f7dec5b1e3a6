#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the four hot kernels on representative workloads and prints one row
per kernel with the speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from metricsearch.kernels import _pykernels as pk  # noqa: E402

try:
    from metricsearch.kernels import _ckernels as ck
except ImportError:
    ck = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(rng):
    words = ["".join(rng.choice(list("acgt"), size=int(rng.integers(4, 14))))
             for _ in range(2000)]
    query = "gattacagat"

    x = rng.uniform(size=(5000, 20))
    q = rng.uniform(size=20)

    h = rng.integers(0, 4, size=(5000, 32)).astype(np.uint32)
    qh = rng.integers(0, 4, size=32).astype(np.uint32)

    n = 66
    pts = rng.uniform(size=(n, 2))
    cost = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    supplies = []
    for _ in range(20):
        a = rng.dirichlet(np.ones(n))
        b = rng.dirichlet(np.ones(n))
        supplies.append(a - b)

    dist16 = np.sqrt(((pts[:16, None] - pts[None, :16]) ** 2).sum(-1))
    w16 = rng.dirichlet(np.ones(16))
    grid = np.geomspace(0.01, 1.0, 16)

    return {
        "levenshtein_many (2000 words)": lambda impl: impl.levenshtein_many(words, query),
        "euclidean_to_many (5000x20)": lambda impl: impl.euclidean_to_many(x, q),
        "hamming_to_many (5000x32)": lambda impl: impl.hamming_to_many(h, qh),
        "solve_transport (n=66, 20 solves)": lambda impl: [
            impl.solve_transport(cost, s) for s in supplies],
        "exact_alpha_enumeration (n=16)": lambda impl: impl.exact_alpha_enumeration(
            dist16, w16, grid),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    print(f"{'kernel':<36} {'python':>10} {'compiled':>10} {'speedup':>9}")
    print("-" * 68)
    for name, runner in cases.items():
        t_py = timeit(lambda: runner(pk), args.repeat)
        if ck is None:
            print(f"{name:<36} {t_py * 1e3:>8.2f}ms {'-':>10} {'-':>9}")
            continue
        t_c = timeit(lambda: runner(ck), args.repeat)
        print(f"{name:<36} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
              f"{t_py / t_c:>8.1f}x")
    if ck is None:
        print("\ncompiled backend not built; run `python setup.py build_ext --inplace`")
    return 0


if __name__ == "__main__":
    sys.exit(main())
