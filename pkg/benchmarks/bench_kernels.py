"""Compare the compiled and pure-Python Cholesky backends.

Two measurements:

* ``logdet_principal`` on random principal submatrices of a 12 x 12 SPD
  matrix, timed in-process against both kernel modules directly;
* an end-to-end greedy search (8 variables, 500 rows, 10 restarts), timed in
  a subprocess per backend so import-time selection is exercised.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat R]``
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gaussdag._kernels import _pykernels

try:
    from gaussdag._kernels import _ckernels
except ImportError:
    _ckernels = None

SEARCH_SNIPPET = """
import time, numpy as np
from gaussdag import _kernels
from gaussdag.dag import Dag
from gaussdag.data import Dataset
from gaussdag.prior import default_prior
from gaussdag.score import ScoreContext
from gaussdag.search import SearchConfig, greedy_hill_climb
rng = np.random.default_rng(0)
n, N = 8, 500
A = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.3)
x = rng.normal(size=(N, n)) @ np.linalg.inv(np.eye(n) - np.tril(A, -1)).T
ctx = ScoreContext.from_dataset(default_prior(n), Dataset(tuple(f"X{i}" for i in range(n)), x))
t = time.perf_counter()
res = greedy_hill_climb(ctx, SearchConfig(restarts=10, seed=1))
print(_kernels.BACKEND, time.perf_counter() - t, repr(res.score))
"""


def bench_logdet(repeat: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    a = rng.normal(size=(12, 12))
    a = np.ascontiguousarray(a @ a.T + 12 * np.eye(12))
    subsets = [np.sort(rng.choice(12, size=rng.integers(1, 7), replace=False)).astype(np.intp)
               for _ in range(200)]
    out = {}
    mods = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    for name, mod in mods:
        fn = mod.logdet_principal
        t = min(timeit.repeat(lambda: [fn(a, s, 1e-12) for s in subsets], number=5, repeat=repeat))
        out[name] = t / (5 * len(subsets))
    return out


def bench_search() -> dict[str, tuple[float, str]]:
    out = {}
    for flag in ("", "1"):
        env = dict(os.environ, GAUSSDAG_PURE_PYTHON=flag)
        proc = subprocess.run([sys.executable, "-c", SEARCH_SNIPPET], env=env,
                              capture_output=True, text=True, check=True)
        backend, seconds, score = proc.stdout.split()
        out[backend] = (float(seconds), score)
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    per_call = bench_logdet(args.repeat)
    print("logdet_principal, mean per call (subsets of size 1-6 from 12x12):")
    for name, t in per_call.items():
        print(f"  {name:<7} {t * 1e6:9.2f} us")
    if "cython" in per_call:
        print(f"  speedup {per_call['python'] / per_call['cython']:.1f}x")

    search = bench_search()
    print("greedy search, n=8, N=500, 10 restarts:")
    for name, (t, score) in search.items():
        print(f"  {name:<7} {t:9.3f} s   score {score}")
    if len(search) == 2:
        (tc, sc), (tp, sp) = search.get("cython", (None, None)), search["python"]
        if tc is not None:
            print(f"  speedup {tp / tc:.1f}x; scores identical: {sc == sp}")


if __name__ == "__main__":
    main()
