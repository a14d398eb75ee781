#!/usr/bin/env python3
"""Compiled against numpy kernels on the workloads the package runs.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-repeat time of each backend,
the speedup, and the largest relative difference between the outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from harnacklab import _kernels_py

try:
    from harnacklab import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def flat(out):
    parts = out if isinstance(out, tuple) else (out,)
    return np.concatenate([np.ravel(v) for v in parts])


def workloads(rng):
    pts3 = rng.uniform(-1, 1, (4096, 3))
    w = rng.random(4096)
    grid2 = rng.uniform(-1, 1, (4096, 2))
    poles = rng.uniform(2, 3, (200, 2))
    return [
        ("pairwise_power 2048x4096 d=3 (capacity rows)",
         lambda m: m.pairwise_power(pts3[:2048], pts3, -2.0, 0.0)),
        ("potential 4096x4096 d=3 (equilibrium potential)",
         lambda m: m.potential(pts3, pts3, w, -2.0, 0.0)),
        ("minmax 200 poles x 4096 grid d=2 (Harnack sweep)",
         lambda m: m.minmax_weighted_power(grid2, w, poles, -2.0)),
    ]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    for name, run in workloads(rng):
        t_py, out_py = best_of(lambda: run(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name}: numpy {t_py * 1e3:.1f} ms")
            continue
        t_c, out_c = best_of(lambda: run(compiled), args.repeat)
        a, b = flat(out_py), flat(out_c)
        finite = np.isfinite(a)
        rel = np.max(np.abs(a[finite] - b[finite]) / np.maximum(np.abs(a[finite]), 1e-300))
        print(f"{name}: numpy {t_py * 1e3:.1f} ms, cython {t_c * 1e3:.1f} ms, "
              f"speedup {t_py / t_c:.1f}x, max rel diff {rel:.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
