#!/usr/bin/env python3
"""Time the numba kernels against the numpy fallback.

Kernel timings run in-process on random data of pmed-like sizes.  With
--solve, a full branch-and-cut run on a synthetic 100-vertex graph is timed
in two subprocesses, one per backend (the backend is fixed at import time).

    python3 benchmarks/bench_kernels.py --repeat 200 --solve
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from mgclp._kernels import AT_LOWER, AT_UPPER, BASIC, numba_kernels, numpy_kernels

ROOT = Path(__file__).resolve().parent.parent


def _inputs(rng, n_loc, n_cust, m, n):
    f = rng.random((n_loc, n_cust))
    f[rng.random(f.shape) < 0.8] = 0.0
    w = np.ones(n_cust)
    state = rng.choice([BASIC, AT_LOWER, AT_UPPER], n)
    lb, ub = np.zeros(n), np.ones(n)
    B = rng.normal(size=(m, m)) + m * np.eye(m)
    return {
        "marginal_gains": (f, w, 0.2, rng.random(n_cust), rng.random(n_cust)),
        "chain_gains": (f, w, 0.2, 20),
        "dominated": ((rng.integers(0, 4, (n_loc, n_cust)) / 3.0),),
        "primal_pricing": (rng.normal(size=n), state, lb, ub, 1e-9, False),
        "primal_ratio": (rng.normal(size=m), 1, rng.random(m), np.zeros(m), np.ones(m), 1.0,
                         1e-9, np.arange(m), False),
        "dual_ratio": (rng.normal(size=n), np.abs(rng.normal(size=n)), state, lb, ub, True,
                       1e-9, 1e-9, False),
        "pivot_update": (np.linalg.inv(B), rng.normal(size=m) + 1.0, 0),
    }


def time_kernel(fn, args, repeat):
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])  # compile / warm up
    best = np.inf
    for _ in range(repeat):
        fresh = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t = time.perf_counter()
        fn(*fresh)
        best = min(best, time.perf_counter() - t)
    return best


def time_solve(disable: str, K: int, seed: int) -> tuple[float, str]:
    code = (
        "import sys, time; sys.path.insert(0, 'tests');"
        "from conftest import synthetic_graph;"
        "from mgclp.bnc import solve;"
        "from mgclp.instance_io import CoverageParams, all_pairs_shortest_paths, build_coverage;"
        f"g = synthetic_graph(100, 200, {K}, seed={seed});"
        f"inst = build_coverage(all_pairs_shortest_paths(g), CoverageParams(5, 20, 0.2), {K});"
        "solve(inst.with_budget(2));"  # warm up jit
        "t = time.perf_counter(); rep = solve(inst);"
        "print(time.perf_counter() - t, rep.z_star)"
    )
    env = dict(os.environ, MGCLP_DISABLE_NUMBA=disable)
    out = subprocess.run([sys.executable, "-c", code], cwd=ROOT, env=env, check=True,
                         capture_output=True, text=True)
    secs, z = out.stdout.split()
    return float(secs), z


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=100)
    p.add_argument("--rows", type=int, default=1000, help="LP rows for the simplex kernels")
    p.add_argument("--solve", action="store_true", help="also time a full solve per backend")
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--seed", type=int, default=3)
    args = p.parse_args(argv)
    if numba_kernels is None:
        sys.exit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    inputs = _inputs(rng, 100, 100, args.rows, 3 * args.rows)
    print(f"{'kernel':<16} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, kargs in inputs.items():
        t_np = time_kernel(getattr(numpy_kernels, name), kargs, args.repeat)
        t_nb = time_kernel(getattr(numba_kernels, name), kargs, args.repeat)
        print(f"{name:<16} {t_np * 1e6:10.1f} {t_nb * 1e6:10.1f} {t_np / t_nb:8.2f}")

    if args.solve:
        t_np, z_np = time_solve("1", args.K, args.seed)
        t_nb, z_nb = time_solve("0", args.K, args.seed)
        print(f"solve K={args.K}: numpy {t_np:.2f}s  numba {t_nb:.2f}s  "
              f"(z* {z_np} / {z_nb})")


if __name__ == "__main__":
    main()
