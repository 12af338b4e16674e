import os
import subprocess
import sys

import numpy as np
import pytest

from mgclp import _kernels
from mgclp._kernels import AT_LOWER, AT_UPPER, BASIC, numpy_kernels

nb = _kernels.numba_kernels
pytestmark = pytest.mark.skipif(nb is None, reason="numba not installed")


def _coverage(rng, n=12, m=9):
    f = rng.random((n, m))
    f[rng.random((n, m)) < 0.4] = 0.0
    f[rng.random((n, m)) < 0.2] = 1.0
    return f, rng.integers(0, 5, m).astype(float)


def test_marginal_gains_parity(rng):
    for theta in (0.0, 0.2, 1.0):
        f, w = _coverage(rng)
        best, surv = rng.random(9), rng.random(9)
        assert np.allclose(nb.marginal_gains(f, w, theta, best, surv),
                           numpy_kernels.marginal_gains(f, w, theta, best, surv), atol=1e-12)


def test_chain_gains_parity(rng):
    f, w = _coverage(rng)
    for depth in (0, 1, 4):
        assert np.allclose(nb.chain_gains(f, w, 0.3, depth),
                           numpy_kernels.chain_gains(f, w, 0.3, depth), atol=1e-12)


def test_dominated_parity(rng):
    for _ in range(20):
        f = rng.integers(0, 3, (10, 4)) / 2.0
        assert np.array_equal(nb.dominated(f), numpy_kernels.dominated(f))


def _state(rng, n):
    state = rng.choice([BASIC, AT_LOWER, AT_UPPER], n)
    lb = np.zeros(n)
    ub = np.where(rng.random(n) < 0.1, 0.0, 1.0)
    return state, lb, ub


@pytest.mark.parametrize("bland", [False, True])
def test_pricing_and_ratio_parity(rng, bland):
    for _ in range(50):
        n = 15
        d = rng.normal(size=n).round(1)
        state, lb, ub = _state(rng, n)
        assert nb.primal_pricing(d, state, lb, ub, 1e-9, bland) == \
            numpy_kernels.primal_pricing(d, state, lb, ub, 1e-9, bland)
        m = 6
        alpha = rng.normal(size=m).round(1)
        xb = rng.random(m)
        lbb, ubb = np.zeros(m), np.ones(m)
        basic = rng.permutation(20)[:m]
        for direction in (1, -1):
            a = nb.primal_ratio(alpha, direction, xb, lbb, ubb, 1.0, 1e-9, basic, bland)
            b = numpy_kernels.primal_ratio(alpha, direction, xb, lbb, ubb, 1.0, 1e-9, basic, bland)
            assert a[0] == b[0] and a[2] == b[2] and a[1] == pytest.approx(b[1], abs=1e-12)
        arow = rng.normal(size=n).round(1)
        for need in (True, False):
            assert nb.dual_ratio(arow, np.abs(d), state, lb, ub, need, 1e-9, 1e-9, bland) == \
                numpy_kernels.dual_ratio(arow, np.abs(d), state, lb, ub, need, 1e-9, 1e-9, bland)


def test_pivot_update_parity(rng):
    B = rng.normal(size=(6, 6)) + 4 * np.eye(6)
    b1, b2 = np.linalg.inv(B), np.linalg.inv(B)
    alpha = rng.normal(size=6)
    alpha[2] = 1.5
    nb.pivot_update(b1, alpha, 2)
    numpy_kernels.pivot_update(b2, alpha, 2)
    assert np.allclose(b1, b2, atol=1e-12)


def _solve_in_subprocess(disable: str):
    code = ("import sys; sys.path.insert(0, 'tests');"
            "from conftest import synthetic_graph;"
            "from mgclp import _kernels;"
            "from mgclp.bnc import solve;"
            "from mgclp.instance_io import CoverageParams, all_pairs_shortest_paths, build_coverage;"
            "g = synthetic_graph(40, 80, 5, seed=6);"
            "inst = build_coverage(all_pairs_shortest_paths(g), CoverageParams(5, 20, 0.2), 5);"
            "print(_kernels.kernels.name, repr(solve(inst).z_star))")
    env = dict(os.environ, MGCLP_DISABLE_NUMBA=disable)
    root = os.path.dirname(os.path.dirname(__file__))
    out = subprocess.run([sys.executable, "-c", code], env=env, cwd=root, capture_output=True,
                         text=True, timeout=600)
    assert out.returncode == 0, out.stderr
    name, z = out.stdout.split()
    return name, float(z)


def test_env_flag_selects_backend_and_results_agree():
    name1, z1 = _solve_in_subprocess("1")
    name0, z0 = _solve_in_subprocess("0")
    assert (name1, name0) == ("numpy", "numba")
    assert z1 == pytest.approx(z0, abs=1e-9)
