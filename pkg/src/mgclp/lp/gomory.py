"""Gomory mixed-integer cuts read off an optimal simplex tableau."""
from __future__ import annotations

import numpy as np

from .._kernels import AT_LOWER, AT_UPPER, BASIC
from .model import LpModel, LpSolution

MIN_FRAC = 0.01
MAX_DYNAMISM = 1e6


def _basis_inverse(model: LpModel, basis) -> np.ndarray:
    if basis.binv is not None and basis.binv.shape == (model.n_rows, model.n_rows):
        return basis.binv
    m, n = model.n_rows, model.n_cols
    B = np.zeros((m, m))
    structural = basis.basic < n
    B[:, structural] = model.A[:, basis.basic[structural]]
    B[basis.basic[~structural] - n, np.flatnonzero(~structural)] = 1.0
    return np.linalg.inv(B)


def gomory_cuts(model: LpModel, sol: LpSolution, integer: np.ndarray, lb: np.ndarray,
                ub: np.ndarray, max_cuts: int = 50) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """GMI rows ``val . x[idx] <= rhs`` violated by ``sol``.

    ``integer`` flags structural columns that must take integer values and
    ``lb``/``ub`` are the bounds the cuts must be valid for.  Slacks and
    non-integer columns are treated as continuous.
    """
    basis = sol.basis
    if basis is None or basis.n_rows != model.n_rows or model.n_rows == 0:
        return []
    A, b = model.A, model.b
    m, n = A.shape
    x = sol.values
    state = basis.state
    nonbasic = state != BASIC
    # a slack resting at its artificial upper bound would make the
    # complemented form meaningless
    if np.any(state[n:] == AT_UPPER):
        return []
    cand = [r for r in range(m) if basis.basic[r] < n and integer[basis.basic[r]]]
    fracs = {r: x[basis.basic[r]] - np.floor(x[basis.basic[r]]) for r in cand}
    cand = [r for r in cand if MIN_FRAC <= fracs[r] <= 1.0 - MIN_FRAC]
    cand.sort(key=lambda r: (abs(fracs[r] - 0.5), r))
    if not cand:
        return []
    Binv = _basis_inverse(model, basis)
    fixed = np.concatenate([ub - lb <= 0.0, np.zeros(m, dtype=bool)])
    use = nonbasic & ~fixed
    upper = np.concatenate([state[:n] == AT_UPPER, np.zeros(m, dtype=bool)])
    is_int = np.concatenate([integer & (lb == np.round(lb)) & (ub == np.round(ub)),
                             np.zeros(m, dtype=bool)])
    cuts = []
    for r in cand[:max_cuts]:
        rho = Binv[r]
        alpha = np.concatenate([rho @ A, rho])
        a = np.where(upper, -alpha, alpha)
        a[~use] = 0.0
        f0 = fracs[r]
        fj = a - np.floor(a)
        g = np.where(is_int, np.minimum(fj / f0, (1.0 - fj) / (1.0 - f0)),
                     np.where(a >= 0.0, a / f0, -a / (1.0 - f0)))
        g[~use] = 0.0
        g[np.abs(g) < 1e-12] = 0.0
        # sum g_t t >= 1 with t = x - lb, ub - x or the row slack b - A x
        gs, gx = g[n:], g[:n]
        coef = np.where(upper[:n], -gx, gx) - gs @ A
        rhs = 1.0 + gx[~upper[:n]] @ lb[~upper[:n]] - gx[upper[:n]] @ ub[upper[:n]] - gs @ b
        # as a <= row: -coef . x <= -rhs; tiny entries are relaxed away safely
        val = -coef
        big = np.abs(val).max(initial=0.0)
        if big <= 0.0:
            continue
        tiny = (np.abs(val) < 1e-9 * big) & (val != 0.0)
        slack = np.where(val[tiny] > 0, val[tiny] * lb[tiny], val[tiny] * ub[tiny])
        out_rhs = -rhs - slack.sum()
        val[tiny] = 0.0
        idx = np.flatnonzero(val)
        if idx.size == 0:
            continue
        mags = np.abs(val[idx])
        if mags.max() / mags.min() > MAX_DYNAMISM:
            continue
        scale = 1.0 / mags.max()
        vals, out_rhs = val[idx] * scale, out_rhs * scale
        if vals @ x[idx] - out_rhs <= 1e-6:
            continue
        cuts.append((idx, vals, float(out_rhs)))
    return cuts
