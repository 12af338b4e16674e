"""Dense bounded-variable revised simplex (primal and dual).

Internally the problem is ``min cost.x`` over structural columns plus one
slack per row (``A x + s = b``).  Every variable is boxed: slacks get the
implied upper bound ``b_i - min_x A_i x`` (finite because all structural
bounds are), which keeps any basis dual feasible after moving nonbasic
variables to the bound that matches the sign of their reduced cost.  The
dual simplex can therefore start from any basis.
"""
from __future__ import annotations

import time

import numpy as np

from .._kernels import AT_LOWER, AT_UPPER, BASIC, kernels
from .model import LpBasis, LpModel, LpSolution

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
ROW_TOL = 1e-7
BOUND_TOL = 1e-9
STALL_LIMIT = 500
REFACTOR_EVERY = 100
MAX_ITER = 10**6


class _Simplex:
    def __init__(self, A, b, c, lb, ub, deadline=None, max_iter=MAX_ITER):
        self.A = A
        self.b = b
        m, n = A.shape
        self.m, self.n = m, n
        self.cost = np.concatenate([-c, np.zeros(m)])
        lo = np.where(A > 0, A * lb, A * ub).sum(axis=1) if m else np.zeros(0)
        self.slack_cap = b - lo
        self.lb = np.concatenate([lb, np.zeros(m)])
        self.ub = np.concatenate([ub, np.maximum(self.slack_cap, 0.0) + 1.0])
        self.deadline = deadline
        self.max_iter = max_iter
        self.iters = 0
        self.bland = False
        self.stall = 0
        self.since_refactor = 0

    # basis handling ------------------------------------------------------
    def column(self, j):
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[j - self.n] = 1.0
        return e

    def basis_matrix(self):
        B = np.zeros((self.m, self.m))
        structural = self.basic < self.n
        B[:, structural] = self.A[:, self.basic[structural]]
        rows = self.basic[~structural] - self.n
        B[rows, np.flatnonzero(~structural)] = 1.0
        return B

    def refactor(self):
        self.Binv = np.linalg.inv(self.basis_matrix())
        self.since_refactor = 0
        self.recompute_primal()

    def extend_inverse(self, warm):
        """Reuse a cached inverse; appended rows enter with their slacks basic:
        inv([[B, 0], [N, I]]) = [[B^-1, 0], [-N B^-1, I]]."""
        k = warm.n_rows
        Binv = np.zeros((self.m, self.m))
        Binv[:k, :k] = warm.binv
        if self.m > k:
            old = warm.basic
            N = np.zeros((self.m - k, k))
            structural = old < self.n
            N[:, structural] = self.A[k:, old[structural]]
            Binv[k:, :k] = -N @ warm.binv
            Binv[k:, k:] = np.eye(self.m - k)
        self.Binv = Binv
        self.since_refactor = warm.age
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()
        else:
            self.recompute_primal()

    def residual(self):
        return np.abs(self.b - self.A @ self.x[:self.n] - self.x[self.n:]).max(initial=0.0)

    def set_basis(self, basic, state):
        self.basic = np.asarray(basic, dtype=np.int64).copy()
        self.state = np.asarray(state, dtype=np.int8).copy()
        self.state[self.basic] = BASIC
        self.x = np.where(self.state == AT_UPPER, self.ub, self.lb).astype(np.float64)

    def slack_basis(self):
        basic = np.arange(self.n, self.n + self.m)
        state = np.full(self.n + self.m, AT_LOWER, dtype=np.int8)
        self.set_basis(basic, state)
        self.Binv = np.eye(self.m)
        self.since_refactor = 0
        self.recompute_primal()

    def recompute_primal(self):
        xn = np.where(self.state == BASIC, 0.0, self.x)
        rhs = self.b - self.A @ xn[:self.n] - xn[self.n:]
        xb = self.Binv @ rhs
        self.x[self.basic] = xb

    def reduced_costs(self):
        y = self.cost[self.basic] @ self.Binv
        d = self.cost - np.concatenate([y @ self.A, y])
        d[self.basic] = 0.0
        return d, y

    def place_nonbasic_for_dual(self, d):
        """Move boxed nonbasic variables to their dual-feasible bound."""
        nb = self.state != BASIC
        to_upper = nb & (d < -DUAL_TOL)
        to_lower = nb & (d > DUAL_TOL)
        self.state[to_upper] = AT_UPPER
        self.state[to_lower] = AT_LOWER
        self.x[nb] = np.where(self.state[nb] == AT_UPPER, self.ub[nb], self.lb[nb])
        self.recompute_primal()

    def primal_infeasibility(self):
        xb = self.x[self.basic]
        return np.maximum(self.lb[self.basic] - xb, xb - self.ub[self.basic])

    def after_pivot(self):
        self.iters += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def out_of_budget(self):
        if self.iters >= self.max_iter:
            return "iteration-limit"
        if self.deadline is not None and self.iters % 25 == 0 and time.perf_counter() > self.deadline:
            return "time-limit"
        return None

    # primal simplex ------------------------------------------------------
    def primal(self):
        while True:
            stop = self.out_of_budget()
            if stop:
                return stop
            d, _ = self.reduced_costs()
            q, direction = kernels.primal_pricing(d, self.state, self.lb, self.ub,
                                                  DUAL_TOL, self.bland)
            if q < 0:
                return "optimal"
            alpha = self.Binv @ self.column(q)
            basic = self.basic
            r, t, to_upper = kernels.primal_ratio(
                alpha, direction, self.x[basic], self.lb[basic], self.ub[basic],
                self.ub[q] - self.lb[q], PIVOT_TOL, basic, self.bland)
            self.x[basic] -= direction * t * alpha
            if r < 0:
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
            else:
                p = basic[r]
                self.x[q] += direction * t
                self.state[p] = AT_UPPER if to_upper else AT_LOWER
                self.x[p] = self.ub[p] if to_upper else self.lb[p]
                self.basic[r] = q
                self.state[q] = BASIC
                kernels.pivot_update(self.Binv, alpha, r)
            self._track_progress(t * abs(d[q]))
            self.after_pivot()

    # dual simplex --------------------------------------------------------
    def dual(self):
        while True:
            stop = self.out_of_budget()
            if stop:
                return stop
            infeas = self.primal_infeasibility()
            if self.bland:
                cand = np.flatnonzero(infeas > FEAS_TOL)
                if cand.size == 0:
                    return "optimal"
                r = int(cand[np.argmin(self.basic[cand])])
            else:
                r = int(np.argmax(infeas)) if self.m else 0
                if self.m == 0 or infeas[r] <= FEAS_TOL:
                    return "optimal"
            p = self.basic[r]
            need_increase = self.x[p] < self.lb[p]
            d, _ = self.reduced_costs()
            rho = self.Binv[r]
            alpha_row = np.concatenate([rho @ self.A, rho])
            alpha_row[self.basic] = 0.0
            q = kernels.dual_ratio(alpha_row, d, self.state, self.lb, self.ub,
                                   need_increase, PIVOT_TOL, DUAL_TOL, self.bland)
            if q < 0:
                if self.since_refactor:
                    self.refactor()
                    continue
                return "infeasible"
            alpha = self.Binv @ self.column(q)
            if abs(alpha[r] - alpha_row[q]) > 1e-7 * (1.0 + abs(alpha[r])) and self.since_refactor:
                self.refactor()
                continue
            target = self.lb[p] if need_increase else self.ub[p]
            delta = (self.x[p] - target) / alpha[r]
            self.x[self.basic] -= delta * alpha
            self.x[q] += delta
            self.x[p] = target
            self.state[p] = AT_LOWER if need_increase else AT_UPPER
            self.basic[r] = q
            self.state[q] = BASIC
            kernels.pivot_update(self.Binv, alpha, r)
            self._track_progress(abs(delta * d[q]))
            self.after_pivot()

    def _track_progress(self, gain):
        if gain <= 1e-12:
            self.stall += 1
            if self.stall >= STALL_LIMIT:
                self.bland = True
        else:
            self.stall = 0

    # driver --------------------------------------------------------------
    def dual_feasible(self, d):
        nb = self.state != BASIC
        free = self.ub > self.lb
        bad = nb & free & (((self.state == AT_LOWER) & (d < -DUAL_TOL))
                           | ((self.state == AT_UPPER) & (d > DUAL_TOL)))
        return not bad.any()

    def run(self, warm: LpBasis | None):
        if np.any(self.slack_cap < -ROW_TOL):
            return "infeasible"
        if warm is not None and warm.n_cols == self.n and warm.n_rows <= self.m:
            extra = np.arange(self.n + warm.n_rows, self.n + self.m)
            old_state = warm.state
            state = np.full(self.n + self.m, AT_LOWER, dtype=np.int8)
            state[:self.n] = old_state[:self.n]
            state[self.n:self.n + warm.n_rows] = old_state[self.n:]
            basic = np.concatenate([warm.basic, extra])
            self.set_basis(basic, state)
            if warm.binv is not None and warm.binv.shape == (warm.n_rows, warm.n_rows):
                self.extend_inverse(warm)
            else:
                try:
                    self.refactor()
                except np.linalg.LinAlgError:
                    self.slack_basis()
            d, _ = self.reduced_costs()
            self.place_nonbasic_for_dual(d)
            status = self.dual()
        else:
            self.slack_basis()
            if self.primal_infeasibility().max(initial=0.0) <= FEAS_TOL:
                status = self.primal()
            else:
                d, _ = self.reduced_costs()
                self.place_nonbasic_for_dual(d)
                status = self.dual()
        if status != "optimal":
            return status
        # polish: fresh factorization, then clean up any residual infeasibility
        for attempt in range(5):
            if attempt or self.since_refactor:
                self.recompute_primal()
                if attempt or self.residual() > ROW_TOL * 1e-2:
                    self.refactor()
            d, _ = self.reduced_costs()
            if self.primal_infeasibility().max(initial=0.0) > FEAS_TOL:
                self.place_nonbasic_for_dual(d)
                status = self.dual()
            elif not self.dual_feasible(d):
                status = self.primal()
            else:
                return "optimal"
            if status != "optimal":
                return status
        return "optimal"


def lp_solve(model: LpModel, warm: LpBasis | None = None, lb=None, ub=None,
             deadline: float | None = None, max_iter: int = MAX_ITER) -> LpSolution:
    """Maximize the model's objective; ``lb``/``ub`` override column bounds.

    ``warm`` is the basis of an earlier solve of the same columns with a
    prefix of the current rows.  ``deadline`` is a ``time.perf_counter()``
    timestamp.
    """
    lb = model.lb if lb is None else np.asarray(lb, dtype=np.float64)
    ub = model.ub if ub is None else np.asarray(ub, dtype=np.float64)
    n = model.n_cols
    if np.any(lb > ub + BOUND_TOL):
        return LpSolution("infeasible", np.full(n, np.nan), -np.inf)
    A = np.ascontiguousarray(model.A)
    b = model.b
    sx = _Simplex(A, b, model.c, lb, ub, deadline, max_iter)
    status = sx.run(warm)
    if status == "infeasible":
        return LpSolution(status, np.full(n, np.nan), -np.inf, iterations=sx.iters)
    values = np.clip(sx.x[:n], lb, ub)
    basis = LpBasis(sx.basic.copy(), sx.state.copy(), n, sx.m, sx.Binv, sx.since_refactor)
    obj = float(model.c @ values)
    duals = reduced = None
    if status == "optimal":
        d, y = sx.reduced_costs()
        duals, reduced = -y, -d[:n]
    return LpSolution(status, values, obj, basis, sx.iters, duals, reduced)
