"""Branch-and-cut driver for the MGCLP formulations."""
from __future__ import annotations

import heapq
import math
import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .cuts import (INT_TOL, VIOLATION_TOL, VarIndex, is_integral, separate_fractional,
                   separate_integer, separate_penalty)
from .evaluator import OpenPlan, objective
from .heuristics import ValueMemo, fractional_primal_heuristic, starting_heuristic
from .instance_io import Instance
from .lp import lp_solve
from .lp.gomory import gomory_cuts
from .lp.build import FORMULATIONS, lp_add_rows, lp_build
from .preprocessing import (FixingMask, UpperBounds, binary_colocation_rule,
                            colocation_position_bound, dominance_filter)

MODES = ("b", "f", "fh", "fhp")
TAILING_TOL = 1e-7
FINE_TOL = 1e-9
GOMORY_STALLS = 5


class ResourceLimitError(RuntimeError):
    """The LP would exceed the configured memory budget."""


@dataclass
class SolverConfig:
    formulation: str = "F4"
    mode: str = "fhp"
    time_limit: float = 600.0
    violation_tol: float = VIOLATION_TOL
    int_tol: float = INT_TOL
    opt_tol: float = 1e-6
    heuristic_every: int = 10
    dominance: bool = True
    binary_rule: bool = True
    position_rule: bool = True
    penalty_cuts: bool = True
    gomory_rounds: int = 20
    inverse_cache_mb: float = 256.0
    max_lp_mb: float = float(os.environ.get("MGCLP_MAX_LP_MB", 4096))

    def __post_init__(self):
        self.formulation = self.formulation.upper()
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")

    @property
    def fractional(self) -> bool:
        return self.mode != "b"

    @property
    def heuristics(self) -> bool:
        return self.mode in ("fh", "fhp")

    @property
    def preprocessing(self) -> bool:
        return self.mode == "fhp"

    @property
    def initialization(self) -> bool:
        return self.mode == "fhp"


@dataclass
class SolveReport:
    instance_name: str
    n_locations: int
    K: int
    n_full: int
    n_partial: int
    formulation: str
    mode: str
    status: str  # optimal | time_limit
    z_star: float
    ub: float
    gap_pct: float
    nodes: int
    t_total: float
    t_root: float
    ub_root: float
    gap_root_pct: float
    t_heur: float
    z_heur: float | None
    gap_heur_pct: float | None
    n_coloc_locations: int
    max_coloc: int
    opened: OpenPlan
    lp_rows: int = 0
    lp_iterations: int = 0
    root_bounds: list = field(default_factory=list)
    fixed_columns: int = 0

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            x = float(x)
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "instance": self.instance_name, "n_locations": self.n_locations,
            "K": self.K, "n_full": self.n_full, "n_partial": self.n_partial,
            "formulation": self.formulation, "mode": self.mode, "status": self.status,
            "z_star": num(self.z_star), "ub": num(self.ub), "gap_pct": num(self.gap_pct),
            "nodes": self.nodes, "t_total": self.t_total, "t_root": self.t_root,
            "ub_root": num(self.ub_root), "gap_root_pct": num(self.gap_root_pct),
            "t_heur": self.t_heur, "z_heur": num(self.z_heur),
            "gap_heur_pct": num(self.gap_heur_pct),
            "n_coloc_locations": self.n_coloc_locations, "max_coloc": self.max_coloc,
            "opened": {str(i): k for i, k in sorted(self.opened.counts.items())},
            "lp_rows": self.lp_rows, "lp_iterations": self.lp_iterations,
            "root_bounds": [num(b) for b in self.root_bounds],
        }


def compute_gaps(ub: float, z_star: float, ub_root: float,
                 z_heur: float | None) -> tuple[float, float, float | None]:
    """Percent gaps (g, g_r, g_H) for a report.

    g = 100 (UB - z*) / z*, g_r likewise with the root bound, and
    g_H = 100 (z* - z_H) / z_H.  With z* = 0 a gap is 0 when the bound is 0
    and infinite otherwise.
    """
    def rel(num, den):
        if abs(den) <= 1e-12:
            return 0.0 if abs(num) <= 1e-12 else math.inf
        return 100.0 * num / den

    g = rel(ub - z_star, z_star)
    g_r = rel(ub_root - z_star, z_star)
    g_h = None if z_heur is None else rel(z_star - z_heur, z_heur)
    return g, g_r, g_h


def branch_select(x_tilde, int_tol: float = INT_TOL):
    """Most fractional variable; ties by location, then copy.

    A 2-D point of shape (locations, K) yields a :class:`VarIndex`, a 1-D
    point yields a flat index.
    """
    x = np.asarray(x_tilde, dtype=np.float64)
    flat = x.ravel()
    frac = flat - np.floor(flat)
    fractional = (frac > int_tol) & (frac < 1.0 - int_tol)
    if not fractional.any():
        raise ValueError("branch_select called on an integral point")
    dist = np.where(fractional, np.round(np.abs(frac - 0.5), 9), np.inf)
    p = int(np.argmin(dist))
    if x.ndim == 2:
        return VarIndex(p // x.shape[1], p % x.shape[1] + 1)
    return p


@dataclass(order=True)
class _Node:
    sort_key: tuple
    fix_one: dict = field(compare=False)  # location -> copies forced open
    fix_zero: dict = field(compare=False)  # location -> first copy forced shut
    bound: float = field(compare=False)
    depth: int = field(compare=False)
    basis: object = field(compare=False, default=None)


class _Solver:
    def __init__(self, inst: Instance, cfg: SolverConfig, progress: TextIO | None,
                 trace: Callable[[int, float, float], None] | None = None):
        self.inst = inst
        self.cfg = cfg
        self.progress = progress
        self.trace = trace
        self.start = time.perf_counter()
        self.deadline = self.start + cfg.time_limit
        self.memo = ValueMemo()
        self.z = -math.inf
        self.plan = OpenPlan()
        self.lp_iters = 0
        self.timed_out = False
        self.root_bounds: list[float] = []
        self.cached = deque()  # bases of open nodes still holding an inverse
        self.cached_bytes = 0
        self.recent = None

    # incumbents -----------------------------------------------------------
    def offer(self, plan: OpenPlan) -> bool:
        val = objective(self.inst, plan)
        if val > self.z + 1e-12:
            self.z, self.plan = val, plan
            return True
        return False

    def prune_level(self) -> float:
        return self.z + self.cfg.opt_tol * max(1.0, abs(self.z))

    def log(self, msg: str) -> None:
        if self.progress is not None:
            self.progress.write(f"[{time.perf_counter() - self.start:8.2f}s] {msg}\n")
            self.progress.flush()

    # LP -------------------------------------------------------------------
    def guard(self):
        m, n = self.model.n_rows, self.model.n_cols
        need = 8.0 * (m * m + 2 * m * (n + m)) / 2**20
        if need > self.cfg.max_lp_mb:
            raise ResourceLimitError(
                f"LP with {m} rows and {n} columns needs ~{need:.0f} MB "
                f"(limit {self.cfg.max_lp_mb:.0f} MB)")

    def node_bounds(self, node: _Node):
        lb = self.model.lb.copy()
        ub = self.model.ub.copy()
        xc = self.layout.x_col
        for i, k in node.fix_one.items():
            cols = xc[i, :k]
            if np.any(cols < 0):
                return None
            lb[cols] = 1.0
        for i, k in node.fix_zero.items():
            cols = xc[i, k - 1:]
            ub[cols[cols >= 0]] = 0.0
        if np.any(lb > ub):
            return None
        return lb, ub

    def process(self, node: _Node, is_root: bool):
        """Cut loop at one node; returns (outcome, bound, x, basis)."""
        cfg = self.cfg
        bounds = self.node_bounds(node)
        if bounds is None:
            return "pruned", -math.inf, None, None
        lb, ub = bounds
        basis = node.basis
        if basis is None or basis.binv is None:
            # any basis is a valid dual simplex start; reuse the freshest
            # factorized one rather than inverting the parent's from scratch
            basis = self.recent if self.recent is not None else basis
        bound = node.bound
        prev = math.inf
        last_fractional = False
        gomory_left = cfg.gomory_rounds if is_root else 0
        last_gomory = math.inf
        gomory_stalls = 0
        while True:
            self.guard()
            sol = lp_solve(self.model, basis, lb, ub, deadline=self.deadline)
            self.lp_iters += sol.iterations
            if sol.status in ("time-limit", "iteration-limit"):
                self.timed_out = True
                return "timeout", bound, None, basis
            if sol.status == "infeasible":
                return "pruned", -math.inf, None, None
            basis = sol.basis
            self.recent = basis
            bound = min(bound, sol.objective)
            if is_root:
                self.root_bounds.append(bound)
                self.log(f"root round {len(self.root_bounds)}: bound {bound:.6f} "
                         f"incumbent {self.z:.6f} rows {self.model.n_rows}")
            if bound <= self.prune_level():
                return "pruned", bound, None, basis
            x = self.layout.x_matrix(sol.values)
            etas = self.layout.eta_values(sol.values)
            if is_integral(x, cfg.int_tol):
                xr = np.round(x)
                tol = self.separation_tol(bound)
                cuts = separate_integer(self.inst, xr, etas, cfg.formulation, tol)
                counts = xr.sum(axis=1).astype(np.int64)
                if not cuts and bound - objective(self.inst, counts) > self.prune_level() - self.z:
                    cuts = separate_integer(self.inst, xr, etas, cfg.formulation, FINE_TOL)
                if cuts:
                    lp_add_rows(self.model, cuts)
                    prev, last_fractional = bound, False
                    continue
                self.offer(OpenPlan.from_counts(counts))
                return "integral", bound, x, basis
            stalled = last_fractional and prev - bound < TAILING_TOL
            if cfg.fractional and not stalled:
                cuts = separate_fractional(self.inst, x, etas, cfg.formulation,
                                           self.separation_tol(bound))
                if not cuts and cfg.penalty_cuts:
                    cuts = separate_penalty(self.inst, x, etas, cfg.formulation,
                                            self.separation_tol(bound))
                if cuts:
                    lp_add_rows(self.model, cuts)
                    prev, last_fractional = bound, True
                    continue
            if last_gomory - bound < TAILING_TOL:
                gomory_stalls += 1
            if gomory_left > 0 and gomory_stalls <= GOMORY_STALLS:
                gomory_left -= 1
                rows = gomory_cuts(self.model, sol, self.integer, lb, ub)
                if rows:
                    self.model.add_rows((idx, val, rhs, ("gmi",)) for idx, val, rhs in rows)
                    last_gomory, prev, last_fractional = bound, bound, False
                    continue
            self.last = (sol, lb, ub)
            return "fractional", bound, x, basis

    def separation_tol(self, bound: float) -> float:
        """Violation tolerance, tightened when the per-eta tolerance could
        otherwise keep the bound above the pruning level on its own."""
        gap = bound - self.prune_level()
        n_eta = len(self.layout.eta_col)
        if gap > 4 * n_eta * self.cfg.violation_tol:
            return self.cfg.violation_tol
        return max(FINE_TOL, gap / (4 * n_eta))

    def reduced_cost_fixing(self, sol, lb, ub):
        """Copies whose LP reduced cost proves they cannot improve the incumbent.

        Returns (ones, zeros) as location -> copy maps in node fixing form.
        """
        if sol.reduced is None:
            return {}, {}
        xc = self.layout.x_col
        present = xc >= 0
        cols = np.where(present, xc, 0)
        val, red = sol.values[cols], sol.reduced[cols]
        span = ub[cols] - lb[cols]
        level = self.prune_level()
        free = present & (span > 0)
        zero = free & (val <= lb[cols] + 1e-9) & (sol.objective + red * span <= level)
        one = free & (val >= ub[cols] - 1e-9) & (sol.objective - red * span <= level)
        zeros = {int(i): int(k) + 1 for i, k in zip(*np.nonzero(zero))
                 if int(k) + 1 == int(np.argmax(zero[i]) + 1)}
        ones = {}
        for i, k in zip(*np.nonzero(one)):
            ones[int(i)] = max(ones.get(int(i), 0), int(k) + 1)
        return ones, zeros

    def fix_globally(self, ones, zeros) -> int:
        xc = self.layout.x_col
        n = 0
        for i, k in zeros.items():
            for col in xc[i, k - 1:]:
                if col >= 0 and self.model.ub[col] > 0:
                    self.model.set_bounds(int(col), ub=0.0)
                    n += 1
        for i, k in ones.items():
            for col in xc[i, :k]:
                if col >= 0 and self.model.lb[col] < 1:
                    self.model.set_bounds(int(col), lb=1.0)
                    n += 1
        return n

    # main loop -----------------------------------------------------------
    def run(self) -> SolveReport:
        inst, cfg = self.inst, self.cfg
        t_heur, z_heur, steps = 0.0, None, None
        mask = FixingMask.full(inst)
        if cfg.heuristics:
            t0 = time.perf_counter()
            plan, z_heur, steps = starting_heuristic(inst, self.memo)
            t_heur = time.perf_counter() - t0
            self.offer(plan)
            self.log(f"starting heuristic: {z_heur:.6f} in {t_heur:.2f}s")
        ubs = UpperBounds(inst, steps) if steps is not None else None
        if cfg.preprocessing:
            if cfg.dominance:
                dominance_filter(inst, mask)
            if cfg.binary_rule:
                binary_colocation_rule(inst, mask)
            if cfg.position_rule and ubs is not None:
                colocation_position_bound(inst, self.z, ubs, mask)
            self.log(f"preprocessing keeps {mask.n_columns()} of "
                     f"{inst.n_locations * inst.K} copy variables")
        self.mask = mask
        self.model = lp_build(inst, cfg.formulation, mask, init_cuts=cfg.initialization)
        self.layout = self.model.layout
        self.integer = np.zeros(self.model.n_cols, dtype=bool)
        self.integer[self.layout.x_columns] = True
        trivial = inst.total_weight

        seq = 0
        root = _Node((-math.inf, seq), {}, {}, math.inf, 0)
        heap = [root]
        processed = 0
        t_root = ub_root = None
        interrupted_bound = -math.inf
        while heap:
            if heap[0].bound <= self.prune_level():
                heap = []
                break
            if time.perf_counter() > self.deadline:
                self.timed_out = True
                break
            node = heapq.heappop(heap)
            is_root = processed == 0
            outcome, bound, x, basis = self.process(node, is_root)
            if outcome == "fractional" and cfg.heuristics and (
                    is_root or processed % cfg.heuristic_every == 0):
                hplan = fractional_primal_heuristic(inst, x, self.memo, self.mask.max_copies)
                if self.offer(hplan):
                    self.log(f"primal heuristic: {self.z:.6f}")
                    if is_root and cfg.preprocessing and cfg.position_rule and ubs is not None:
                        self.tighten_positions(ubs)
                if bound <= self.prune_level():
                    outcome = "pruned"
            if is_root:
                t_root = time.perf_counter() - self.start
                ub_root = min(bound, trivial) if outcome != "pruned" or bound > -math.inf else self.z
                ub_root = max(ub_root, self.z)
            processed += 1
            if outcome == "timeout":
                interrupted_bound = min(bound, trivial)
                break
            if outcome != "fractional":
                continue
            self.cache_inverse(basis)
            base_one, base_zero = dict(node.fix_one), dict(node.fix_zero)
            ones, zeros = self.reduced_cost_fixing(*self.last)
            if is_root:
                n_fixed = self.fix_globally(ones, zeros)
                self.log(f"reduced costs fix {n_fixed} copy variables at the root")
            else:
                for i, k in ones.items():
                    base_one[i] = max(base_one.get(i, 0), k)
                for i, k in zeros.items():
                    base_zero[i] = min(base_zero.get(i, inst.K + 1), k)
            var = branch_select(x, cfg.int_tol)
            i, k = var.location, var.copy
            one = dict(base_one)
            one[i] = max(one.get(i, 0), k)
            zero = dict(base_zero)
            zero[i] = min(zero.get(i, inst.K + 1), k)
            for fix_one, fix_zero in ((one, base_zero), (base_one, zero)):
                if sum(fix_one.values()) > inst.K:
                    continue
                seq += 1
                heapq.heappush(heap, _Node((-bound, seq), fix_one, fix_zero, bound,
                                           node.depth + 1, basis))
            if self.trace is not None:
                top = heap[0].bound if heap else -math.inf
                self.trace(processed, max(self.z, min(top, trivial)), self.z)
            if processed % 50 == 0:
                top = heap[0].bound if heap else self.z
                self.log(f"nodes {processed} open {len(heap)} bound {top:.6f} "
                         f"incumbent {self.z:.6f}")

        open_bound = max((n.bound for n in heap), default=-math.inf)
        ub = max(self.z, min(max(open_bound, interrupted_bound), trivial))
        if t_root is None:
            t_root = time.perf_counter() - self.start
            ub_root = ub
        if self.z == -math.inf:
            self.z, self.plan = 0.0, OpenPlan()
        closed = ub - self.z <= self.cfg.opt_tol * max(1.0, abs(self.z))
        status = "time_limit" if self.timed_out and not closed else "optimal"
        g, g_r, g_h = compute_gaps(ub, self.z, ub_root, z_heur)
        return SolveReport(
            instance_name=inst.name, n_locations=inst.n_locations, K=inst.K,
            n_full=inst.count_full(), n_partial=inst.count_partial(),
            formulation=cfg.formulation, mode=cfg.mode, status=status,
            z_star=self.z, ub=ub, gap_pct=g, nodes=max(processed - 1, 0),
            t_total=time.perf_counter() - self.start, t_root=t_root,
            ub_root=ub_root, gap_root_pct=g_r, t_heur=t_heur, z_heur=z_heur,
            gap_heur_pct=g_h, n_coloc_locations=self.plan.n_coloc_locations(),
            max_coloc=self.plan.max_coloc(), opened=self.plan,
            lp_rows=self.model.n_rows, lp_iterations=self.lp_iters,
            root_bounds=list(self.root_bounds),
            fixed_columns=int(inst.n_locations * inst.K - self.mask.n_columns()),
        )

    def cache_inverse(self, basis) -> None:
        """Keep basis inverses of recently branched nodes within a memory budget."""
        if basis is None or basis.binv is None:
            return
        self.cached.append(basis)
        self.cached_bytes += basis.binv.nbytes
        limit = self.cfg.inverse_cache_mb * 2**20
        while self.cached_bytes > limit and len(self.cached) > 1:
            old = self.cached.popleft()
            self.cached_bytes -= old.binv.nbytes
            old.binv = None

    def tighten_positions(self, ubs: UpperBounds) -> None:
        before = self.mask.max_copies.copy()
        colocation_position_bound(self.inst, self.z, ubs, self.mask)
        xc = self.layout.x_col
        for i in np.flatnonzero(self.mask.max_copies < before):
            for col in xc[i, self.mask.max_copies[i]:]:
                if col >= 0:
                    self.model.set_bounds(int(col), ub=0.0)
        if self.cfg.formulation == "F3":
            for (i, j), col in self.layout.y_col.items():
                if self.mask.max_copies[i] == 0:
                    self.model.set_bounds(col, ub=0.0)


def solve(inst: Instance, cfg: SolverConfig | None = None,
          progress: TextIO | None = None, trace=None) -> SolveReport:
    """Solve an instance to proven optimality or until the time limit.

    ``trace(nodes, global_ub, incumbent)`` is called after every branching.
    """
    cfg = SolverConfig() if cfg is None else cfg
    return _Solver(inst, cfg, progress, trace).run()
