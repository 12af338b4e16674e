"""Greedy construction with lazy evaluation, local search, primal heuristic."""
from __future__ import annotations

import heapq

import numpy as np

from .evaluator import CoverageState, OpenPlan, coverage_terms
from .instance_io import Instance

IMPROVE_TOL = 1e-9
# gains are compared after rounding so equal-by-construction ties resolve by
# location index regardless of summation order
GAIN_DECIMALS = 9


class ValueMemo:
    """Solution values seen so far, keyed by the value rounded to 12 decimals."""

    def __init__(self):
        self.seen: set[float] = set()

    @staticmethod
    def key(value: float) -> float:
        return round(float(value), 12)

    def __contains__(self, value: float) -> bool:
        return self.key(value) in self.seen

    def add(self, value: float) -> bool:
        """Insert a value; returns False if it was already present."""
        k = self.key(value)
        if k in self.seen:
            return False
        self.seen.add(k)
        return True

    def __len__(self):
        return len(self.seen)


def _caps(inst: Instance, max_copies) -> np.ndarray:
    if max_copies is None:
        return np.full(inst.n_locations, inst.K, dtype=np.int64)
    return np.minimum(np.asarray(max_copies, dtype=np.int64), inst.K)


def _rounded_gain(state: CoverageState, i: int) -> float:
    return round(state.gain(i), GAIN_DECIMALS)


def greedy_eager(inst: Instance, max_copies=None) -> tuple[list[int], list[float]]:
    """Plain greedy: full argmax each step, smallest index wins ties."""
    caps = _caps(inst, max_copies)
    state = CoverageState(inst)
    order, steps = [], []
    for _ in range(inst.K):
        avail = state.counts < caps
        if not avail.any():
            break
        g = np.where(avail, np.round(state.gains(), GAIN_DECIMALS), -np.inf)
        i = int(np.argmax(g))
        state.add(i)
        order.append(i)
        steps.append(state.value())
    return order, steps


def greedy_lazy(inst: Instance, max_copies=None) -> tuple[OpenPlan, list[float], list[int]]:
    """Greedy with lazy gain re-evaluation.

    Returns the plan, the objective after every step (z^1..z^K) and the
    order in which locations were picked.  Cached gains upper-bound current
    gains by submodularity, so the refreshed top entry is accepted as soon as
    it beats the next cached gain (ties go to the smaller location index).
    """
    caps = _caps(inst, max_copies)
    state = CoverageState(inst)
    gains = np.round(state.gains(), GAIN_DECIMALS)
    heap = [(-gains[i], i) for i in range(inst.n_locations) if caps[i] > 0]
    heapq.heapify(heap)
    fresh = np.zeros(inst.n_locations, dtype=np.int64)  # step of last refresh
    order, steps = [], []
    for step in range(inst.K):
        while heap:
            neg, i = heap[0]
            if fresh[i] == step:
                break
            heapq.heapreplace(heap, (-_rounded_gain(state, i), i))
            fresh[i] = step
            if heap[0][1] == i:
                break
        if not heap:
            break
        _, i = heapq.heappop(heap)
        state.add(i)
        order.append(i)
        steps.append(state.value())
        if state.counts[i] < caps[i]:
            heapq.heappush(heap, (-_rounded_gain(state, i), i))
            fresh[i] = step + 1
    return state.plan, steps, order


def _value_of(inst: Instance, counts: np.ndarray) -> float:
    best, surv = coverage_terms(inst, counts)
    th = inst.theta
    return float(inst.w @ (th * best + (1.0 - th) * (1.0 - surv)))


def local_search(inst: Instance, plan, memo: ValueMemo | None = None,
                 max_copies=None, order: list[int] | None = None) -> OpenPlan:
    """Swap-based improvement of a size-K plan.

    Positions are visited from the last-added facility to the first; each
    open facility is tried against every location in index order and the
    first strictly improving replacement is taken.  Rounds repeat until one
    yields no improvement.  The run stops early once the current value is
    already recorded in ``memo``.
    """
    caps = _caps(inst, max_copies)
    if order is None:
        order = list(plan.key()) if isinstance(plan, OpenPlan) else [
            i for i, k in enumerate(plan) for _ in range(int(k))]
    seq = list(order)
    counts = np.zeros(inst.n_locations, dtype=np.int64)
    for i in seq:
        counts[i] += 1
    value = _value_of(inst, counts)
    if memo is not None and not memo.add(value):
        return OpenPlan.from_counts(counts)
    improve = True
    while improve:
        improve = False
        for k in range(len(seq) - 1, -1, -1):
            out = seq[k]
            counts[out] -= 1
            state = CoverageState(inst, counts)
            cand = state.value() + state.gains()
            cand[counts >= caps] = -np.inf
            better = np.flatnonzero(cand > value + IMPROVE_TOL)
            if better.size == 0:
                counts[out] += 1
                continue
            i = int(better[0])
            counts[i] += 1
            seq[k] = i
            value = _value_of(inst, counts)
            improve = True
            if memo is not None and not memo.add(value):
                return OpenPlan.from_counts(counts)
    return OpenPlan.from_counts(counts)


def starting_heuristic(inst: Instance, memo: ValueMemo | None = None,
                       max_copies=None) -> tuple[OpenPlan, float, list[float]]:
    """Lazy greedy followed by local search; returns plan, value, greedy steps."""
    plan, steps, order = greedy_lazy(inst, max_copies)
    plan = local_search(inst, plan, memo, max_copies, order=order)
    return plan, _value_of(inst, plan.as_array(inst.n_locations)), steps


def fractional_primal_heuristic(inst: Instance, x_tilde: np.ndarray,
                                memo: ValueMemo | None = None,
                                max_copies=None) -> OpenPlan:
    """Greedy guided by an LP point, followed by local search.

    ``x_tilde`` has shape (locations, K).  At each step the next copy of
    location i scores x_tilde[i, copies(i)] * W(S + i); when every
    available weight is zero the step falls back to the unweighted argmax.
    """
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    caps = _caps(inst, max_copies)
    state = CoverageState(inst)
    order = []
    rows = np.arange(inst.n_locations)
    for _ in range(inst.K):
        avail = state.counts < caps
        if not avail.any():
            break
        vals = state.value() + state.gains()
        copy = np.minimum(state.counts, x_tilde.shape[1] - 1)
        weight = np.where(avail, x_tilde[rows, copy], 0.0)
        if np.any(weight > 0.0):
            score = np.where(weight > 0.0, weight * vals, -np.inf)
        else:
            score = np.where(avail, vals, -np.inf)
        score = np.round(score, GAIN_DECIMALS)
        i = int(np.argmax(score))
        state.add(i)
        order.append(i)
    return local_search(inst, state.plan, memo, max_copies, order=order)
