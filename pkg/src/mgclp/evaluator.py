"""Joint coverage function, MGCLP objective and incremental marginal gains."""
from __future__ import annotations

import itertools
from collections import Counter
from typing import Iterable, Mapping

import numpy as np

from ._kernels import kernels
from .instance_io import Instance

TOL = 1e-9


class OpenPlan:
    """A multiset of opened locations: location id -> number of copies."""

    __slots__ = ("_counts",)

    def __init__(self, counts: Mapping[int, int] | Iterable[int] | None = None):
        if counts is None:
            c = Counter()
        elif isinstance(counts, Mapping):
            c = Counter({int(i): int(k) for i, k in counts.items() if k})
        else:
            c = Counter(int(i) for i in counts)
        if any(k < 0 for k in c.values()):
            raise ValueError("multiplicities must be nonnegative")
        self._counts = c

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "OpenPlan":
        return cls({int(i): int(k) for i, k in enumerate(counts) if k > 0})

    @property
    def counts(self) -> dict[int, int]:
        return dict(self._counts)

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def __getitem__(self, i: int) -> int:
        return self._counts.get(i, 0)

    def __iter__(self):
        return iter(sorted(self._counts))

    def __len__(self):
        return len(self._counts)

    def __eq__(self, other):
        if not isinstance(other, OpenPlan):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        inner = ", ".join(f"{i}: {k}" for i, k in sorted(self._counts.items()))
        return f"OpenPlan({{{inner}}})"

    def key(self) -> tuple[int, ...]:
        """Sorted tuple of locations with repetition (the lexicographic key)."""
        return tuple(itertools.chain.from_iterable(
            [i] * k for i, k in sorted(self._counts.items())))

    def added(self, i: int) -> "OpenPlan":
        c = Counter(self._counts)
        c[int(i)] += 1
        return OpenPlan(c)

    def as_array(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        for i, k in self._counts.items():
            out[i] = k
        return out

    def n_coloc_locations(self) -> int:
        return sum(1 for k in self._counts.values() if k >= 2)

    def max_coloc(self) -> int:
        return max(self._counts.values(), default=0)


def jcf_value(theta: float, coverages) -> float:
    """theta * max + (1 - theta) * (1 - prod(1 - f)); 0 for no facilities."""
    cov = np.asarray(list(coverages) if not isinstance(coverages, np.ndarray)
                     else coverages, dtype=np.float64)
    if cov.size == 0:
        return 0.0
    return float(theta * cov.max() + (1.0 - theta) * (1.0 - np.prod(1.0 - cov)))


def _counts_of(inst: Instance, plan) -> np.ndarray:
    if isinstance(plan, OpenPlan):
        return plan.as_array(inst.n_locations)
    return np.asarray(plan, dtype=np.int64)


def coverage_terms(inst: Instance, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-customer (best f, surviving probability) for a count vector."""
    opened = np.flatnonzero(counts)
    if opened.size == 0:
        m = inst.n_customers
        return np.zeros(m), np.ones(m)
    rows = inst.f[opened]
    best = rows.max(axis=0)
    surv = np.prod((1.0 - rows) ** counts[opened, None], axis=0)
    return best, surv


def customer_values(inst: Instance, plan) -> np.ndarray:
    """Per-customer p_j(theta, plan), unweighted."""
    best, surv = coverage_terms(inst, _counts_of(inst, plan))
    return inst.theta * best + (1.0 - inst.theta) * (1.0 - surv)


def objective(inst: Instance, plan) -> float:
    """Weighted joint coverage W(theta, plan) of a plan or count vector."""
    return float(inst.w @ customer_values(inst, plan))


class CoverageState:
    """Running per-customer max and survival product of an open plan."""

    __slots__ = ("inst", "best", "surv", "counts")

    def __init__(self, inst: Instance, plan=None):
        self.inst = inst
        self.counts = (np.zeros(inst.n_locations, dtype=np.int64) if plan is None
                       else _counts_of(inst, plan).copy())
        self.best, self.surv = coverage_terms(inst, self.counts)

    @property
    def plan(self) -> OpenPlan:
        return OpenPlan.from_counts(self.counts)

    def copy(self) -> "CoverageState":
        other = CoverageState.__new__(CoverageState)
        other.inst = self.inst
        other.best = self.best.copy()
        other.surv = self.surv.copy()
        other.counts = self.counts.copy()
        return other

    def value(self) -> float:
        th = self.inst.theta
        return float(self.inst.w @ (th * self.best + (1.0 - th) * (1.0 - self.surv)))

    def customer_values(self) -> np.ndarray:
        th = self.inst.theta
        return th * self.best + (1.0 - th) * (1.0 - self.surv)

    def gain(self, i: int) -> float:
        return marginal_gain(self, i)

    def gains(self) -> np.ndarray:
        """Marginal gain of one more copy at every location."""
        return kernels.marginal_gains(self.inst.f, self.inst.w, self.inst.theta,
                                      self.best, self.surv)

    def customer_gains(self) -> np.ndarray:
        """Weighted per-customer gains, shape (locations, customers)."""
        f = self.inst.f
        th = self.inst.theta
        up = np.maximum(f, self.best) - self.best
        return self.inst.w * (th * up + (1.0 - th) * self.surv * f)

    def add(self, i: int) -> "CoverageState":
        return apply_add(self, i)


def marginal_gain(state: CoverageState, i: int) -> float:
    """W(plan + i) - W(plan) in O(|J|) from the running terms."""
    inst = state.inst
    fi = inst.f[i]
    up = np.maximum(fi - state.best, 0.0)
    return float(inst.w @ (inst.theta * up + (1.0 - inst.theta) * state.surv * fi))


def apply_add(state: CoverageState, i: int) -> CoverageState:
    """Open one more facility at ``i`` (in place; returns the state)."""
    fi = state.inst.f[i]
    np.maximum(state.best, fi, out=state.best)
    state.surv *= 1.0 - fi
    state.counts[i] += 1
    return state


class OracleTooLarge(ValueError):
    pass


def brute_force_opt(inst: Instance, max_copies=None) -> tuple[float, OpenPlan]:
    """Exact optimum by enumerating every multiset of size <= K.

    Ties go to the lexicographically smallest sorted location tuple.
    ``max_copies`` optionally restricts per-location multiplicities.
    Evaluates each plan from scratch with :func:`jcf_value`.
    """
    n, K = inst.n_locations, inst.K
    if n > 15 or K > 4:
        raise OracleTooLarge(f"oracle limited to |I| <= 15 and K <= 4 (got {n}, {K})")
    cap = None if max_copies is None else np.asarray(max_copies)
    best_val = 0.0
    best_key: tuple[int, ...] = ()
    f, w, th = inst.f, inst.w, inst.theta
    for size in range(1, K + 1):
        for combo in itertools.combinations_with_replacement(range(n), size):
            if cap is not None:
                cnt = Counter(combo)
                if any(k > cap[i] for i, k in cnt.items()):
                    continue
            val = sum(w[j] * jcf_value(th, [f[i, j] for i in combo])
                      for j in range(inst.n_customers))
            if val > best_val + 1e-12:
                best_val, best_key = val, combo
            elif abs(val - best_val) <= 1e-12 and combo < best_key:
                best_key = combo
    return float(best_val), OpenPlan(best_key)
