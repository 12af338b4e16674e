"""Location elimination and co-location fixing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import kernels
from .instance_io import Instance

GREEDY_RATIO = 1.0 - 1.0 / math.e


@dataclass
class FixingMask:
    """Per-location cap on the number of copies that may be opened."""

    max_copies: np.ndarray

    @classmethod
    def full(cls, inst: Instance) -> "FixingMask":
        return cls(np.full(inst.n_locations, inst.K, dtype=np.int64))

    @property
    def removed_locations(self) -> set[int]:
        return {int(i) for i in np.flatnonzero(self.max_copies == 0)}

    def copy(self) -> "FixingMask":
        return FixingMask(self.max_copies.copy())

    def limit(self, i: int, copies: int) -> None:
        self.max_copies[i] = min(int(self.max_copies[i]), copies)

    def n_columns(self) -> int:
        return int(self.max_copies.sum())


def dominance_filter(inst: Instance, mask: FixingMask | None = None) -> FixingMask:
    """Remove every location whose coverage row is dominated by another row.

    Uses exact comparisons; among identical rows the smallest index stays.
    """
    mask = FixingMask.full(inst) if mask is None else mask
    dominated = kernels.dominated(inst.f)
    mask.max_copies[dominated] = 0
    return mask


def binary_colocation_rule(inst: Instance, mask: FixingMask | None = None) -> FixingMask:
    """A location covering every customer either fully or not at all gets one copy."""
    mask = FixingMask.full(inst) if mask is None else mask
    binary = np.all((inst.f == 0.0) | (inst.f == 1.0), axis=1)
    np.minimum(mask.max_copies, np.where(binary, 1, inst.K), out=mask.max_copies)
    return mask


def chain_values(inst: Instance, depth: int | None = None) -> np.ndarray:
    """W of the first l copies at each location, shape (locations, depth)."""
    depth = inst.K if depth is None else depth
    return np.cumsum(kernels.chain_gains(inst.f, inst.w, inst.theta, depth), axis=1)


class UpperBounds:
    """Upper bounds on the best value reachable with k' facilities.

    Two bounds are combined: the greedy value after k' steps divided by
    (1 - 1/e), and the sum of the k' largest single-location chain gains.
    """

    def __init__(self, inst: Instance, greedy_steps):
        self.inst = inst
        self.greedy_steps = [float(z) for z in greedy_steps]
        gains = kernels.chain_gains(inst.f, inst.w, inst.theta, inst.K)
        top = np.sort(gains.ravel())[::-1]
        self._prefix = np.concatenate(([0.0], np.cumsum(top)))

    def by_greedy(self, kprime: int) -> float:
        if kprime <= 0:
            return 0.0
        if kprime > len(self.greedy_steps):
            return math.inf
        return self.greedy_steps[kprime - 1] / GREEDY_RATIO

    def by_chains(self, kprime: int) -> float:
        if kprime <= 0:
            return 0.0
        return float(self._prefix[min(kprime, len(self._prefix) - 1)])

    def __call__(self, kprime: int) -> float:
        return min(self.by_greedy(kprime), self.by_chains(kprime))


def upper_bound_kprime(inst: Instance, kprime: int, greedy_steps) -> float:
    return UpperBounds(inst, greedy_steps)(kprime)


def colocation_position_bound(inst: Instance, incumbent: float, ub_fn,
                              mask: FixingMask | None = None,
                              tol: float = 1e-9) -> FixingMask:
    """Cap copies at i to k-1 when W(first k copies of i) + UB(K-k) < incumbent.

    ``tol`` only guards against round-off; equality never fixes.
    """
    mask = FixingMask.full(inst) if mask is None else mask
    K = inst.K
    chain = chain_values(inst, K)
    ubs = np.array([ub_fn(K - k) for k in range(1, K + 1)])
    for i in range(inst.n_locations):
        cap = int(mask.max_copies[i])
        if cap == 0:
            continue
        hit = np.flatnonzero(chain[i, :cap] + ubs[:cap] < incumbent - tol)
        if hit.size:
            mask.max_copies[i] = int(hit[0])
    return mask


def preprocess(inst: Instance, incumbent: float | None = None, greedy_steps=None,
               dominance: bool = True, binary: bool = True,
               positions: bool = True) -> FixingMask:
    """Apply the enabled fixing rules and return the combined mask."""
    mask = FixingMask.full(inst)
    if dominance:
        dominance_filter(inst, mask)
    if binary:
        binary_colocation_rule(inst, mask)
    if positions and incumbent is not None and greedy_steps is not None:
        colocation_position_bound(inst, incumbent, UpperBounds(inst, greedy_steps), mask)
    return mask
