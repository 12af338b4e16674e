"""Submodular cut coefficients and their separation.

Points are passed as arrays of shape (locations, K): entry [i, k-1] is the
value of the variable for the k-th copy at location i.  A cut bounds one
objective variable from above::

    eta <= constant + sum coeff(i, k) * x[i, k]
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .evaluator import OpenPlan, coverage_terms
from .instance_io import Instance

VIOLATION_TOL = 1e-6
INT_TOL = 1e-6

FULL = "full"
CUSTOMER = "customer"
PRODUCT = "customer_product"
MAX_PART = "max_part"
SCUT_FAMILIES = (FULL, CUSTOMER, PRODUCT)
FAMILIES = SCUT_FAMILIES + (MAX_PART,)

FORMULATION_FAMILIES = {
    "F1": (FULL,),
    "F2": (CUSTOMER,),
    "F3": (PRODUCT,),
    "F4": (PRODUCT, MAX_PART),
}


class VarIndex(NamedTuple):
    location: int
    copy: int  # 1-based position among the copies at ``location``


@dataclass
class Cut:
    family: str
    customer: int | None
    constant: float
    idx: np.ndarray  # flat positions i * K + (copy - 1)
    val: np.ndarray
    K: int

    @property
    def eta_key(self) -> tuple:
        return (self.family,) if self.customer is None else (self.family, self.customer)

    @property
    def coeffs(self) -> dict[VarIndex, float]:
        return {VarIndex(int(p) // self.K, int(p) % self.K + 1): float(v)
                for p, v in zip(self.idx, self.val)}

    def rhs(self, x: np.ndarray) -> float:
        """Right-hand side evaluated at a point of shape (locations, K)."""
        return float(self.constant + np.asarray(x, dtype=np.float64).ravel()[self.idx] @ self.val)

    def violation(self, x: np.ndarray, eta: float) -> float:
        return float(eta) - self.rhs(x)


def _check_family(family: str) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown cut family {family!r}")


def plan_incidence(plan, n_locations: int, K: int) -> np.ndarray:
    """0/1 matrix of shape (locations, K) opening copies 1..m_i at each i."""
    if isinstance(plan, OpenPlan):
        counts = plan.as_array(n_locations)
    else:
        counts = np.asarray(plan, dtype=np.int64)
    x = np.zeros((n_locations, K))
    x[np.arange(K)[None, :] < counts[:, None]] = 1.0
    return x


def _members(inst: Instance, plan) -> np.ndarray:
    """Boolean (locations, K) membership matrix for a plan given in any form."""
    K = inst.K
    if isinstance(plan, np.ndarray) and plan.ndim == 2:
        return plan > 0.5
    if isinstance(plan, (set, frozenset)):
        m = np.zeros((inst.n_locations, K), dtype=bool)
        for i, k in plan:
            m[i, k - 1] = True
        return m
    return plan_incidence(plan, inst.n_locations, K) > 0.5


def _component(inst: Instance, family: str, best, surv):
    """Per-customer (weighted) value of the targeted objective component."""
    th, w = inst.theta, inst.w
    if family == PRODUCT:
        return (1.0 - th) * w * (1.0 - surv)
    return w * (th * best + (1.0 - th) * (1.0 - surv))


def _location_gains(inst: Instance, family: str, best, surv) -> np.ndarray:
    """Weighted gain of one more copy per (location, customer)."""
    f, th, w = inst.f, inst.theta, inst.w
    if family == PRODUCT:
        return (1.0 - th) * w * surv * f
    up = np.maximum(f, best) - best
    return w * (th * up + (1.0 - th) * surv * f)


def _make_cut(family, customer, constant, loc_coef, members, K) -> Cut:
    coef = np.where(members, 0.0, loc_coef[:, None] * np.ones((1, K)))
    flat = coef.ravel()
    idx = np.flatnonzero(flat > 0.0)
    return Cut(family, customer, float(constant), idx, flat[idx].copy(), K)


def scut_coefficients(inst: Instance, plan, family: str,
                      customer: int | None = None) -> Cut:
    """Cut generated by an open plan for one of the submodular families.

    ``plan`` may be an :class:`OpenPlan`, a count vector, a set of
    (location, copy) pairs, or a 0/1 matrix of shape (locations, K).
    """
    _check_family(family)
    if family == MAX_PART:
        raise ValueError("max-part cuts are generated by max_cut_coefficients")
    members = _members(inst, plan)
    counts = members.sum(axis=1)
    best, surv = coverage_terms(inst, counts)
    gains = _location_gains(inst, family, best, surv)
    comp = _component(inst, family, best, surv)
    if family == FULL:
        return _make_cut(FULL, None, comp.sum(), gains.sum(axis=1), members, inst.K)
    if customer is None:
        raise ValueError(f"family {family!r} needs a customer")
    return _make_cut(family, customer, comp[customer], gains[:, customer], members, inst.K)


def sorted_levels(inst: Instance, j: int) -> np.ndarray:
    """Coverage levels of customer j in nondecreasing order, prefixed by 0."""
    return np.concatenate(([0.0], np.sort(inst.f[:, j])))


def max_cut_coefficients(inst: Instance, customer: int, rank: int) -> Cut:
    """eta^M_j <= theta w_j (f_(r) + sum_i (f_ij - f_(r))^+ x_i^1)."""
    n = inst.n_locations
    if not 0 <= rank <= n - 1:
        raise ValueError(f"rank must lie in 0..{n - 1}, got {rank}")
    level = sorted_levels(inst, customer)[rank]
    scale = inst.theta * inst.w[customer]
    loc = scale * np.maximum(inst.f[:, customer] - level, 0.0)
    members = np.zeros((n, inst.K), dtype=bool)
    members[:, 1:] = True  # only first copies carry coefficients
    return _make_cut(MAX_PART, customer, scale * level, loc, members, inst.K)


def max_part_bounds(inst: Instance, x1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest max-part cut right-hand side per customer at first-copy values x1.

    Returns (rank, rhs) arrays over customers.  O(|I|) per customer after
    sorting, using suffix sums over the sorted coverage levels.
    """
    f = inst.f
    n = inst.n_locations
    order = np.argsort(f, axis=0, kind="stable")
    s = np.take_along_axis(f, order, axis=0)
    xs = np.asarray(x1, dtype=np.float64)[order]
    s0 = np.vstack([np.zeros((1, f.shape[1])), s])
    x0 = np.vstack([np.zeros((1, f.shape[1])), xs])
    # suffix sums over positions > r
    sx = np.cumsum((s0 * x0)[::-1], axis=0)[::-1]
    sc = np.cumsum(x0[::-1], axis=0)[::-1]
    sx = np.vstack([sx[1:], np.zeros((1, f.shape[1]))])
    sc = np.vstack([sc[1:], np.zeros((1, f.shape[1]))])
    rhs = s0 + sx - s0 * sc
    rhs = rhs[:n]  # ranks 0..n-1
    rank = np.argmin(rhs, axis=0)
    scale = inst.theta * inst.w
    return rank, scale * rhs[rank, np.arange(f.shape[1])]


def _eta_array(etas, family, n):
    v = np.atleast_1d(np.asarray(etas[family], dtype=np.float64))
    if v.shape[0] != n:
        raise ValueError(f"eta values for {family!r} have length {v.shape[0]}, expected {n}")
    return v


def _scut_round(inst, family, members, x, eta, tol) -> list[Cut]:
    counts = members.sum(axis=1)
    best, surv = coverage_terms(inst, counts)
    gains = _location_gains(inst, family, best, surv)
    comp = _component(inst, family, best, surv)
    free = (np.asarray(x) * ~members).sum(axis=1)
    if family == FULL:
        loc = gains.sum(axis=1)
        rhs = comp.sum() + free @ loc
        if eta[0] - rhs > tol:
            return [_make_cut(FULL, None, comp.sum(), loc, members, inst.K)]
        return []
    rhs = comp + free @ gains
    out = []
    for j in np.flatnonzero(eta - rhs > tol):
        out.append(_make_cut(family, int(j), comp[j], gains[:, j], members, inst.K))
    return out


def _max_round(inst, x, eta, tol) -> list[Cut]:
    rank, rhs = max_part_bounds(inst, np.asarray(x)[:, 0])
    return [max_cut_coefficients(inst, int(j), int(rank[j]))
            for j in np.flatnonzero(eta - rhs > tol)]


def _separate(inst, members, x, etas, formulation, tol):
    cuts = []
    for family in FORMULATION_FAMILIES[formulation]:
        n = 1 if family == FULL else inst.n_customers
        eta = _eta_array(etas, family, n)
        if family == MAX_PART:
            cuts.extend(_max_round(inst, x, eta, tol))
        else:
            cuts.extend(_scut_round(inst, family, members, x, eta, tol))
    return cuts


def separate_integer(inst: Instance, x_tilde: np.ndarray, etas: dict,
                     formulation: str, tol: float = VIOLATION_TOL) -> list[Cut]:
    """Exact separation at a binary point; returns the cuts generated by the
    open set that the current eta values violate."""
    x = np.asarray(x_tilde, dtype=np.float64)
    members = x > 0.5
    return _separate(inst, members, np.where(members, 1.0, 0.0), etas, formulation, tol)


def top_k_members(x_tilde: np.ndarray, K: int) -> np.ndarray:
    """Membership of the K largest entries (ties: smaller location, then copy)."""
    x = np.asarray(x_tilde, dtype=np.float64)
    flat = x.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    members = np.zeros(flat.size, dtype=bool)
    members[order[:K]] = True
    return members.reshape(x.shape)


def separate_fractional(inst: Instance, x_tilde: np.ndarray, etas: dict,
                        formulation: str, tol: float = VIOLATION_TOL) -> list[Cut]:
    """Heuristic separation: cuts generated by the K largest entries of x_tilde,
    kept when violated at x_tilde."""
    x = np.asarray(x_tilde, dtype=np.float64)
    members = top_k_members(x, inst.K)
    return _separate(inst, members, x, etas, formulation, tol)


def _removal_gains(inst, family, members):
    """Per (location, customer) loss from dropping one copy at each location of
    the plan, i.e. the gain of its last copy given the rest."""
    counts = members.sum(axis=1)
    best, surv = coverage_terms(inst, counts)
    comp = _component(inst, family, best, surv)
    loss = np.zeros((inst.n_locations, inst.n_customers))
    for i in np.flatnonzero(counts):
        reduced = counts.copy()
        reduced[i] -= 1
        b2, s2 = coverage_terms(inst, reduced)
        loss[i] = comp - _component(inst, family, b2, s2)
    return comp, loss


def _penalty_cut(family, customer, comp, loss, single, members, K) -> Cut:
    # eta <= comp - sum_{S} loss (1 - x) + sum_{not S} single x
    per_copy = np.where(members, loss[:, None], single[:, None])
    flat = per_copy.ravel()
    idx = np.flatnonzero(flat > 0.0)
    constant = comp - (loss[:, None] * members).sum()
    return Cut(family, customer, float(constant), idx, flat[idx].copy(), K)


def separate_penalty(inst: Instance, x_tilde: np.ndarray, etas: dict,
                     formulation: str, tol: float = VIOLATION_TOL) -> list[Cut]:
    """Submodular inequalities of the second kind, generated by the K largest
    entries of x_tilde: members falling short of 1 reduce the bound by their
    removal gain, outsiders add their stand-alone gain."""
    x = np.asarray(x_tilde, dtype=np.float64)
    members = top_k_members(x, inst.K)
    th, w, f = inst.theta, inst.w, inst.f
    cuts = []
    for family in FORMULATION_FAMILIES[formulation]:
        if family == MAX_PART:
            continue
        comp, loss = _removal_gains(inst, family, members)
        single = w * f if family != PRODUCT else (1.0 - th) * w * f
        flat_x = x.ravel()
        if family == FULL:
            cut = _penalty_cut(FULL, None, comp.sum(), loss.sum(axis=1), single.sum(axis=1),
                               members, inst.K)
            if _eta_array(etas, FULL, 1)[0] - cut.constant - flat_x[cut.idx] @ cut.val > tol:
                cuts.append(cut)
            continue
        eta = _eta_array(etas, family, inst.n_customers)
        xm = x * members
        short = (members.sum(axis=1) - xm.sum(axis=1))  # sum over members of (1 - x)
        free = (x * ~members).sum(axis=1)
        rhs = comp - short @ loss + free @ single
        for j in np.flatnonzero(eta - rhs > tol):
            cuts.append(_penalty_cut(family, int(j), comp[j], loss[:, j], single[:, j],
                                     members, inst.K))
    return cuts


def initial_cuts(inst: Instance, formulation: str) -> list[Cut]:
    """Cuts generated by the empty plan (plus rank 0 for the max part)."""
    empty = np.zeros((inst.n_locations, inst.K), dtype=bool)
    cuts = []
    for family in FORMULATION_FAMILIES[formulation]:
        if family == FULL:
            cuts.append(scut_coefficients(inst, empty, FULL))
        elif family == MAX_PART:
            cuts.extend(max_cut_coefficients(inst, j, 0) for j in range(inst.n_customers))
        else:
            cuts.extend(scut_coefficients(inst, empty, family, j)
                        for j in range(inst.n_customers))
    return cuts


def is_integral(x: np.ndarray, tol: float = INT_TOL) -> bool:
    x = np.asarray(x)
    return bool(np.all(np.minimum(np.abs(x), np.abs(1.0 - x)) <= tol))
