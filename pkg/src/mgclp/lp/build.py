"""LP relaxations of the four MGCLP formulations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cuts import CUSTOMER, FORMULATION_FAMILIES, FULL, MAX_PART, PRODUCT, Cut, initial_cuts
from ..instance_io import Instance
from ..preprocessing import FixingMask
from .model import LpModel

FORMULATIONS = ("F1", "F2", "F3", "F4")


@dataclass
class Layout:
    """Where each MGCLP variable lives among the LP columns."""

    formulation: str
    n_locations: int
    n_customers: int
    K: int
    x_col: np.ndarray  # (locations, K); -1 for copies excluded by the mask
    eta_col: dict = field(default_factory=dict)  # eta key -> column
    y_col: dict = field(default_factory=dict)  # (i, j) -> column, F3 only

    def x_matrix(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.x_col.shape)
        present = self.x_col >= 0
        out[present] = values[self.x_col[present]]
        return out

    def eta_values(self, values: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        for family in FORMULATION_FAMILIES[self.formulation]:
            if family == FULL:
                out[family] = np.array([values[self.eta_col[(FULL,)]]])
            else:
                out[family] = np.array([values[self.eta_col[(family, j)]]
                                        for j in range(self.n_customers)])
        return out

    @property
    def x_columns(self) -> np.ndarray:
        return self.x_col[self.x_col >= 0]


def _eta_bound(inst: Instance, family: str, j: int | None) -> float:
    if family == FULL:
        return inst.total_weight
    w = float(inst.w[j])
    if family == CUSTOMER:
        return w
    if family == PRODUCT:
        return (1.0 - inst.theta) * w
    return inst.theta * w


def lp_build(inst: Instance, formulation: str, mask: FixingMask | None = None,
             init_cuts: bool = True) -> LpModel:
    """Root relaxation: x/eta (and F3's y) columns, cardinality, copy
    ordering, F3 assignment rows and optionally the empty-plan cuts."""
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    n, m, K = inst.n_locations, inst.n_customers, inst.K
    caps = (np.full(n, K) if mask is None else np.minimum(mask.max_copies, K))
    model = LpModel()
    x_col = np.full((n, K), -1, dtype=np.int64)
    for i in range(n):
        for k in range(int(caps[i])):
            x_col[i, k] = model.add_column(0.0, 1.0, 0.0, f"x_{i}_{k + 1}")
    layout = Layout(formulation, n, m, K, x_col)
    for family in FORMULATION_FAMILIES[formulation]:
        if family == FULL:
            layout.eta_col[(FULL,)] = model.add_column(
                0.0, _eta_bound(inst, FULL, None), 1.0, "eta")
        else:
            tag = {CUSTOMER: "eta", PRODUCT: "etaP", MAX_PART: "etaM"}[family]
            for j in range(m):
                layout.eta_col[(family, j)] = model.add_column(
                    0.0, _eta_bound(inst, family, j), 1.0, f"{tag}_{j}")
    if formulation == "F3":
        for i, j in zip(*np.nonzero(inst.f)):
            ub = 1.0 if caps[i] >= 1 else 0.0
            layout.y_col[(int(i), int(j))] = model.add_column(
                0.0, ub, inst.theta * inst.w[j] * inst.f[i, j], f"y_{i}_{j}")
    model.layout = layout

    rows = []
    xs = layout.x_columns
    rows.append((xs, np.ones(xs.size), float(K), ("card",)))
    for i in range(n):
        for k in range(int(caps[i]) - 1):
            rows.append(([x_col[i, k + 1], x_col[i, k]], [1.0, -1.0], 0.0, ("sym", i, k + 1)))
    if formulation == "F3":
        by_customer: dict[int, list[int]] = {}
        for (i, j), col in layout.y_col.items():
            by_customer.setdefault(j, []).append(col)
            if x_col[i, 0] >= 0:
                rows.append(([col, x_col[i, 0]], [1.0, -1.0], 0.0, ("assign", i, j)))
        for j, cols in sorted(by_customer.items()):
            rows.append((cols, np.ones(len(cols)), 1.0, ("single", j)))
    model.add_rows(rows)
    if init_cuts:
        lp_add_rows(model, initial_cuts(inst, formulation))
    return model


def cut_row(model: LpModel, cut: Cut):
    """(idx, val, rhs) of ``eta - sum coeff x <= constant`` in model columns."""
    layout = model.layout
    cols = layout.x_col.ravel()[cut.idx]
    keep = cols >= 0
    idx = np.concatenate(([layout.eta_col[cut.eta_key]], cols[keep]))
    val = np.concatenate(([1.0], -cut.val[keep]))
    return idx, val, cut.constant


def lp_add_rows(model: LpModel, cuts) -> LpModel:
    """Append each cut as a row; earlier bases stay usable for warm starts."""
    rows = []
    for cut in cuts:
        idx, val, rhs = cut_row(model, cut)
        rows.append((idx, val, rhs, cut))
    model.add_rows(rows)
    return model
