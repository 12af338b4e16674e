"""Bounded-variable LP model: maximize c.x s.t. A x <= b, lb <= x <= ub."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LpModel:
    """Columns with finite bounds and ``<=`` rows stored sparsely.

    A dense copy of the constraint matrix is kept for the simplex engine and
    extended incrementally as rows are appended.
    """

    def __init__(self):
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._c: list[float] = []
        self.col_names: list[str] = []
        self.rows: list[tuple[np.ndarray, np.ndarray, float]] = []
        self.row_tags: list[object] = []
        self._arrays = None
        self._buf = np.zeros((0, 0))  # dense rows, capacity grows by doubling

    # columns -----------------------------------------------------------
    def add_column(self, lb: float, ub: float, obj: float = 0.0, name: str | None = None) -> int:
        if not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError("columns need finite bounds")
        if lb > ub:
            raise ValueError(f"column {name or len(self._lb)}: lower bound {lb} > upper {ub}")
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._c.append(float(obj))
        self.col_names.append(name or f"c{len(self._lb) - 1}")
        self._arrays = None
        self._buf = np.hstack([self._buf[:, :len(self._lb) - 1],
                               np.zeros((self._buf.shape[0], 1))])
        return len(self._lb) - 1

    @property
    def n_cols(self) -> int:
        return len(self._lb)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def _refresh(self):
        if self._arrays is None:
            self._arrays = (np.array(self._lb), np.array(self._ub), np.array(self._c))
        return self._arrays

    @property
    def lb(self) -> np.ndarray:
        return self._refresh()[0]

    @property
    def ub(self) -> np.ndarray:
        return self._refresh()[1]

    @property
    def c(self) -> np.ndarray:
        return self._refresh()[2]

    def set_bounds(self, j: int, lb: float | None = None, ub: float | None = None) -> None:
        if lb is not None:
            self._lb[j] = float(lb)
        if ub is not None:
            self._ub[j] = float(ub)
        self._arrays = None

    # rows --------------------------------------------------------------
    def add_row(self, idx, val, rhs: float, tag=None) -> int:
        idx = np.asarray(idx, dtype=np.int64)
        val = np.asarray(val, dtype=np.float64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_cols):
            raise IndexError("row references a column that does not exist")
        self.add_rows([(idx, val, rhs, tag)])
        return len(self.rows) - 1

    def add_rows(self, rows) -> None:
        """Append many (idx, val, rhs, tag) rows in one matrix extension."""
        rows = list(rows)
        if not rows:
            return
        m0 = len(self.rows)
        self._reserve(m0 + len(rows))
        block = self._buf[m0:m0 + len(rows)]
        block[:] = 0.0
        for r, (idx, val, rhs, tag) in enumerate(rows):
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= self.n_cols):
                raise IndexError("row references a column that does not exist")
            np.add.at(block[r], idx, np.asarray(val, dtype=np.float64))
            keep = np.flatnonzero(block[r])
            self.rows.append((keep, block[r, keep], float(rhs)))
            self.row_tags.append(tag)

    def _reserve(self, m: int) -> None:
        if m <= self._buf.shape[0]:
            return
        cap = max(m, 2 * self._buf.shape[0], 16)
        buf = np.zeros((cap, self.n_cols))
        buf[:len(self.rows)] = self._buf[:len(self.rows)]
        self._buf = buf

    @property
    def A(self) -> np.ndarray:
        return self._buf[:len(self.rows)]

    @property
    def b(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    # text dump ---------------------------------------------------------
    def to_lp_text(self) -> str:
        """CPLEX-style LP text (Maximize / Subject To / Bounds / End)."""
        def expr(idx, val):
            parts = []
            for j, v in zip(idx, val):
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v):.17g} {self.col_names[j]}")
            text = " ".join(parts) if parts else "0 " + self.col_names[0]
            return text[2:] if text.startswith("+ ") else text

        c = self.c
        nz = np.flatnonzero(c)
        lines = ["\\ written by mgclp", "Maximize", f" obj: {expr(nz, c[nz])}", "Subject To"]
        for r, (idx, val, rhs) in enumerate(self.rows):
            lines.append(f" r{r}: {expr(idx, val)} <= {rhs:.17g}")
        lines.append("Bounds")
        for j in range(self.n_cols):
            lines.append(f" {self._lb[j]:.17g} <= {self.col_names[j]} <= {self._ub[j]:.17g}")
        lines.append("End")
        return "\n".join(lines) + "\n"

    def write_lp(self, path: str | Path) -> None:
        Path(path).write_text(self.to_lp_text())


@dataclass
class LpBasis:
    """Opaque warm-start tag: basic variable per row and nonbasic states."""

    basic: np.ndarray
    state: np.ndarray
    n_cols: int
    n_rows: int
    # cached inverse of the basis matrix and pivots applied since it was
    # last computed from scratch; callers may drop it to save memory
    binv: np.ndarray | None = field(default=None, repr=False, compare=False)
    age: int = 0


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | iteration-limit | time-limit
    values: np.ndarray
    objective: float
    basis: LpBasis | None = None
    iterations: int = 0
    duals: np.ndarray | None = field(default=None, repr=False)
    # objective change per unit increase of each column (maximization sense)
    reduced: np.ndarray | None = field(default=None, repr=False)
