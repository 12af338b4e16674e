"""OR-library p-median files, shortest paths, coverage matrices and reports."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .bnc import SolveReport


class InstanceError(ValueError):
    """Raised for malformed instance files or invalid instance data."""


@dataclass(frozen=True)
class RawGraph:
    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]
    p: int

    def __post_init__(self):
        if self.n_vertices < 1:
            raise InstanceError("graph needs at least one vertex")
        for u, v, c in self.edges:
            if not (1 <= u <= self.n_vertices and 1 <= v <= self.n_vertices):
                raise InstanceError(
                    f"edge ({u}, {v}) references a vertex outside 1..{self.n_vertices}")
            if u == v:
                raise InstanceError(f"self loop on vertex {u}")
            if c < 0 or math.isnan(c):
                raise InstanceError(f"edge ({u}, {v}) has negative cost {c}")

    def to_text(self) -> str:
        """Canonical pmed text: header plus one edge per line."""
        lines = [f"{self.n_vertices} {len(self.edges)} {self.p}"]
        for u, v, c in self.edges:
            lines.append(f"{u} {v} {_fmt_num(c)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CoverageParams:
    r: float
    R: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.r < self.R):
            raise InstanceError(f"need 0 <= r < R, got r={self.r}, R={self.R}")
        if not (0.0 <= self.theta <= 1.0):
            raise InstanceError(f"theta must lie in [0, 1], got {self.theta}")


@dataclass(frozen=True, eq=False)
class Instance:
    """An MGCLP instance: coverage matrix ``f`` (locations x customers),
    customer weights ``w``, facility budget ``K`` and mixing weight ``theta``."""

    f: np.ndarray
    w: np.ndarray
    K: int
    theta: float
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.ascontiguousarray(self.f, dtype=np.float64)
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if f.ndim != 2:
            raise InstanceError("coverage matrix must be two-dimensional")
        if w.shape != (f.shape[1],):
            raise InstanceError(
                f"weights have shape {w.shape}, expected ({f.shape[1]},)")
        if f.size and (f.min() < 0.0 or f.max() > 1.0 or np.isnan(f).any()):
            raise InstanceError("coverage values must lie in [0, 1]")
        if w.size and (w.min() < 0.0 or np.isnan(w).any()):
            raise InstanceError("customer weights must be nonnegative")
        if int(self.K) != self.K or self.K < 0:
            raise InstanceError(f"K must be a nonnegative integer, got {self.K}")
        if not (0.0 <= self.theta <= 1.0):
            raise InstanceError(f"theta must lie in [0, 1], got {self.theta}")
        f.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def n_locations(self) -> int:
        return self.f.shape[0]

    @property
    def n_customers(self) -> int:
        return self.f.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())

    def count_full(self) -> int:
        """Number of pairs with f = 1 (the #C1 column)."""
        return int(np.count_nonzero(self.f == 1.0))

    def count_partial(self) -> int:
        """Number of pairs with 0 < f < 1 (the #CP column)."""
        return int(np.count_nonzero((self.f > 0.0) & (self.f < 1.0)))

    def with_budget(self, K: int) -> "Instance":
        return Instance(self.f, self.w, K, self.theta, self.name, dict(self.meta))


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_pmed(text: str | Iterable[str]) -> RawGraph:
    """Parse an OR-library p-median file (``n m p`` header, then ``u v cost``)."""
    if isinstance(text, str):
        text = io.StringIO(text)
    header = None
    edges = []
    lineno = 0
    for lineno, line in enumerate(text, start=1):
        parts = line.split()
        if not parts:
            continue
        if header is None:
            if len(parts) != 3:
                raise InstanceError(f"line {lineno}: expected 'n m p' header")
            try:
                header = tuple(int(p) for p in parts)
            except ValueError:
                raise InstanceError(f"line {lineno}: header must hold integers") from None
            continue
        if len(parts) != 3:
            raise InstanceError(f"line {lineno}: expected 'u v cost', got {line.strip()!r}")
        try:
            u, v, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceError(f"line {lineno}: cannot parse {line.strip()!r}") from None
        edges.append((u, v, c))
    if header is None:
        raise InstanceError("empty instance file")
    n, m, p = header
    if len(edges) != m:
        raise InstanceError(f"header announces {m} edges, file holds {len(edges)}")
    return RawGraph(n, tuple(edges), p)


def read_pmed(path: str | Path) -> RawGraph:
    with open(path, "r", encoding="ascii") as fh:
        return parse_pmed(fh)


def all_pairs_shortest_paths(g: RawGraph) -> np.ndarray:
    """Floyd-Warshall on the undirected graph; unreachable pairs are ``inf``.

    An edge listed more than once takes the cost of its last occurrence,
    the OR-library convention for the pmed files."""
    n = g.n_vertices
    d = np.full((n, n), np.inf)
    for u, v, c in g.edges:
        d[u - 1, v - 1] = d[v - 1, u - 1] = c
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def linear_decline(d, r: float, R: float):
    """Coverage 1 up to distance r, 0 from R on, linear in between."""
    if not R > r:
        raise InstanceError(f"need R > r, got r={r}, R={R}")
    d = np.asarray(d, dtype=np.float64)
    f = np.where(d <= r, 1.0, np.where(d >= R, 0.0, 1.0 - (d - r) / (R - r)))
    return f if f.ndim else float(f)


def build_coverage(d: np.ndarray, params: CoverageParams, K: int,
                   w: np.ndarray | None = None, name: str = "") -> Instance:
    """Instance with I = J = vertex set and uniform weights unless given."""
    f = linear_decline(d, params.r, params.R)
    if w is None:
        w = np.ones(f.shape[1])
    return Instance(f, w, K, params.theta, name=name,
                    meta={"r": params.r, "R": params.R})


def load_instance(path: str | Path, params: CoverageParams, K: int | None = None) -> Instance:
    """Read a pmed file and turn it into an instance (K defaults to the file's p)."""
    path = Path(path)
    g = read_pmed(path)
    d = all_pairs_shortest_paths(g)
    inst = build_coverage(d, params, g.p if K is None else K, name=path.stem)
    inst.meta["n_vertices"] = g.n_vertices
    return inst


# ------------------------------------------------------------------- reports

REPORT_COLUMNS = ("id", "|V|", "K", "#C1", "#CP", "t", "UB", "z*", "g%", "#BBn",
                  "t_r", "UB_r", "g_r%", "t_H", "z_H", "g_H%", "#CL", "mCL")
RUN_COLUMNS = ("status", "instance", "r", "R", "theta", "formulation", "mode",
               "time_limit")
CSV_COLUMNS = REPORT_COLUMNS + RUN_COLUMNS


def instance_id(name: str) -> str:
    m = re.fullmatch(r"pmed(\d+)", name)
    return m.group(1) if m else name


def _obj(x) -> str:
    return "" if x is None or not math.isfinite(x) else f"{x:.5f}"


def _pct(x) -> str:
    if x is None:
        return ""
    if math.isinf(x):
        return "inf"
    return f"{x:.3f}"


def _sec(x) -> str:
    return f"{x:.2f}"


def report_row(report: "SolveReport", run: dict | None = None) -> dict:
    run = run or {}
    row = {
        "id": instance_id(report.instance_name),
        "|V|": report.n_locations,
        "K": report.K,
        "#C1": report.n_full,
        "#CP": report.n_partial,
        "t": "TL" if report.status == "time_limit" else _sec(report.t_total),
        "UB": _obj(report.ub),
        "z*": _obj(report.z_star),
        "g%": _pct(report.gap_pct),
        "#BBn": report.nodes,
        "t_r": _sec(report.t_root),
        "UB_r": _obj(report.ub_root),
        "g_r%": _pct(report.gap_root_pct),
        "t_H": _sec(report.t_heur),
        "z_H": _obj(report.z_heur),
        "g_H%": _pct(report.gap_heur_pct),
        "#CL": report.n_coloc_locations,
        "mCL": report.max_coloc,
        "status": report.status,
    }
    for key in RUN_COLUMNS[1:]:
        row[key] = run.get(key, "")
    return row


def write_report(reports, fmt: str = "csv", runs=None, sink=None) -> bytes:
    """Serialize one report (or a list of them) as CSV or JSON bytes.

    ``runs`` carries the run parameters recorded alongside each report.
    If ``sink`` is a path or binary file object the bytes are also written
    there; failures surface as ``OSError``.
    """
    if not isinstance(reports, (list, tuple)):
        reports = [reports]
        runs = [runs] if runs is not None else None
    runs = list(runs) if runs is not None else [None] * len(reports)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for rep, run in zip(reports, runs):
            writer.writerow(report_row(rep, run))
        data = buf.getvalue().encode()
    elif fmt == "json":
        objs = []
        for rep, run in zip(reports, runs):
            obj = rep.to_dict()
            obj["run"] = run or {}
            objs.append(obj)
        payload = objs[0] if len(objs) == 1 else objs
        data = (json.dumps(payload, indent=2, allow_nan=False, default=_json_default)
                + "\n").encode()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if sink is not None:
        if isinstance(sink, (str, Path)):
            Path(sink).write_bytes(data)
        else:
            sink.write(data)
    return data


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")
