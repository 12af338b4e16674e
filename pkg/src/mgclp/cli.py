"""Command-line entry point: solve one instance or a batch of runs."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .bnc import MODES, ResourceLimitError, SolverConfig, solve
from .instance_io import CoverageParams, InstanceError, load_instance, write_report

EXIT_OK, EXIT_TIME_LIMIT, EXIT_RESOURCE, EXIT_INPUT = 0, 2, 3, 4
DEFAULT_TIME_LIMIT = 600.0


@dataclass
class RunSpec:
    instance: str
    r: float = 5.0
    R: float = 20.0
    theta: float = 0.2
    K: int | None = None
    formulation: str = "F4"
    mode: str = "fhp"
    time_limit: float = DEFAULT_TIME_LIMIT

    def __post_init__(self):
        self.formulation = self.formulation.upper()
        CoverageParams(self.r, self.R, self.theta)
        SolverConfig(self.formulation, self.mode, self.time_limit)
        if self.K is not None and self.K < 0:
            raise InstanceError(f"K must be nonnegative, got {self.K}")

    def record(self) -> dict:
        return asdict(self)


def _default_time_limit() -> float:
    raw = os.environ.get("MGCLP_TIME_LIMIT")
    if raw is None:
        return DEFAULT_TIME_LIMIT
    try:
        return float(raw)
    except ValueError:
        raise InstanceError(f"MGCLP_TIME_LIMIT is not a number: {raw!r}") from None


def run(spec: RunSpec, progress=None):
    """Load, solve and return (exit code, report or None, message)."""
    try:
        inst = load_instance(spec.instance, CoverageParams(spec.r, spec.R, spec.theta), spec.K)
    except (OSError, InstanceError) as exc:
        return EXIT_INPUT, None, f"{spec.instance}: {exc}"
    cfg = SolverConfig(spec.formulation, spec.mode, spec.time_limit)
    try:
        rep = solve(inst, cfg, progress=progress)
    except ResourceLimitError as exc:
        return EXIT_RESOURCE, None, f"{spec.instance}: {exc}"
    code = EXIT_OK if rep.status == "optimal" else EXIT_TIME_LIMIT
    return code, rep, ""


def _run_quiet(spec: RunSpec):
    return run(spec)


def read_batch(path: str | Path, time_limit: float) -> list[RunSpec]:
    """RunSpecs from a JSON array or a JSON-lines file."""
    text = Path(path).read_text()
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        items = [json.loads(line) for line in text.splitlines() if line.strip()]
    if isinstance(items, dict):
        items = [items]
    specs = []
    for n, item in enumerate(items, 1):
        item = dict(item)
        item.setdefault("time_limit", time_limit)
        try:
            specs.append(RunSpec(**item))
        except TypeError as exc:
            raise InstanceError(f"batch entry {n}: {exc}") from None
    return specs


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgclp", description=__doc__)
    p.add_argument("--instance", help="pmed-format graph file")
    p.add_argument("--r", type=float, default=5.0, help="full-coverage radius")
    p.add_argument("--R", type=float, default=20.0, help="zero-coverage radius")
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--K", type=int, default=None, help="budget (default: p from the file)")
    p.add_argument("--formulation", default="f4", choices=["f1", "f2", "f3", "f4"],
                   type=str.lower)
    p.add_argument("--mode", default="fhp", choices=MODES)
    p.add_argument("--time-limit", type=float, default=None,
                   help="seconds per run (env MGCLP_TIME_LIMIT, default 600)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--batch", help="JSON or JSON-lines file of run specs")
    p.add_argument("--workers", type=int, default=1, help="parallel batch workers")
    p.add_argument("--verbose", "-v", action="store_true", help="progress on stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    progress = sys.stderr if args.verbose else None
    try:
        tl = args.time_limit if args.time_limit is not None else _default_time_limit()
        if args.batch:
            specs = read_batch(args.batch, tl)
        elif args.instance:
            specs = [RunSpec(args.instance, args.r, args.R, args.theta, args.K,
                             args.formulation, args.mode, tl)]
        else:
            print("mgclp: one of --instance or --batch is required", file=sys.stderr)
            return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"mgclp: {exc}", file=sys.stderr)
        return EXIT_INPUT
    missing = [s.instance for s in specs if not Path(s.instance).is_file()]
    if missing:
        print(f"mgclp: instance file not found: {', '.join(missing)}", file=sys.stderr)
        return EXIT_INPUT

    if args.workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_quiet, specs))
    else:
        results = [run(s, progress) for s in specs]

    reports, runs, codes = [], [], []
    for spec, (code, rep, msg) in zip(specs, results):
        codes.append(code)
        if msg:
            print(f"mgclp: {msg}", file=sys.stderr)
        if rep is not None:
            reports.append(rep)
            runs.append(spec.record())
    if reports:
        data = write_report(reports, args.format, runs)
        if args.format == "json" and args.batch and len(reports) == 1:
            # batches always serialize as an array
            data = (json.dumps([json.loads(data)], indent=2) + "\n").encode()
        if args.out:
            Path(args.out).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
    for code in (EXIT_INPUT, EXIT_RESOURCE, EXIT_TIME_LIMIT):
        if code in codes:
            return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
