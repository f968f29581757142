"""Command-line driver: benchmark sweeps to CSV and the self-check report.

Examples
--------
    iga-solidshell run --benchmark scordelis --formulations ss,ss_ans,std --elems 4,8,16
    iga-solidshell run --benchmark straight --slenderness 1e1,1e2,1e3,1e4 --distortion 30
    iga-solidshell verify
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .benchmarks import BENCHMARKS, RunResult, make_case, run
from .elements import Formulation

CSV_HEADER = ("benchmark", "formulation", "degree", "n_elems", "slenderness", "distortion_deg",
              "raw_deflection", "normalized_deflection", "wall_time_s")


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    formulations: tuple[str, ...]
    degree: int = 2
    elems: tuple[int, ...] | None = None
    slenderness: tuple[float, ...] | None = None
    distortion: float = 0.0
    out: str | None = None
    jobs: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; expected one of {BENCHMARKS}")
        if not self.formulations:
            raise ValueError("at least one formulation is required")
        for f in self.formulations:
            Formulation.parse(f)
        if self.elems is not None and any(n < 1 for n in self.elems):
            raise ValueError("mesh sizes must be positive")
        if self.slenderness is not None and any(s <= 0 for s in self.slenderness):
            raise ValueError("slenderness values must be positive")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for name, n, s, distortion, _, _ in self.tasks():
            make_case(name, n_elems=n, slenderness=s, distortion_deg=distortion)

    def tasks(self) -> list[tuple]:
        elems = self.elems or (None,)
        slender = self.slenderness or (None,)
        return [(self.benchmark, n, s, self.distortion, f, self.degree)
                for f, n, s in itertools.product(self.formulations, elems, slender)]


def _run_task(task) -> RunResult:
    name, n, s, distortion, form, degree = task
    case = make_case(name, n_elems=n, slenderness=s, distortion_deg=distortion)
    return run(case, form, degree)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def cmd_run(config: RunConfig, stream=None) -> list[RunResult]:
    """Run every task of ``config`` and write CSV rows to ``stream``."""
    tasks = config.tasks()
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    if not config.timing:
        for r in results:
            r.wall_time_s = 0.0
    if stream is not None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in results:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_HEADER])
    return results


def cmd_verify(stream=None, constants=None) -> int:
    from .verify import run_checks

    stream = stream or sys.stdout
    results = run_checks(constants)
    for r in results:
        print(r.line(), file=stream)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=stream)
        return 1
    print("all checks passed", file=stream)
    return 0


def _list(conv):
    def parse(text: str):
        items = [t.strip() for t in text.split(",") if t.strip()]
        try:
            return tuple(conv(t) for t in items)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _int_like(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iga-solidshell", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark sweep and print CSV")
    r.add_argument("--benchmark", required=True, choices=BENCHMARKS)
    r.add_argument("--formulations", type=_list(str), default=("ss", "ss_ans", "std"),
                   help="comma-separated subset of std,curv,ss_ans,ss")
    r.add_argument("--degree", type=int, default=2)
    r.add_argument("--elems", type=_list(_int_like), default=None,
                   help="comma-separated element counts (per side for the shells)")
    r.add_argument("--slenderness", type=_list(float), default=None,
                   help="comma-separated L/t or R/t values (beam problems only)")
    r.add_argument("--distortion", type=float, default=0.0,
                   help="maximum in-plane distortion angle in degrees (straight beam)")
    r.add_argument("--jobs", type=int, default=1,
                   help="worker processes; the IGA_SS_JOBS environment variable overrides it")
    r.add_argument("--out", default=None, help="CSV file (default: stdout)")
    r.add_argument("--no-timing", action="store_true",
                   help="write wall_time_s as 0 so that repeated runs give identical files")

    sub.add_parser("verify", help="run the projector, patch and rigid-mode self-checks")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify()

    jobs = args.jobs
    env = os.environ.get("IGA_SS_JOBS")
    if env:
        try:
            jobs = int(env)
        except ValueError:
            ap.error(f"IGA_SS_JOBS must be an integer, got {env!r}")
    try:
        config = RunConfig(args.benchmark, tuple(f.lower() for f in args.formulations), args.degree,
                           args.elems, args.slenderness, args.distortion, args.out, jobs,
                           timing=not args.no_timing)
    except ValueError as exc:
        ap.error(str(exc))
    try:
        if args.out:
            with open(args.out, "w", newline="") as fh:
                cmd_run(config, fh)
        else:
            cmd_run(config, sys.stdout)
    except (ValueError, RuntimeError) as exc:
        print(f"iga-solidshell: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
