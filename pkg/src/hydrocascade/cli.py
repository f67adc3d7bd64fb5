"""Command-line entry point: ``solve``, ``check`` and ``simulate``.

Exit codes: 0 success, 2 infeasible (no schedule, or a checked schedule
breaks a constraint), 1 usage, parse or validation errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import io
from .errors import HydroError, InfeasibleSchedule, UnboundedModel
from .lp import kernels
from .schedule import ProblemOptions, optimize
from .simulate import check_feasibility, simulate_volumes

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

# schedule.csv carries 4 decimals, so a re-read schedule can be off by
# 5e-5 m3/s per hour; 1e-5 of the span absorbs that on the bundled lakes
CHECK_TOL = 1e-5

log = logging.getLogger("hydrocascade")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class RunConfig:
    model: Path
    scenarios: tuple
    out: Path
    ke_mode: str = "constant"
    semicontinuous: bool = False
    slp_max_iters: int = 50
    slp_tol: float = 1e-4
    tol: float = 1e-6
    jobs: int = 1

    @property
    def options(self) -> ProblemOptions:
        return ProblemOptions(
            ke_mode=self.ke_mode,
            semicontinuous=self.semicontinuous,
            slp_max_iters=self.slp_max_iters,
            slp_tol=self.slp_tol,
        )

    def out_dir(self, scenario: Path) -> Path:
        # one scenario writes straight into --out, a batch gets one folder each
        return self.out if len(self.scenarios) == 1 else self.out / scenario.stem


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hydrocascade", description="Day-ahead scheduling of cascaded hydro reservoirs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    p.add_argument("--kernel", choices=sorted(kernels.AVAILABLE), help="simplex inner loop to use")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="optimize a schedule and write results")
    s.add_argument("--model", required=True, type=Path)
    s.add_argument("--scenario", required=True, type=Path, action="append", help="repeat for a batch")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--ke-mode", choices=("constant", "polynomial"), default="constant")
    s.add_argument("--semicontinuous", action="store_true", help="enforce t_min with binary variables")
    s.add_argument("--slp-max-iters", type=_positive(int), default=50)
    s.add_argument("--slp-tol", type=_positive(float), default=1e-4)
    s.add_argument("--tol", type=_positive(float), default=1e-6, help="relative tolerance of the feasibility report")
    s.add_argument("--jobs", type=_positive(int), default=1, help="scenarios solved concurrently")

    c = sub.add_parser("check", help="check a schedule CSV against the model")
    c.add_argument("--model", required=True, type=Path)
    c.add_argument("--scenario", required=True, type=Path)
    c.add_argument("--schedule", required=True, type=Path)
    c.add_argument("--tol", type=_positive(float), default=CHECK_TOL)
    c.add_argument("--semicontinuous", action="store_true")

    m = sub.add_parser("simulate", help="volumes produced by a schedule CSV")
    m.add_argument("--model", required=True, type=Path)
    m.add_argument("--scenario", required=True, type=Path)
    m.add_argument("--schedule", required=True, type=Path)
    m.add_argument("--out", type=Path, help="volumes CSV path (default: stdout)")
    return p


def _solve_one(cfg: RunConfig, model, path: Path):
    scenario = io.load_scenario(path, model)
    try:
        schedule, objective, trace = optimize(model, scenario, cfg.options)
    except InfeasibleSchedule as exc:
        lines = [f"{path}: infeasible: {exc}"] + [f"  {d}" for d in exc.diagnosis]
        return EXIT_INFEASIBLE, lines
    except UnboundedModel as exc:
        return EXIT_ERROR, [f"{path}: {exc}"]
    trajectory = simulate_volumes(model, scenario, schedule)
    report = check_feasibility(model, scenario, schedule, tol=cfg.tol, semicontinuous=cfg.semicontinuous)
    out = cfg.out_dir(path)
    io.emit_results(out, schedule, trajectory, report, objective, model, scenario, trace=trace)
    msg = f"{path}: objective {objective:.4f}, results in {out}"
    if trace is not None:
        state = "converged" if trace.converged else "NOT converged"
        msg += f" (SLP {state} after {trace.iterations} passes)"
    if not report.feasible:
        return EXIT_ERROR, [msg, "  solver output failed the feasibility check:"] + [f"  {v}" for v in report.violations]
    return EXIT_OK, [msg]


def cmd_solve(args) -> int:
    cfg = RunConfig(
        model=args.model,
        scenarios=tuple(args.scenario),
        out=args.out,
        ke_mode=args.ke_mode,
        semicontinuous=args.semicontinuous,
        slp_max_iters=args.slp_max_iters,
        slp_tol=args.slp_tol,
        tol=args.tol,
        jobs=args.jobs,
    )
    model = io.load_model(cfg.model)
    # parse every scenario before solving anything so a typo fails fast
    for path in cfg.scenarios:
        io.load_scenario(path, model)
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(lambda p: _solve_one(cfg, model, p), cfg.scenarios))
    code = EXIT_OK
    for status, lines in results:
        for line in lines:
            print(line, file=sys.stderr)
        code = max(code, status)
    return code


def _load_triplet(args):
    model = io.load_model(args.model)
    scenario = io.load_scenario(args.scenario, model)
    schedule = io.load_schedule(args.schedule, model, scenario.n_hours)
    return model, scenario, schedule


def cmd_check(args) -> int:
    model, scenario, schedule = _load_triplet(args)
    report = check_feasibility(model, scenario, schedule, tol=args.tol, semicontinuous=args.semicontinuous)
    if report.feasible:
        print(f"{args.schedule}: feasible")
        return EXIT_OK
    print(f"{args.schedule}: {len(report.violations)} violations")
    for v in report.violations:
        print(f"  {v}")
    return EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    model, scenario, schedule = _load_triplet(args)
    trajectory = simulate_volumes(model, scenario, schedule)
    io.write_volumes(args.out if args.out is not None else sys.stdout, trajectory, model)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.kernel:
        kernels.select(args.kernel)
    try:
        return COMMANDS[args.command](args)
    except (HydroError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
