"""Compare the compiled and numpy simplex kernels.

    python3 benchmarks/bench_kernel.py [--repeat 5] [--days 7]

Solves the bundled scenario LPs, a multi-day tiling of scenario 1 and a batch
of random dense LPs with each available kernel, reports the best wall time
and checks that both kernels return bit-identical objectives.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from hydrocascade import io
from hydrocascade.lp import LinearProgram, kernels, solve_lp
from hydrocascade.model import Scenario
from hydrocascade.schedule import ProblemOptions, build_lp, default_ke_values

DATA = Path(__file__).resolve().parents[1] / "data"
CASES = {1: "tagliamento.model", 2: "tagliamento_s2.model", 3: "tagliamento_s3.model"}


def bundled_lp(n, days=1):
    model = io.load_model(DATA / CASES[n])
    sc = io.load_scenario(DATA / f"scenario{n}.csv", model)
    if days > 1:
        sc = Scenario(sc.n_hours * days, np.tile(sc.prices, days),
                      {r: np.tile(sc.inflow(r), days) for r in model.reservoir_ids})
    lp, _ = build_lp(model, sc, ProblemOptions(), default_ke_values(model))
    return lp


def random_lp(rng, n_vars, n_rows):
    lp = LinearProgram()
    for _ in range(n_vars):
        lp.add_var(0.0, float(rng.uniform(1, 10)), float(rng.normal()))
    for _ in range(n_rows):
        coeffs = {j: float(a) for j, a in enumerate(rng.normal(size=n_vars)) if rng.random() < 0.6}
        lp.add_row(coeffs, "<=", float(rng.uniform(1, 20)))
    return lp


def workloads(days, rng):
    yield "scenario 1", [bundled_lp(1)]
    yield "scenario 2", [bundled_lp(2)]
    yield "scenario 3", [bundled_lp(3)]
    yield f"scenario 1 x {days} days", [bundled_lp(1, days)]
    yield "random 40x30 (x20)", [random_lp(rng, 40, 30) for _ in range(20)]
    yield "random 150x120 (x5)", [random_lp(rng, 150, 120) for _ in range(5)]


def best_time(lps, kernel, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        sols = [solve_lp(lp, kernel=kernel) for lp in lps]
        best = min(best, time.perf_counter() - start)
    return best, [s.objective_value for s in sols]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = [k for k in ("compiled", "python") if k in kernels.AVAILABLE]
    print(f"kernels: {', '.join(names)}")
    print(f"{'workload':<26}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}{'identical':>11}")
    for label, lps in workloads(args.days, np.random.default_rng(args.seed)):
        times, objs = {}, {}
        for name in names:
            times[name], objs[name] = best_time(lps, name, args.repeat)
        row = f"{label:<26}" + "".join(f"{1e3 * times[n]:>16.2f}" for n in names)
        if len(names) == 2:
            same = all(a == b for a, b in zip(objs["compiled"], objs["python"]))
            row += f"{times['python'] / times['compiled']:>9.1f}x{str(same):>11}"
        print(row)


if __name__ == "__main__":
    main()
