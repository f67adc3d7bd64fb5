import sys
from pathlib import Path

import numpy as np
import pytest

from hydrocascade import io
from hydrocascade.model import (
    CascadeModel,
    GaugeCurve,
    KeModel,
    Plant,
    Reservoir,
    Scenario,
    SpillPolicy,
    TerminalTarget,
    validate_model,
)

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
FIXTURES = Path(__file__).resolve().parent / "fixtures"

MODEL_FILES = {1: "tagliamento.model", 2: "tagliamento_s2.model", 3: "tagliamento_s3.model"}


def case(n):
    """(model, scenario) of bundled case ``n``."""
    model = io.load_model(DATA / MODEL_FILES[n])
    return model, io.load_scenario(DATA / f"scenario{n}.csv", model)


def reference_schedule(n, model, drop_spill=False):
    sched = io.load_schedule(FIXTURES / f"results_scenario{n}.csv", model, 24)
    if drop_spill:
        sched = type(sched)(turbine=dict(sched.turbine), spill={})
    return sched


def single_reservoir(v_min=0.0, v_max=1e6, v_start=5e5, terminal=None, t_max=10.0, t_min=0.0, spill=None, ke=None,
                     gauge=None):
    res = Reservoir(
        "R", v_min, v_max, v_start, terminal or TerminalTarget.at_least(v_min), spill or SpillPolicy(), gauge
    )
    plant = Plant("P", "R", "SINK", t_max, t_min, 0.0, ke or KeModel())
    return validate_model(CascadeModel((res,), (plant,)))


def two_lakes(t_c=2.0, spill=False):
    up = Reservoir("Up", 0.0, 1e6, 5e5, TerminalTarget.at_least(0.0), SpillPolicy(spill, 50.0))
    down = Reservoir("Down", 0.0, 1e6, 5e5, TerminalTarget.at_least(0.0), SpillPolicy(spill, 50.0))
    plants = (Plant("A", "Up", "Down", 10.0, 0.0, t_c), Plant("B", "Down", "SINK", 20.0, 0.0, 0.0))
    return validate_model(CascadeModel((up, down), plants))


def scenario_of(prices, **inflows):
    prices = np.asarray(prices, dtype=float)
    return Scenario(prices.size, prices, {k: np.asarray(v, dtype=float) for k, v in inflows.items()})


@pytest.fixture(params=[1, 2, 3])
def bundled(request):
    return (request.param,) + case(request.param)


@pytest.fixture
def linear_gauge():
    return GaugeCurve(((0.0, 0.0), (10.0, 1e6)))


def semicontinuous_instance(rng, n_hours=None):
    """One reservoir, one plant with ``t_min = 3``, up to six hours.

    Volumes are in units of one hour of 1 m3/s so the terminal window lands
    between the on/off regimes often enough to make the binaries matter.
    """
    from hydrocascade.schedule import ProblemOptions, build_lp, default_ke_values

    n = int(n_hours or rng.integers(1, 7))
    unit = 3600.0
    v_start = float(rng.uniform(5, 40)) * unit
    lo = float(rng.uniform(0, 20)) * unit
    terminal = TerminalTarget.window(lo, lo + float(rng.uniform(0, 6)) * unit)
    model = single_reservoir(
        v_min=0.0, v_max=60 * unit, v_start=v_start, terminal=terminal, t_max=10.0, t_min=3.0
    )
    prices = rng.uniform(-5, 30, n).round(2)
    inflow = rng.uniform(0, 4, n).round(3)
    scenario = scenario_of(prices, R=inflow)
    lp, vmap = build_lp(model, scenario, ProblemOptions(semicontinuous=True), default_ke_values(model))
    return model, scenario, lp, vmap


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
