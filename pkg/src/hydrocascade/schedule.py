"""Build and solve the discretized scheduling problem.

Decision variables are the release of every reservoir that feeds plants
(one per hour) and, where allowed, its spill. The volume of reservoir ``i``
after hour ``k`` is

    V0 + 3600 * (sum of inflow - release - spill + routed upstream arrivals)

over hours ``1..k``, and must stay inside ``[v_min, v_max]``. Revenue is
price times energetic coefficient times release, minus the same product on
spilled water.

With a head-dependent coefficient the objective becomes nonlinear. It is
handled by successive linear programming: freeze the coefficient at the
heads of the current iterate, solve the LP, repeat. That is a local method
and carries no global optimality guarantee.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    HorizonZero,
    InfeasibleSchedule,
    InternalError,
    MissingKe,
    NotOptimal,
    UnboundedModel,
    ValidationError,
)
from .lp import LinearProgram, LpSolution, Status, semicontinuous_reformulate, solve_lp, solve_milp
from .model import SECONDS_PER_HOUR, KeModel, Scenario, Schedule, ValidatedModel, gauge_height, validate_model
from .routing import arrival_weights
from .simulate import revenue, simulate_volumes

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-7


@dataclass(frozen=True)
class ProblemOptions:
    ke_mode: str = "constant"
    semicontinuous: bool = False
    slp_max_iters: int = 50
    slp_tol: float = 1e-4
    spill_penalty_mode: str = "ke_price"

    def __post_init__(self):
        if self.ke_mode not in ("constant", "polynomial"):
            raise ValidationError(f"unknown ke_mode {self.ke_mode!r}")
        if self.spill_penalty_mode != "ke_price":
            raise ValidationError(f"unknown spill_penalty_mode {self.spill_penalty_mode!r}")
        if self.slp_max_iters < 1 or not self.slp_tol > 0:
            raise ValidationError("SLP needs max_iters >= 1 and tol > 0")


@dataclass
class VariableMap:
    """Where each decision variable lives in the LP vector.

    Keys are ``(reservoir id, hour)`` with 0-based hours.
    """

    n_hours: int
    release: dict = field(default_factory=dict)
    spill: dict = field(default_factory=dict)
    switch: dict = field(default_factory=dict)
    down: dict = field(default_factory=dict)

    @property
    def binaries(self) -> list:
        return sorted(self.switch.values())


@dataclass
class SlpTrace:
    objectives: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objectives)

    @property
    def final_step(self) -> float:
        return self.steps[-1] if self.steps else float("nan")


def eval_ke(ke: KeModel, h: float) -> float:
    """Energetic coefficient at head ``h``; constant models ignore the head."""
    if ke.kind == "constant":
        return ke.efficiency * ke.constant_value
    acc = 0.0
    for g in reversed(ke.coefficients):
        acc = acc * h + g
    return ke.efficiency * acc


def default_ke_values(model: ValidatedModel) -> dict:
    return {p.id: p.ke.efficiency * p.ke.constant_value for p in model.plants}


def _ke_series(ke_values, pid, n):
    try:
        value = ke_values[pid]
    except KeyError:
        raise MissingKe(f"no Ke value for plant {pid}") from None
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise MissingKe(f"Ke series for plant {pid} has {arr.size} values, expected {n}")
    return arr


def build_lp(model, scenario: Scenario, options: ProblemOptions, ke_values) -> tuple:
    """Assemble the frozen-coefficient LP.

    ``ke_values`` maps plant id to a constant or an hourly series. Returns
    ``(LinearProgram, VariableMap)``.
    """
    model = validate_model(model)
    n = scenario.n_hours
    if n == 0:
        raise HorizonZero("the scenario has no hours")
    prices = scenario.prices
    ke = {pid: _ke_series(ke_values, pid, n) for pid in model.plant_ids}

    lp = LinearProgram()
    vmap = VariableMap(n_hours=n, down=dict(model.down))
    for res in model.reservoirs:
        rid = res.id
        chain = model.down[rid]
        if not chain:
            continue
        t_max = model.flow_bounds[rid][1]
        coeff = sum(ke[pid] for pid in chain) * prices
        for k in range(n):
            vmap.release[rid, k] = lp.add_var(0.0, t_max, coeff[k], name=f"x[{rid},{k + 1}]")
    for res in model.reservoirs:
        rid = res.id
        if not res.spill.allowed:
            continue
        chain = model.down[rid]
        penalty = sum((ke[pid] for pid in chain), np.zeros(n)) * prices
        for k in range(n):
            vmap.spill[rid, k] = lp.add_var(0.0, res.spill.cap, -penalty[k], name=f"y[{rid},{k + 1}]")

    for res in model.reservoirs:
        rid = res.id
        cum_inflow = np.cumsum(scenario.inflow(rid))
        weights = {up: arrival_weights(model.delay[up]) for up in model.feeders[rid]}
        for k in range(n):
            coeffs = {}
            for l in range(k + 1):
                if (rid, l) in vmap.release:
                    coeffs[vmap.release[rid, l]] = -SECONDS_PER_HOUR
                if (rid, l) in vmap.spill:
                    coeffs[vmap.spill[rid, l]] = -SECONDS_PER_HOUR
            for up, w in weights.items():
                for l in range(k + 1):
                    share = 0.0
                    if l + w.lag_lo <= k:
                        share += w.w_lo
                    if l + w.lag_hi <= k:
                        share += w.w_hi
                    if share:
                        j = vmap.release[up, l]
                        coeffs[j] = coeffs.get(j, 0.0) + SECONDS_PER_HOUR * share
            base = res.v_start + SECONDS_PER_HOUR * cum_inflow[k]
            lp.add_row(coeffs, ">=", res.v_min - base, name=f"vmin[{rid},{k + 1}]")
            lp.add_row(coeffs, "<=", res.v_max - base, name=f"vmax[{rid},{k + 1}]")
            if k == n - 1:
                t = res.terminal
                if t.mode == "exact" or t.v_lo == t.v_hi:
                    lp.add_row(coeffs, "=", t.v_lo - base, name=f"terminal[{rid}]")
                else:
                    lp.add_row(coeffs, ">=", t.v_lo - base, name=f"terminal_lo[{rid}]")
                    if np.isfinite(t.v_hi):
                        lp.add_row(coeffs, "<=", t.v_hi - base, name=f"terminal_hi[{rid}]")

    if options.semicontinuous:
        for rid in model.releasing:
            t_min, t_max = model.flow_bounds[rid]
            if t_min <= 0:
                continue
            for k in range(n):
                lp, y = semicontinuous_reformulate(lp, vmap.release[rid, k], t_min, t_max)
                vmap.switch[rid, k] = y
    return lp, vmap


def extract_schedule(solution: LpSolution, vmap: VariableMap) -> Schedule:
    if solution.status is not Status.OPTIMAL:
        raise NotOptimal(f"cannot extract a schedule from a {solution.status.value} solution")
    z = solution.values

    def value(j):
        v = float(z[j])
        if v < 0:
            if v < -CLAMP_TOL:
                raise InternalError(f"variable {j} = {v} is below its zero bound")
            return 0.0
        return v

    n = vmap.n_hours
    releases = {}
    for (rid, k), j in vmap.release.items():
        releases.setdefault(rid, np.zeros(n))[k] = value(j)
    turbine = {}
    for rid, chain in vmap.down.items():
        for pid in chain:
            turbine[pid] = releases.get(rid, np.zeros(n))
    spill = {}
    for (rid, k), j in vmap.spill.items():
        spill.setdefault(rid, np.zeros(n))[k] = value(j)
    return Schedule(turbine=turbine, spill=spill)


def screen_feasibility(model, scenario: Scenario) -> list:
    """Cheap necessary conditions on the terminal targets.

    Each reservoir's end volume is bracketed by releasing nothing while
    upstream releases at full capacity, and by releasing (and spilling) at
    full capacity while upstream stays shut. A target outside the bracket
    cannot be met.
    """
    model = validate_model(model)
    n = scenario.n_hours
    problems = []
    for res in model.reservoirs:
        rid = res.id
        water_in = float(np.sum(scenario.inflow(rid)))
        arrive_max = 0.0
        for up in model.feeders[rid]:
            w = arrival_weights(model.delay[up])
            hours = w.w_lo * max(0, n - w.lag_lo) + w.w_hi * max(0, n - w.lag_hi)
            arrive_max += model.flow_bounds[up][1] * hours
        out_max = n * model.flow_bounds[rid][1] if model.down[rid] else 0.0
        if res.spill.allowed:
            out_max += n * res.spill.cap
        highest = res.v_start + SECONDS_PER_HOUR * (water_in + arrive_max)
        lowest = res.v_start + SECONDS_PER_HOUR * (water_in - out_max)
        if highest < res.terminal.v_lo:
            problems.append(
                f"{rid}: terminal volume {res.terminal.v_lo:.6g} m3 unreachable, "
                f"at most {highest:.6g} m3 with no release and full upstream arrivals"
            )
        if lowest > res.terminal.v_hi:
            problems.append(
                f"{rid}: terminal volume {res.terminal.v_hi:.6g} m3 unreachable, "
                f"at least {lowest:.6g} m3 even at full turbine and spill capacity"
            )
    return problems


def _solve(model, scenario, options, ke_values):
    lp, vmap = build_lp(model, scenario, options, ke_values)
    if vmap.binaries:
        sol = solve_milp(lp, vmap.binaries)
    else:
        sol = solve_lp(lp)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleSchedule(
            "no schedule satisfies the volume, flow and terminal constraints",
            ["the LP is infeasible although every terminal target passes the reachability screen"],
        )
    if sol.status is Status.UNBOUNDED:
        raise UnboundedModel("the LP is unbounded; check flow and spill caps")
    return extract_schedule(sol, vmap), sol.objective_value


def _screen(model, scenario):
    problems = screen_feasibility(model, scenario)
    if problems:
        raise InfeasibleSchedule("terminal targets cannot be met: " + "; ".join(problems), problems)


def optimize_constant_ke(model, scenario: Scenario, ke_values=None, options: ProblemOptions | None = None):
    """Optimal schedule with fixed energetic coefficients.

    ``ke_values`` defaults to each plant's ``efficiency * constant_value``.
    Returns ``(Schedule, objective)``.
    """
    model = validate_model(model)
    options = options or ProblemOptions()
    if ke_values is None:
        ke_values = default_ke_values(model)
    _screen(model, scenario)
    return _solve(model, scenario, options, ke_values)


def head_ke_values(model: ValidatedModel, scenario: Scenario, schedule: Schedule) -> dict:
    """Hourly coefficient of each plant at the start-of-hour head of ``schedule``."""
    traj = simulate_volumes(model, scenario, schedule)
    n = scenario.n_hours
    out = {}
    for plant in model.plants:
        if plant.ke.kind != "polynomial":
            out[plant.id] = eval_ke(plant.ke, 0.0)
            continue
        gauge = model.reservoir(plant.upstream).gauge
        v = np.clip(traj[plant.upstream][:n], gauge.volumes[0], gauge.volumes[-1])
        out[plant.id] = np.array([eval_ke(plant.ke, gauge_height(gauge, vk)) for vk in v])
    return out


def optimize_polynomial_ke(model, scenario: Scenario, options: ProblemOptions | None = None):
    """Successive linear programming on head-dependent coefficients.

    Starts from the all-zero schedule. Each pass freezes every plant's
    coefficient at the heads simulated for the previous schedule and solves
    the resulting LP. Stops when no release changes by more than
    ``options.slp_tol`` or after ``options.slp_max_iters`` passes.

    Returns ``(Schedule, objective, SlpTrace)``; the objective is the
    nonlinear revenue of the returned schedule.
    """
    model = validate_model(model)
    options = options or ProblemOptions(ke_mode="polynomial")
    _screen(model, scenario)
    n = scenario.n_hours
    current = Schedule.zeros(model, n)
    trace = SlpTrace()
    for it in range(options.slp_max_iters):
        ke_values = head_ke_values(model, scenario, current)
        nxt, lp_obj = _solve(model, scenario, options, ke_values)
        step = max(
            [float(np.max(np.abs(nxt.turbine[p] - current.turbine[p]), initial=0.0)) for p in model.plant_ids]
            + [float(np.max(np.abs(nxt.spill_of(r, n) - current.spill_of(r, n)), initial=0.0)) for r in model.spilling]
        )
        trace.objectives.append(lp_obj)
        trace.steps.append(step)
        log.debug("SLP pass %d: LP objective %.6f, step %.3g", it + 1, lp_obj, step)
        current = nxt
        if step < options.slp_tol:
            trace.converged = True
            break
    if not trace.converged:
        log.warning("SLP stopped after %d passes without converging (last step %.3g)", trace.iterations, trace.final_step)
    objective = revenue(model, scenario, current, mode="polynomial")
    return current, objective, trace


def optimize(model, scenario: Scenario, options: ProblemOptions | None = None, ke_values=None):
    """Dispatch on ``options.ke_mode``; always returns ``(Schedule, objective, SlpTrace | None)``."""
    options = options or ProblemOptions()
    if options.ke_mode == "polynomial":
        return optimize_polynomial_ke(model, scenario, options)
    schedule, objective = optimize_constant_ke(model, scenario, ke_values, options)
    return schedule, objective, None
