"""Forward mass-balance simulation and feasibility checking of schedules.

Nothing here reuses the LP builder's row assembly. Volumes are rebuilt hour
by hour from the balance identity, so an error in the optimizer's
constraints shows up as a disagreement instead of certifying itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, MissingKe
from .model import SECONDS_PER_HOUR, Scenario, Schedule, ValidatedModel, gauge_height, release_of, validate_model
from .routing import route_release

VIOLATION_KINDS = ("VolMin", "VolMax", "Terminal", "FlowBound", "SpillCap")


@dataclass(frozen=True, eq=False)
class VolumeTrajectory:
    """Volume of each reservoir at hour boundaries; index 0 is the start volume."""

    volumes: dict

    def __getitem__(self, rid: str) -> np.ndarray:
        return self.volumes[rid]

    def final(self, rid: str) -> float:
        return float(self.volumes[rid][-1])


@dataclass(frozen=True)
class Violation:
    kind: str
    entity: str
    hour: int
    magnitude: float

    def __str__(self):
        return f"{self.kind} {self.entity} hour {self.hour}: {self.magnitude:+.6g}"


@dataclass
class FeasibilityReport:
    violations: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def of_kind(self, kind: str) -> list:
        return [v for v in self.violations if v.kind == kind]


def _check_lengths(model, scenario, schedule):
    n = scenario.n_hours
    for pid in model.plant_ids:
        if pid not in schedule.turbine:
            raise LengthMismatch(f"schedule has no turbine series for plant {pid}")
        if schedule.turbine[pid].shape != (n,):
            raise LengthMismatch(f"turbine series for {pid} has {schedule.turbine[pid].size} values, expected {n}")
    for rid, series in schedule.spill.items():
        if series.shape != (n,):
            raise LengthMismatch(f"spill series for {rid} has {series.size} values, expected {n}")


def simulate_volumes(model, scenario: Scenario, schedule: Schedule) -> VolumeTrajectory:
    model = validate_model(model)
    _check_lengths(model, scenario, schedule)
    n = scenario.n_hours
    arrivals = {rid: np.zeros(n) for rid in model.reservoir_ids}
    for up, dst in model.outlet.items():
        if dst in arrivals:
            arrivals[dst] += route_release(release_of(model, schedule, up, n), model.delay[up], n)

    volumes = {}
    for res in model.reservoirs:
        rid = res.id
        inflow = scenario.inflow(rid)
        release = release_of(model, schedule, rid, n)
        spill = schedule.spill_of(rid, n)
        v = np.empty(n + 1)
        v[0] = res.v_start
        for k in range(n):
            v[k + 1] = v[k] + SECONDS_PER_HOUR * (inflow[k] - release[k] - spill[k] + arrivals[rid][k])
        volumes[rid] = v
    return VolumeTrajectory(volumes)


def check_feasibility(
    model, scenario: Scenario, schedule: Schedule, tol: float = 1e-6, semicontinuous: bool = False
) -> FeasibilityReport:
    """List every broken constraint of ``schedule``; hours are 1-based.

    Volume tolerances are ``tol`` times each reservoir's capacity span and
    flow tolerances ``tol`` times the flow cap (at least ``tol`` absolute).
    Magnitudes are signed: positive means above the limit.
    """
    model = validate_model(model)
    traj = simulate_volumes(model, scenario, schedule)
    n = scenario.n_hours
    out = []

    for res in model.reservoirs:
        span = res.v_max - res.v_min
        vtol = tol * (span if span > 0 else max(1.0, res.v_max))
        v = traj[res.id]
        for k in range(1, n + 1):
            if v[k] < res.v_min - vtol:
                out.append(Violation("VolMin", res.id, k, v[k] - res.v_min))
            elif v[k] > res.v_max + vtol:
                out.append(Violation("VolMax", res.id, k, v[k] - res.v_max))
        t = res.terminal
        end = v[n]
        if end < t.v_lo - vtol:
            out.append(Violation("Terminal", res.id, n, end - t.v_lo))
        elif end > t.v_hi + vtol:
            out.append(Violation("Terminal", res.id, n, end - t.v_hi))

        spill = schedule.spill_of(res.id, n)
        cap = res.spill.cap if res.spill.allowed else 0.0
        stol = tol * (max(1.0, cap) if math.isfinite(cap) else 1.0)
        for k in range(n):
            if spill[k] < -stol:
                out.append(Violation("SpillCap", res.id, k + 1, spill[k]))
            elif spill[k] > cap + stol:
                out.append(Violation("SpillCap", res.id, k + 1, spill[k] - cap))

    for rid, chain in model.down.items():
        if not chain:
            continue
        t_min, t_max = model.flow_bounds[rid]
        ftol = tol * max(1.0, t_max)
        lead = schedule.turbine[chain[0]]
        for pid in chain:
            x = schedule.turbine[pid]
            for k in range(n):
                if x[k] < -ftol:
                    out.append(Violation("FlowBound", pid, k + 1, x[k]))
                elif x[k] > t_max + ftol:
                    out.append(Violation("FlowBound", pid, k + 1, x[k] - t_max))
                elif semicontinuous and ftol < x[k] < t_min - ftol:
                    out.append(Violation("FlowBound", pid, k + 1, x[k] - t_min))
                if pid != chain[0] and abs(x[k] - lead[k]) > ftol:
                    # series plants share one release
                    out.append(Violation("FlowBound", pid, k + 1, x[k] - lead[k]))
    return FeasibilityReport(out)


def _ke_table(model, scenario, ke_values, trajectory, mode):
    n = scenario.n_hours
    table = {}
    for plant in model.plants:
        if mode == "polynomial" and plant.ke.kind == "polynomial":
            res = model.reservoir(plant.upstream)
            v = trajectory[plant.upstream]
            lo, hi = res.gauge.volumes[0], res.gauge.volumes[-1]
            heads = [gauge_height(res.gauge, min(max(v[k], lo), hi)) for k in range(n)]
            coeffs = plant.ke.coefficients
            table[plant.id] = np.array(
                [plant.ke.efficiency * sum(g * h**p for p, g in enumerate(coeffs)) for h in heads]
            )
        elif ke_values is not None:
            if plant.id not in ke_values:
                raise MissingKe(f"no Ke value for plant {plant.id}")
            table[plant.id] = np.broadcast_to(np.asarray(ke_values[plant.id], dtype=float), (n,))
        else:
            table[plant.id] = np.full(n, plant.ke.efficiency * plant.ke.constant_value)
    return table


def revenue(
    model, scenario: Scenario, schedule: Schedule, ke_values=None, trajectory: VolumeTrajectory | None = None,
    mode: str = "constant",
) -> float:
    """Objective value of a schedule: energy sold minus spilled-water penalty.

    In ``polynomial`` mode the head of each hour is read from the volume at
    the start of that hour; ``trajectory`` defaults to simulating the
    schedule itself.
    """
    model = validate_model(model)
    if mode == "polynomial" and trajectory is None:
        trajectory = simulate_volumes(model, scenario, schedule)
    ke = _ke_table(model, scenario, ke_values, trajectory, mode)
    prices = scenario.prices
    total = 0.0
    for plant in model.plants:
        total += float(np.sum(ke[plant.id] * prices * schedule.turbine[plant.id]))
    n = scenario.n_hours
    for rid, chain in model.down.items():
        spill = schedule.spill_of(rid, n)
        if not chain or not np.any(spill):
            continue
        penalty = sum(ke[pid] for pid in chain)
        total -= float(np.sum(penalty * prices * spill))
    return total


def minimum_spill(model, scenario: Scenario) -> dict:
    """Spill each reservoir needs when every turbine runs flat out.

    Reservoirs are processed upstream first. A turbine releases as much as
    its cap and the volume floor allow; water is spilled only when the
    volume would otherwise exceed ``v_max`` or, at the end, the terminal
    ceiling. Returns total spill per reservoir in m^3/s summed over hours.
    """
    model = validate_model(model)
    n = scenario.n_hours
    releases = {}
    spills = {}
    for rid in model.order:
        res = model.reservoir(rid)
        arrivals = np.zeros(n)
        for up in model.feeders[rid]:
            arrivals += route_release(releases[up], model.delay[up], n)
        inflow = scenario.inflow(rid)
        t_max = model.flow_bounds[rid][1] if model.down[rid] else 0.0
        v = res.v_start
        x = np.zeros(n)
        spilled = 0.0
        for k in range(n):
            v += SECONDS_PER_HOUR * (inflow[k] + arrivals[k])
            x[k] = min(t_max, max(0.0, (v - res.v_min) / SECONDS_PER_HOUR))
            v -= SECONDS_PER_HOUR * x[k]
            if v > res.v_max:
                spilled += (v - res.v_max) / SECONDS_PER_HOUR
                v = res.v_max
        if v > res.terminal.v_hi:
            spilled += (v - res.terminal.v_hi) / SECONDS_PER_HOUR
        releases[rid] = x
        spills[rid] = spilled
    return spills
