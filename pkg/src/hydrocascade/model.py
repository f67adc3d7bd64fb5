"""Reservoirs, plants, gauge curves and the cascade graph that links them.

All types are frozen dataclasses. Series are stored as read-only numpy
arrays so a validated model or scenario can be shared between threads.

Flow quantities are in m^3/s and volumes in m^3. One time step is one hour,
so a flow ``q`` held for a step moves ``3600 * q`` cubic metres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BoundViolation,
    CycleDetected,
    DanglingReference,
    HorizonZero,
    LengthMismatch,
    MissingGauge,
    OutOfRange,
    ValidationError,
)

SINK = "SINK"
SECONDS_PER_HOUR = 3600.0

TERMINAL_MODES = ("exact", "at_least", "window")
KE_KINDS = ("constant", "polynomial")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TerminalTarget:
    """Required volume at the end of the horizon.

    ``at_least`` keeps ``v_hi`` at infinity; the reservoir's own ``v_max``
    still applies through the hourly volume bounds.
    """

    mode: str
    v_lo: float
    v_hi: float

    def __post_init__(self):
        if self.mode not in TERMINAL_MODES:
            raise ValidationError(f"unknown terminal mode {self.mode!r}")
        if self.v_lo > self.v_hi:
            raise BoundViolation(f"terminal window [{self.v_lo}, {self.v_hi}] is empty")
        if self.mode == "exact" and self.v_lo != self.v_hi:
            raise BoundViolation("exact terminal target needs v_lo == v_hi")

    @classmethod
    def exact(cls, v: float) -> "TerminalTarget":
        return cls("exact", float(v), float(v))

    @classmethod
    def at_least(cls, v: float) -> "TerminalTarget":
        return cls("at_least", float(v), math.inf)

    @classmethod
    def window(cls, lo: float, hi: float) -> "TerminalTarget":
        return cls("window", float(lo), float(hi))


@dataclass(frozen=True)
class SpillPolicy:
    allowed: bool = False
    cap: float = math.inf

    def __post_init__(self):
        if self.allowed and not self.cap > 0:
            raise BoundViolation(f"spill cap must be positive when spilling is allowed, got {self.cap}")


@dataclass(frozen=True)
class GaugeCurve:
    """Piecewise-linear height/volume table of a reservoir.

    ``points`` are ``(height, volume)`` pairs, strictly increasing in both
    coordinates so the curve can be read in either direction.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple((float(h), float(v)) for h, v in self.points)
        if len(pts) < 2:
            raise ValidationError("a gauge curve needs at least two points")
        hs = np.array([p[0] for p in pts])
        vs = np.array([p[1] for p in pts])
        if not (np.all(np.diff(hs) > 0) and np.all(np.diff(vs) > 0)):
            raise ValidationError("gauge curve must be strictly increasing in height and volume")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_h", _frozen(hs))
        object.__setattr__(self, "_v", _frozen(vs))

    @property
    def heights(self) -> np.ndarray:
        return self._h

    @property
    def volumes(self) -> np.ndarray:
        return self._v

    def height(self, v: float) -> float:
        return gauge_height(self, v)

    def volume(self, h: float) -> float:
        return gauge_volume(self, h)


def gauge_height(curve: GaugeCurve, v: float) -> float:
    """Height for stored volume ``v`` (inverse gauge direction)."""
    vs, hs = curve.volumes, curve.heights
    if not vs[0] <= v <= vs[-1]:
        raise OutOfRange(f"volume {v} outside gauge span [{vs[0]}, {vs[-1]}]")
    return float(np.interp(v, vs, hs))


def gauge_volume(curve: GaugeCurve, h: float) -> float:
    """Stored volume at height ``h``."""
    vs, hs = curve.volumes, curve.heights
    if not hs[0] <= h <= hs[-1]:
        raise OutOfRange(f"height {h} outside gauge span [{hs[0]}, {hs[-1]}]")
    return float(np.interp(h, hs, vs))


@dataclass(frozen=True)
class KeModel:
    """Energetic coefficient of a plant, in kWh per (m^3/s).

    ``coefficients`` are in ascending powers of head. ``constant_value`` is
    used whenever the optimizer runs with a constant coefficient, so a plant
    may carry both.
    """

    kind: str = "constant"
    constant_value: float = 1.0
    coefficients: tuple = ()
    efficiency: float = 1.0

    def __post_init__(self):
        if self.kind not in KE_KINDS:
            raise ValidationError(f"unknown Ke kind {self.kind!r}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind == "polynomial" and not self.coefficients:
            raise ValidationError("polynomial Ke needs at least one coefficient")


@dataclass(frozen=True)
class Reservoir:
    id: str
    v_min: float
    v_max: float
    v_start: float
    terminal: TerminalTarget
    spill: SpillPolicy = SpillPolicy()
    gauge: GaugeCurve | None = None


@dataclass(frozen=True)
class Plant:
    id: str
    upstream: str
    downstream: str
    t_max: float
    t_min: float = 0.0
    t_c: float = 0.0
    ke: KeModel = KeModel()


@dataclass(frozen=True)
class CascadeModel:
    reservoirs: tuple
    plants: tuple

    def __post_init__(self):
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        object.__setattr__(self, "plants", tuple(self.plants))


@dataclass(frozen=True)
class ValidatedModel:
    """A cascade whose invariants hold, plus derived topology.

    ``down[r]`` lists the plants drawing on reservoir ``r``; they are aligned
    in series and all pass the reservoir's single release. ``flow_bounds[r]``
    is the release range they jointly admit (largest minimum, smallest
    maximum). ``feeders[r]`` names the reservoirs whose release arrives in
    ``r``.
    """

    model: CascadeModel
    down: Mapping[str, tuple]
    flow_bounds: Mapping[str, tuple]
    outlet: Mapping[str, str]
    delay: Mapping[str, float]
    feeders: Mapping[str, tuple]
    order: tuple

    @property
    def reservoirs(self) -> tuple:
        return self.model.reservoirs

    @property
    def plants(self) -> tuple:
        return self.model.plants

    def reservoir(self, rid: str) -> Reservoir:
        return self._res_index[rid]

    def plant(self, pid: str) -> Plant:
        return self._plant_index[pid]

    @property
    def reservoir_ids(self) -> tuple:
        return tuple(r.id for r in self.model.reservoirs)

    @property
    def plant_ids(self) -> tuple:
        return tuple(p.id for p in self.model.plants)

    @property
    def releasing(self) -> tuple:
        """Reservoirs with at least one plant, in declaration order."""
        return tuple(r.id for r in self.model.reservoirs if self.down[r.id])

    @property
    def spilling(self) -> tuple:
        return tuple(r.id for r in self.model.reservoirs if r.spill.allowed)

    def __post_init__(self):
        object.__setattr__(self, "_res_index", {r.id: r for r in self.model.reservoirs})
        object.__setattr__(self, "_plant_index", {p.id: p for p in self.model.plants})


def validate_model(model) -> ValidatedModel:
    """Check every structural invariant and derive the cascade topology.

    Passing an already validated model re-validates its underlying cascade
    and returns an equal object.
    """
    if isinstance(model, ValidatedModel):
        model = model.model

    res_ids = [r.id for r in model.reservoirs]
    if len(set(res_ids)) != len(res_ids):
        raise ValidationError("duplicate reservoir id")
    plant_ids = [p.id for p in model.plants]
    if len(set(plant_ids)) != len(plant_ids):
        raise ValidationError("duplicate plant id")
    if SINK in res_ids:
        raise ValidationError(f"{SINK!r} is reserved for the terminal node")

    for r in model.reservoirs:
        if not 0 <= r.v_min <= r.v_max:
            raise BoundViolation(f"reservoir {r.id}: need 0 <= v_min <= v_max, got [{r.v_min}, {r.v_max}]")
        if not r.v_min <= r.v_start <= r.v_max:
            raise BoundViolation(f"reservoir {r.id}: v_start {r.v_start} outside [{r.v_min}, {r.v_max}]")
        t = r.terminal
        if t.v_lo < r.v_min or t.v_lo > r.v_max or (math.isfinite(t.v_hi) and t.v_hi > r.v_max):
            raise BoundViolation(f"reservoir {r.id}: terminal target outside [{r.v_min}, {r.v_max}]")

    known = set(res_ids)
    for p in model.plants:
        if p.upstream not in known:
            raise DanglingReference(f"plant {p.id}: unknown upstream reservoir {p.upstream!r}")
        if p.downstream != SINK and p.downstream not in known:
            raise DanglingReference(f"plant {p.id}: unknown downstream node {p.downstream!r}")
        if not 0 <= p.t_min <= p.t_max:
            raise BoundViolation(f"plant {p.id}: need 0 <= t_min <= t_max, got [{p.t_min}, {p.t_max}]")
        if not p.t_c >= 0:
            raise BoundViolation(f"plant {p.id}: negative concentration time {p.t_c}")
        if p.ke.kind == "polynomial":
            res = next(r for r in model.reservoirs if r.id == p.upstream)
            if res.gauge is None:
                raise MissingGauge(f"plant {p.id}: polynomial Ke needs a gauge curve on {p.upstream}")

    down = {rid: tuple(p.id for p in model.plants if p.upstream == rid) for rid in res_ids}
    by_id = {p.id: p for p in model.plants}
    flow_bounds, outlet, delay = {}, {}, {}
    for rid, chain in down.items():
        if not chain:
            continue
        plants = [by_id[pid] for pid in chain]
        # series plants pass one flow, so they must end at the same node with the same lag
        if len({p.downstream for p in plants}) != 1 or len({p.t_c for p in plants}) != 1:
            raise ValidationError(f"plants below {rid} disagree on downstream node or t_c")
        flow_bounds[rid] = (max(p.t_min for p in plants), min(p.t_max for p in plants))
        if flow_bounds[rid][0] > flow_bounds[rid][1]:
            raise BoundViolation(f"plants below {rid} admit no common flow range")
        outlet[rid] = plants[0].downstream
        delay[rid] = plants[0].t_c

    graph = {rid: set() for rid in res_ids}
    for rid, dst in outlet.items():
        if dst == rid:
            raise CycleDetected(f"reservoir {rid} discharges into itself")
        if dst != SINK:
            graph[dst].add(rid)
    try:
        order = tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CycleDetected(f"cascade contains a cycle: {exc.args[1]}") from None

    feeders = {rid: tuple(u for u in res_ids if outlet.get(u) == rid) for rid in res_ids}
    return ValidatedModel(
        model=model,
        down=MappingProxyType(down),
        flow_bounds=MappingProxyType(flow_bounds),
        outlet=MappingProxyType(outlet),
        delay=MappingProxyType(delay),
        feeders=MappingProxyType(feeders),
        order=order,
    )


@dataclass(frozen=True, eq=False)
class Scenario:
    """Hourly price and inflow forecast over ``n_hours`` steps.

    Inflows may be negative (evaporation, seepage).
    """

    n_hours: int
    prices: np.ndarray
    inflows: Mapping[str, np.ndarray]
    step: float = 1.0

    def __post_init__(self):
        if self.n_hours < 0:
            raise HorizonZero(f"negative horizon {self.n_hours}")
        if self.step != 1.0:
            raise ValidationError("only hourly steps are supported")
        prices = _frozen(self.prices)
        if prices.shape != (self.n_hours,):
            raise LengthMismatch(f"{prices.size} prices for a {self.n_hours}-hour horizon")
        if not np.all(np.isfinite(prices)):
            raise ValidationError("prices must be finite")
        inflows = {}
        for rid, series in self.inflows.items():
            arr = _frozen(series)
            if arr.shape != (self.n_hours,):
                raise LengthMismatch(f"inflow series for {rid} has {arr.size} values, expected {self.n_hours}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"inflow series for {rid} contains non-finite values")
            inflows[rid] = arr
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "inflows", MappingProxyType(inflows))

    def inflow(self, rid: str) -> np.ndarray:
        try:
            return self.inflows[rid]
        except KeyError:
            return np.zeros(self.n_hours)


@dataclass(frozen=True, eq=False)
class Schedule:
    """Turbine flow per plant and spill per reservoir, one value per hour."""

    turbine: Mapping[str, np.ndarray]
    spill: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "turbine", MappingProxyType({k: _frozen(v) for k, v in self.turbine.items()}))
        object.__setattr__(self, "spill", MappingProxyType({k: _frozen(v) for k, v in self.spill.items()}))

    @property
    def n_hours(self) -> int:
        for series in list(self.turbine.values()) + list(self.spill.values()):
            return series.size
        return 0

    def spill_of(self, rid: str, n_hours: int) -> np.ndarray:
        try:
            return self.spill[rid]
        except KeyError:
            return np.zeros(n_hours)

    @classmethod
    def zeros(cls, model: ValidatedModel, n_hours: int) -> "Schedule":
        return cls(
            turbine={pid: np.zeros(n_hours) for pid in model.plant_ids},
            spill={rid: np.zeros(n_hours) for rid in model.spilling},
        )


def release_of(model: ValidatedModel, schedule: Schedule, rid: str, n_hours: int) -> np.ndarray:
    """Turbined release of reservoir ``rid``: the flow of the first plant below it."""
    chain = model.down[rid]
    if not chain:
        return np.zeros(n_hours)
    return schedule.turbine[chain[0]]


def as_series(values: Sequence[float] | float, n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise LengthMismatch(f"expected {n} values, got {arr.size}")
    return arr
