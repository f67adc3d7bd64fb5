import math

import numpy as np
import pytest

from conftest import case
from hydrocascade.errors import (
    BoundViolation,
    CycleDetected,
    DanglingReference,
    LengthMismatch,
    MissingGauge,
    OutOfRange,
    ValidationError,
)
from hydrocascade.model import (
    CascadeModel,
    GaugeCurve,
    KeModel,
    Plant,
    Reservoir,
    Scenario,
    SpillPolicy,
    TerminalTarget,
    gauge_height,
    gauge_volume,
    validate_model,
)


def res(rid, **kw):
    args = dict(v_min=0.0, v_max=10.0, v_start=5.0, terminal=TerminalTarget.exact(5.0))
    args.update(kw)
    return Reservoir(rid, **args)


def test_gauge_height_examples(linear_gauge):
    assert gauge_height(linear_gauge, 0.0) == 0.0
    assert gauge_height(linear_gauge, 5e5) == 5.0
    with pytest.raises(OutOfRange):
        gauge_height(linear_gauge, 2e6)


def test_gauge_volume_examples(linear_gauge):
    assert gauge_volume(linear_gauge, 10.0) == 1e6
    assert gauge_volume(linear_gauge, 2.5) == 2.5e5
    with pytest.raises(OutOfRange):
        gauge_volume(linear_gauge, -0.1)


def test_gauge_roundtrip_random():
    model, _ = case(1)
    curve = model.reservoir("Ambiesta").gauge
    rng = np.random.default_rng(7)
    for v in rng.uniform(curve.volumes[0], curve.volumes[-1], 100):
        assert gauge_volume(curve, gauge_height(curve, v)) == pytest.approx(v, rel=1e-9)


def test_gauge_strictly_increasing():
    model, _ = case(1)
    curve = model.reservoir("Lumiei").gauge
    v = np.linspace(curve.volumes[0], curve.volumes[-1], 500)
    h = [gauge_height(curve, x) for x in v]
    assert np.all(np.diff(h) > 0)


def test_gauge_rejects_non_monotone():
    with pytest.raises(ValidationError):
        GaugeCurve(((0, 0), (1, 5), (2, 4)))


def test_case_study_topology():
    model, _ = case(1)
    assert dict(model.down) == {"Lumiei": ("Ampezzo",), "Ambiesta": ("Somplago",)}
    assert model.flow_bounds["Lumiei"] == (0.0, 15.0)
    assert model.flow_bounds["Ambiesta"] == (0.0, 75.0)
    assert model.delay["Lumiei"] == 2.0
    assert model.order == ("Lumiei", "Ambiesta")
    lumiei = model.reservoir("Lumiei")
    assert (lumiei.v_min, lumiei.v_max) == (1.0677e6, 63.4364e6)


def test_degenerate_reservoir_is_valid():
    r = res("R", v_min=3.0, v_max=3.0, v_start=3.0, terminal=TerminalTarget.exact(3.0))
    validate_model(CascadeModel((r,), ()))


def test_self_loop_is_a_cycle():
    with pytest.raises(CycleDetected):
        validate_model(CascadeModel((res("R"),), (Plant("P", "R", "R", 1.0),)))


def test_two_reservoir_cycle():
    plants = (Plant("P", "A", "B", 1.0), Plant("Q", "B", "A", 1.0))
    with pytest.raises(CycleDetected):
        validate_model(CascadeModel((res("A"), res("B")), plants))


def test_bound_violations():
    with pytest.raises(BoundViolation):
        validate_model(CascadeModel((res("R", v_min=11.0),), ()))
    with pytest.raises(BoundViolation):
        validate_model(CascadeModel((res("R"),), (Plant("P", "R", "SINK", 1.0, t_min=2.0),)))
    with pytest.raises(BoundViolation):
        validate_model(CascadeModel((res("R", terminal=TerminalTarget.exact(11.0)),), ()))
    with pytest.raises(BoundViolation):
        TerminalTarget.window(2.0, 1.0)
    with pytest.raises(BoundViolation):
        SpillPolicy(True, 0.0)


def test_dangling_references():
    with pytest.raises(DanglingReference):
        validate_model(CascadeModel((res("R"),), (Plant("P", "X", "SINK", 1.0),)))
    with pytest.raises(DanglingReference):
        validate_model(CascadeModel((res("R"),), (Plant("P", "R", "Nowhere", 1.0),)))


def test_polynomial_ke_needs_gauge():
    plant = Plant("P", "R", "SINK", 1.0, ke=KeModel("polynomial", coefficients=(1.0, 0.1)))
    with pytest.raises(MissingGauge):
        validate_model(CascadeModel((res("R"),), (plant,)))


def test_validate_is_idempotent():
    model, _ = case(3)
    again = validate_model(model)
    assert again.model == model.model
    assert dict(again.down) == dict(model.down)
    assert dict(again.flow_bounds) == dict(model.flow_bounds)
    assert again.order == model.order


def test_down_sets_partition_plants():
    model, _ = case(1)
    listed = [pid for chain in model.down.values() for pid in chain]
    assert sorted(listed) == sorted(model.plant_ids)


def test_series_plants_share_bounds():
    plants = (Plant("P1", "R", "SINK", 8.0, 1.0), Plant("P2", "R", "SINK", 5.0, 2.0))
    model = validate_model(CascadeModel((res("R"),), plants))
    assert model.down["R"] == ("P1", "P2")
    assert model.flow_bounds["R"] == (2.0, 5.0)


def test_series_plants_must_agree_on_outlet():
    plants = (Plant("P1", "R", "SINK", 8.0), Plant("P2", "R", "S", 5.0))
    with pytest.raises(ValidationError):
        validate_model(CascadeModel((res("R"), res("S")), plants))


def test_sink_name_is_reserved():
    with pytest.raises(ValidationError):
        validate_model(CascadeModel((res("SINK"),), ()))


def test_scenario_checks():
    with pytest.raises(LengthMismatch):
        Scenario(3, [1.0, 2.0], {})
    with pytest.raises(ValidationError):
        Scenario(1, [math.nan], {})
    sc = Scenario(2, [1.0, 2.0], {"R": [-1.0, 0.5]})
    assert sc.inflow("R")[0] == -1.0
    assert np.all(sc.inflow("other") == 0)
    with pytest.raises(ValueError):
        sc.prices[0] = 5.0
