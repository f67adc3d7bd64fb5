import dataclasses

import numpy as np
import pytest

from conftest import case, scenario_of, single_reservoir
from hydrocascade.errors import HorizonZero, InfeasibleSchedule, InternalError, MissingKe, NotOptimal
from hydrocascade.lp import LpSolution, Status, solve_lp
from hydrocascade.model import (
    CascadeModel,
    GaugeCurve,
    KeModel,
    Scenario,
    SpillPolicy,
    TerminalTarget,
    gauge_height,
    validate_model,
)
from hydrocascade.schedule import (
    ProblemOptions,
    VariableMap,
    build_lp,
    default_ke_values,
    eval_ke,
    extract_schedule,
    optimize_constant_ke,
    optimize_polynomial_ke,
    screen_feasibility,
)
from hydrocascade.simulate import check_feasibility, revenue, simulate_volumes
from oracles import grid_search_two_hours

KE_A = KeModel("polynomial", 1.0, (0.863370687, 4.170e-3, -5.229e-5, 4.288e-7, -1.227e-9))
KE_S = KeModel("polynomial", 1.0, (0.60914, 3.230e-2, -1.032e-2, 2.206e-3, -1.937e-4))


def with_spill_everywhere(model):
    reservoirs = tuple(dataclasses.replace(r, spill=SpillPolicy(True, 200.0)) for r in model.reservoirs)
    return validate_model(CascadeModel(reservoirs, model.plants))


def test_variable_and_row_counts():
    model, scenario = case(1)
    model = with_spill_everywhere(model)
    lp, vmap = build_lp(model, scenario, ProblemOptions(), default_ke_values(model))
    assert lp.n_vars == 96
    assert len(vmap.release) == 48 and len(vmap.spill) == 48
    volume_rows = [r for r in lp.rows if r.name.startswith(("vmin", "vmax"))]
    terminal_rows = [r for r in lp.rows if r.name.startswith("terminal")]
    assert len(volume_rows) == 4 * 24
    assert len(terminal_rows) == 2
    assert sorted(vmap.release.values()) + sorted(vmap.spill.values()) == list(range(96))


def test_smallest_instance():
    model = single_reservoir(terminal=TerminalTarget.exact(5e5))
    lp, _ = build_lp(model, scenario_of([10.0]), ProblemOptions(), {"P": 1.0})
    assert lp.n_vars == 1
    assert len(lp.rows) == 3


def test_routing_lag_in_rows():
    model, scenario = case(2)
    lp, vmap = build_lp(model, scenario, ProblemOptions(), default_ke_values(model))
    upstream = set(vmap.release[("Lumiei", k)] for k in range(24))
    for row in lp.rows:
        if row.name.startswith("vmin[Ambiesta,"):
            hour = int(row.name.split(",")[1].rstrip("]"))
            linked = upstream & set(row.coeffs)
            assert bool(linked) == (hour >= 3)
            if linked:
                assert max(j - vmap.release[("Lumiei", 0)] for j in linked) == hour - 3


def test_window_terminal_rows():
    model = single_reservoir(terminal=TerminalTarget.window(1e5, 2e5))
    lp, _ = build_lp(model, scenario_of([1.0, 2.0]), ProblemOptions(), {"P": 1.0})
    assert [r.sense for r in lp.rows if r.name.startswith("terminal")] == [">=", "<="]


def test_build_errors():
    model = single_reservoir()
    with pytest.raises(HorizonZero):
        build_lp(model, Scenario(0, [], {}), ProblemOptions(), {"P": 1.0})
    with pytest.raises(MissingKe):
        build_lp(model, scenario_of([1.0]), ProblemOptions(), {})
    with pytest.raises(MissingKe):
        build_lp(model, scenario_of([1.0, 2.0]), ProblemOptions(), {"P": [1.0, 2.0, 3.0]})


def test_eval_ke():
    assert eval_ke(KE_A, 0.0) == 0.863370687
    assert eval_ke(KE_S, 0.0) == 0.60914
    direct = -1.227e-9 + 4.288e-7 - 5.229e-5 + 4.170e-3 + 0.863370687
    assert eval_ke(KE_A, 1.0) == pytest.approx(direct, rel=1e-15)
    assert eval_ke(KeModel("constant", 2.5, efficiency=0.8), 123.0) == 2.0
    assert eval_ke(dataclasses.replace(KE_A, efficiency=0.9), 0.0) == pytest.approx(0.9 * 0.863370687)


def _vmap_one():
    vmap = VariableMap(n_hours=2, down={"R": ("P",)})
    vmap.release[("R", 0)] = 0
    vmap.release[("R", 1)] = 1
    return vmap


def test_extract_schedule():
    vmap = _vmap_one()
    sched = extract_schedule(LpSolution(Status.OPTIMAL, np.zeros(2), 0.0), vmap)
    assert np.all(sched.turbine["P"] == 0)
    sched = extract_schedule(LpSolution(Status.OPTIMAL, np.array([-3e-9, 1.25]), 0.0), vmap)
    np.testing.assert_array_equal(sched.turbine["P"], [0.0, 1.25])
    with pytest.raises(InternalError):
        extract_schedule(LpSolution(Status.OPTIMAL, np.array([-1e-3, 1.0]), 0.0), vmap)
    with pytest.raises(NotOptimal):
        extract_schedule(LpSolution(Status.INFEASIBLE, np.full(2, np.nan), np.nan), vmap)


def test_zero_prices_give_zero_schedule():
    model, scenario = case(2)
    flat = Scenario(24, np.zeros(24), {})
    model = validate_model(
        CascadeModel(
            tuple(dataclasses.replace(r, terminal=TerminalTarget.exact(r.v_start)) for r in model.reservoirs),
            model.plants,
        )
    )
    sched, obj = optimize_constant_ke(model, flat)
    assert obj == 0.0
    assert all(not np.any(x) for x in sched.turbine.values())


def test_outputs_pass_the_simulator(bundled):
    _, model, scenario = bundled
    sched, obj = optimize_constant_ke(model, scenario)
    assert check_feasibility(model, scenario, sched, tol=1e-6).feasible
    assert revenue(model, scenario, sched) == pytest.approx(obj, rel=1e-9)


def test_simulator_matches_lp_rows(bundled):
    _, model, scenario = bundled
    lp, vmap = build_lp(model, scenario, ProblemOptions(), default_ke_values(model))
    sol = solve_lp(lp)
    sched = extract_schedule(sol, vmap)
    traj = simulate_volumes(model, scenario, sched)
    acts = lp.activities(sol.values)
    for row, act in zip(lp.rows, acts):
        if not row.name.startswith("vmin["):
            continue
        rid, hour = row.name[5:-1].split(",")
        res = model.reservoir(rid)
        base = res.v_start + 3600.0 * np.sum(scenario.inflow(rid)[: int(hour)])
        assert base + act == pytest.approx(traj[rid][int(hour)], rel=1e-6)


@pytest.mark.parametrize("lam", [0.5, 3.0, 1000.0])
def test_price_scaling(bundled, lam):
    _, model, scenario = bundled
    _, base = optimize_constant_ke(model, scenario)
    scaled = Scenario(scenario.n_hours, scenario.prices * lam, dict(scenario.inflows))
    sched, obj = optimize_constant_ke(model, scaled)
    assert obj == pytest.approx(lam * base, rel=1e-9)
    assert check_feasibility(model, scaled, sched).feasible


def test_price_monotonicity():
    model, scenario = case(1)
    _, base = optimize_constant_ke(model, scenario)
    for k in (0, 8, 13, 18, 23):
        prices = scenario.prices.copy()
        prices[k] += 5.0
        _, obj = optimize_constant_ke(model, Scenario(24, prices, dict(scenario.inflows)))
        assert obj >= base - 1e-9 * abs(base)


def test_spill_minimality():
    model, scenario = case(3)
    sched, obj = optimize_constant_ke(model, scenario)
    assert all(not np.any(y) for y in sched.spill.values())
    no_spill = validate_model(
        CascadeModel(tuple(dataclasses.replace(r, spill=SpillPolicy()) for r in model.reservoirs), model.plants)
    )
    _, obj2 = optimize_constant_ke(no_spill, scenario)
    assert obj2 == pytest.approx(obj, rel=1e-9)


def test_forced_spill_is_penalized():
    # the full lake must shed 8 hours of 1 m3/s; spilling is cheapest in the low-price hour
    model = single_reservoir(v_max=1e5, v_start=1e5, t_max=1.0, spill=SpillPolicy(True, 100.0),
                             terminal=TerminalTarget.at_least(0.0))
    scenario = scenario_of([10.0, 20.0], R=[5.0, 5.0])
    sched, obj = optimize_constant_ke(model, scenario)
    np.testing.assert_allclose(sched.turbine["P"], [1.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(sched.spill["R"], [8.0, 0.0], atol=1e-9)
    assert obj == pytest.approx(10 + 20 - 80)


def test_infeasible_terminal_is_diagnosed():
    model = single_reservoir(v_start=5e5, terminal=TerminalTarget.exact(1e6), t_max=1.0)
    with pytest.raises(InfeasibleSchedule) as info:
        optimize_constant_ke(model, scenario_of([1.0, 1.0]))
    assert info.value.diagnosis and "unreachable" in info.value.diagnosis[0]
    assert screen_feasibility(model, scenario_of([1.0, 1.0]))


def test_infeasible_hourly_bounds():
    # the target is reachable overall but the first hour overflows v_max
    model = single_reservoir(v_max=5e5 + 3600.0, v_start=5e5, t_max=1.0, terminal=TerminalTarget.exact(5e5))
    with pytest.raises(InfeasibleSchedule):
        optimize_constant_ke(model, scenario_of([1.0, 1.0], R=[3.0, -3.0]))


def test_semicontinuous_mode_respects_t_min():
    model = single_reservoir(v_start=5e5, t_max=10.0, t_min=4.0, terminal=TerminalTarget.exact(5e5 - 3600.0 * 6))
    scenario = scenario_of([5.0, 9.0, 7.0])
    lp_sched, lp_obj = optimize_constant_ke(model, scenario)
    sc_sched, sc_obj = optimize_constant_ke(model, scenario, options=ProblemOptions(semicontinuous=True))
    x = sc_sched.turbine["P"]
    assert np.all((x == 0) | (x >= 4.0 - 1e-9))
    assert np.sum(x) == pytest.approx(6.0)
    assert sc_obj <= lp_obj + 1e-9
    assert check_feasibility(model, scenario, sc_sched, semicontinuous=True).feasible


def flat_gauge_model(n):
    model, scenario = case(n)
    reservoirs = []
    for r in model.reservoirs:
        pts = ((0.0, r.v_min * 0.5), (1e-9, r.v_max * 1.5))
        reservoirs.append(dataclasses.replace(r, gauge=GaugeCurve(pts)))
    return validate_model(CascadeModel(tuple(reservoirs), model.plants)), scenario


def test_slp_flat_gauge_matches_constant():
    model, scenario = flat_gauge_model(1)
    ke0 = {p.id: eval_ke(p.ke, 0.0) for p in model.plants}
    _, const_obj = optimize_constant_ke(model, scenario, ke0)
    _, obj, trace = optimize_polynomial_ke(model, scenario)
    assert obj == pytest.approx(const_obj, rel=1e-8)
    assert trace.converged and trace.iterations <= 2


def test_slp_against_grid_search():
    unit = 3600.0
    gauge = GaugeCurve(((0.0, 0.0), (100.0, 100 * unit)))
    ke = KeModel("polynomial", 1.0, (1.0, 0.001))
    model = single_reservoir(
        v_min=0.0, v_max=100 * unit, v_start=50 * unit, terminal=TerminalTarget.at_least(43 * unit),
        t_max=5.0, ke=ke, gauge=gauge,
    )
    prices = np.array([10.0, 11.0])
    scenario = scenario_of(prices)
    sched, obj, trace = optimize_polynomial_ke(model, scenario)
    assert trace.converged

    def value(x1, x2):
        h1 = 50.0
        h2 = 50.0 - x1
        return prices[0] * (1 + 0.001 * h1) * x1 + prices[1] * (1 + 0.001 * h2) * x2

    def feasible(x1, x2):
        return x1 + x2 <= 7.0 + 1e-9

    g1, g2, best = grid_search_two_hours(value, feasible, 5.0)
    x = sched.turbine["P"]
    assert abs(x[0] - g1) <= 0.05 and abs(x[1] - g2) <= 0.05
    assert obj == pytest.approx(best, rel=1e-3)


def test_slp_uses_start_of_hour_head():
    unit = 3600.0
    gauge = GaugeCurve(((0.0, 0.0), (100.0, 100 * unit)))
    ke = KeModel("polynomial", 1.0, (0.0, 1.0))
    model = single_reservoir(v_min=0.0, v_max=100 * unit, v_start=50 * unit, t_max=5.0, ke=ke, gauge=gauge,
                             terminal=TerminalTarget.at_least(0.0))
    scenario = scenario_of([1.0, 1.0])
    sched, obj, _ = optimize_polynomial_ke(model, scenario)
    np.testing.assert_allclose(sched.turbine["P"], [5.0, 5.0])
    assert obj == pytest.approx(50 * 5 + 45 * 5)
    traj = simulate_volumes(model, scenario, sched)
    assert gauge_height(gauge, traj["R"][1]) == pytest.approx(45.0)


def test_slp_trace_on_bundled_case(bundled):
    _, model, scenario = bundled
    sched, obj, trace = optimize_polynomial_ke(model, scenario)
    assert all(np.isfinite(trace.objectives))
    assert trace.steps[-1] <= trace.steps[-2]
    assert check_feasibility(model, scenario, sched).feasible
    assert np.isfinite(obj)


def test_slp_non_convergence_is_flagged():
    model, scenario = case(3)
    _, _, trace = optimize_polynomial_ke(model, scenario, ProblemOptions(ke_mode="polynomial", slp_max_iters=1))
    assert trace.iterations == 1 and not trace.converged
