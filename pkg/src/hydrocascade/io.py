"""Model files, scenario and schedule CSVs, and result emission.

Model file format (SI units, ``#`` starts a comment)::

    [reservoir Lumiei]
    v_min = 1.0677e6
    v_max = 63.4364e6
    v_start = 25e6
    terminal = exact 25e6          # or: at_least V | window LO HI
    spill = allowed 200            # or: none | allowed inf
    gauge = 0:1.0e6, 10:3.5e6      # height:volume pairs

    [plant Ampezzo]
    upstream = Lumiei
    downstream = Ambiesta          # or SINK
    t_max = 15
    t_min = 0
    t_c = 2
    ke = polynomial                # or constant
    ke_constant = 1
    ke_coefficients = 0.863370687, 4.170e-3, -5.229e-5   # ascending powers
    efficiency = 1
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ColumnMismatch, HorizonZero, ParseError, ValidationError
from .model import (
    CascadeModel,
    GaugeCurve,
    KeModel,
    Plant,
    Reservoir,
    Scenario,
    Schedule,
    SpillPolicy,
    TerminalTarget,
    validate_model,
)

FLOW_DECIMALS = 4

RESERVOIR_KEYS = {"v_min", "v_max", "v_start", "terminal", "spill", "gauge"}
PLANT_KEYS = {"upstream", "downstream", "t_max", "t_min", "t_c", "ke", "ke_constant", "ke_coefficients", "efficiency"}


def _number(text, path, line, key):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{key}: expected a number, got {text!r}", path, line) from None


def _parse_sections(text, path):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {line!r}", path, lineno)
            parts = line[1:-1].split()
            if len(parts) != 2 or parts[0] not in ("reservoir", "plant"):
                raise ParseError(f"expected [reservoir <id>] or [plant <id>], got {line!r}", path, lineno)
            current = {"kind": parts[0], "id": parts[1], "line": lineno, "fields": {}}
            sections.append(current)
            continue
        if current is None:
            raise ParseError("key outside of any section", path, lineno)
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key = key.strip()
        if key in current["fields"]:
            raise ParseError(f"duplicate key {key!r}", path, lineno)
        current["fields"][key] = (value.strip(), lineno)
    if not sections:
        raise ParseError("no sections found", path)
    return sections


def _reject_unknown(sec, allowed, path):
    unknown = [k for k in sec["fields"] if k not in allowed]
    if unknown:
        line = sec["fields"][unknown[0]][1]
        raise ParseError(f"{sec['kind']} {sec['id']}: unknown keys {unknown}", path, line)


def _reservoir(sec, path):
    f = sec["fields"]
    _reject_unknown(sec, RESERVOIR_KEYS, path)

    def need(key):
        if key not in f:
            raise ParseError(f"reservoir {sec['id']}: missing {key!r}", path, sec["line"])
        return f[key]

    vals = {}
    for key in ("v_min", "v_max", "v_start"):
        text, line = need(key)
        vals[key] = _number(text, path, line, key)
    text, line = need("terminal")
    parts = text.split() or [""]
    try:
        if parts[0] == "exact" and len(parts) == 2:
            terminal = TerminalTarget.exact(_number(parts[1], path, line, "terminal"))
        elif parts[0] == "at_least" and len(parts) == 2:
            terminal = TerminalTarget.at_least(_number(parts[1], path, line, "terminal"))
        elif parts[0] == "window" and len(parts) == 3:
            terminal = TerminalTarget.window(
                _number(parts[1], path, line, "terminal"), _number(parts[2], path, line, "terminal")
            )
        else:
            raise ParseError(f"terminal: expected 'exact V', 'at_least V' or 'window LO HI', got {text!r}", path, line)
    except ValidationError as exc:
        raise ParseError(f"reservoir {sec['id']}: {exc}", path, line) from None

    spill = SpillPolicy()
    if "spill" in f:
        text, line = f["spill"]
        parts = text.split()
        if parts == ["none"]:
            spill = SpillPolicy(False)
        elif parts and parts[0] == "allowed" and len(parts) <= 2:
            cap = _number(parts[1], path, line, "spill") if len(parts) == 2 else math.inf
            try:
                spill = SpillPolicy(True, cap)
            except ValidationError as exc:
                raise ParseError(f"reservoir {sec['id']}: {exc}", path, line) from None
        else:
            raise ParseError(f"spill: expected 'none' or 'allowed [CAP]', got {text!r}", path, line)

    gauge = None
    if "gauge" in f:
        text, line = f["gauge"]
        points = []
        for item in text.split(","):
            h, sep, v = item.partition(":")
            if not sep:
                raise ParseError(f"gauge: expected height:volume pairs, got {item.strip()!r}", path, line)
            points.append((_number(h, path, line, "gauge"), _number(v, path, line, "gauge")))
        try:
            gauge = GaugeCurve(tuple(points))
        except ValidationError as exc:
            raise ParseError(f"reservoir {sec['id']}: {exc}", path, line) from None
    return Reservoir(sec["id"], vals["v_min"], vals["v_max"], vals["v_start"], terminal, spill, gauge)


def _plant(sec, path):
    f = sec["fields"]
    _reject_unknown(sec, PLANT_KEYS, path)
    for key in ("upstream", "downstream", "t_max"):
        if key not in f:
            raise ParseError(f"plant {sec['id']}: missing {key!r}", path, sec["line"])

    def num(key, default):
        if key not in f:
            return default
        return _number(f[key][0], path, f[key][1], key)

    coeffs = ()
    if "ke_coefficients" in f:
        text, line = f["ke_coefficients"]
        coeffs = tuple(_number(c, path, line, "ke_coefficients") for c in text.split(","))
    kind = f["ke"][0] if "ke" in f else ("polynomial" if coeffs else "constant")
    try:
        ke = KeModel(kind, num("ke_constant", 1.0), coeffs, num("efficiency", 1.0))
    except ValidationError as exc:
        raise ParseError(f"plant {sec['id']}: {exc}", path, f.get("ke", (None, sec["line"]))[1]) from None
    return Plant(
        sec["id"],
        f["upstream"][0],
        f["downstream"][0],
        t_max=num("t_max", None),
        t_min=num("t_min", 0.0),
        t_c=num("t_c", 0.0),
        ke=ke,
    )


def parse_model(text: str, path="<string>") -> CascadeModel:
    sections = _parse_sections(text, path)
    reservoirs = [_reservoir(s, path) for s in sections if s["kind"] == "reservoir"]
    plants = [_plant(s, path) for s in sections if s["kind"] == "plant"]
    return CascadeModel(tuple(reservoirs), tuple(plants))


def load_model(path):
    """Parse and validate a model file. Returns a ``ValidatedModel``."""
    path = Path(path)
    model = parse_model(path.read_text(), path)
    try:
        return validate_model(model)
    except ValidationError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _data_rows(path):
    """CSV rows of ``path`` with ``#`` comment lines removed, header first."""
    with open(path, newline="") as fh:
        lines = [(i, ln) for i, ln in enumerate(fh, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty file", path)
    rows = list(csv.reader([ln for _, ln in lines]))
    return [i for i, _ in lines], [[c.strip() for c in r] for r in rows]


def _hours(linenos, rows, path):
    for expected, (lineno, row) in enumerate(zip(linenos, rows), start=1):
        try:
            hour = int(row[0])
        except ValueError:
            raise ParseError(f"hour must be an integer, got {row[0]!r}", path, lineno) from None
        if hour != expected:
            raise ParseError(f"hours must run 1, 2, 3, ... without gaps; expected {expected}, got {hour}", path, lineno)


def load_scenario(path, model) -> Scenario:
    """Read ``hour,price,inflow_<reservoir>...``; one row per hour."""
    model = validate_model(model)
    linenos, rows = _data_rows(path)
    header, body = rows[0], rows[1:]
    if header[:2] != ["hour", "price"]:
        raise ParseError(f"header must start with 'hour,price', got {','.join(header[:2])!r}", path, linenos[0])
    inflow_cols = header[2:]
    if any(not c.startswith("inflow_") for c in inflow_cols):
        raise ParseError("columns after 'price' must be named inflow_<reservoir>", path, linenos[0])
    named = [c[len("inflow_"):] for c in inflow_cols]
    if sorted(named) != sorted(model.reservoir_ids):
        raise ColumnMismatch(
            f"inflow columns {named} do not match model reservoirs {list(model.reservoir_ids)}", path, linenos[0]
        )
    if not body:
        raise HorizonZero(f"{path}: scenario has no hourly rows")
    _hours(linenos[1:], body, path)
    values = []
    for lineno, row in zip(linenos[1:], body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
        values.append([_number(c, path, lineno, header[j + 1]) for j, c in enumerate(row[1:])])
    data = np.array(values)
    inflows = {rid: data[:, 1 + j] for j, rid in enumerate(named)}
    return Scenario(len(body), data[:, 0], inflows)


def _fmt(x, decimals=FLOW_DECIMALS):
    return f"{x:.{decimals}f}"


def write_scenario(path, scenario: Scenario, model, decimals: int = FLOW_DECIMALS):
    model = validate_model(model)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "price"] + [f"inflow_{rid}" for rid in model.reservoir_ids])
        for k in range(scenario.n_hours):
            w.writerow(
                [k + 1, _fmt(scenario.prices[k], decimals)]
                + [_fmt(scenario.inflow(rid)[k], decimals) for rid in model.reservoir_ids]
            )


def schedule_columns(model) -> list:
    model = validate_model(model)
    return [f"turbine_{pid}" for pid in model.plant_ids] + [f"spill_{rid}" for rid in model.spilling]


def write_schedule(path, schedule: Schedule, scenario: Scenario, model):
    """``hour,price,turbine_<plant>...,spill_<reservoir>...`` at 4 decimals."""
    model = validate_model(model)
    n = scenario.n_hours
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "price"] + schedule_columns(model))
        for k in range(n):
            w.writerow(
                [k + 1, _fmt(scenario.prices[k])]
                + [_fmt(schedule.turbine[pid][k]) for pid in model.plant_ids]
                + [_fmt(schedule.spill_of(rid, n)[k]) for rid in model.spilling]
            )


def load_schedule(path, model, n_hours: int | None = None) -> Schedule:
    """Read a schedule CSV. Missing spill columns mean no spill."""
    model = validate_model(model)
    linenos, rows = _data_rows(path)
    header, body = rows[0], rows[1:]
    if not header or header[0] != "hour":
        raise ParseError("first column must be 'hour'", path, linenos[0])
    missing = [f"turbine_{pid}" for pid in model.plant_ids if f"turbine_{pid}" not in header]
    if missing:
        raise ColumnMismatch(f"missing columns {missing}", path, linenos[0])
    if n_hours is not None and len(body) != n_hours:
        raise ParseError(f"schedule has {len(body)} rows, scenario has {n_hours}", path)
    _hours(linenos[1:], body, path)
    cols = {name: [] for name in header}
    for lineno, row in zip(linenos[1:], body):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
        for name, cell in zip(header, row):
            cols[name].append(_number(cell, path, lineno, name))
    turbine = {pid: np.array(cols[f"turbine_{pid}"]) for pid in model.plant_ids}
    spill = {rid: np.array(cols[f"spill_{rid}"]) for rid in model.reservoir_ids if f"spill_{rid}" in cols}
    return Schedule(turbine=turbine, spill=spill)


def write_volumes(dest, trajectory, model):
    """``hour,volume_<reservoir>...`` from hour 0; ``dest`` is a path or an open text stream."""
    model = validate_model(model)
    if hasattr(dest, "write"):
        _volume_rows(dest, trajectory, model)
        return
    with open(dest, "w", newline="") as fh:
        _volume_rows(fh, trajectory, model)


def _volume_rows(fh, trajectory, model):
    ids = model.reservoir_ids
    n = len(trajectory[ids[0]]) - 1
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["hour"] + [f"volume_{rid}" for rid in ids])
    for k in range(n + 1):
        w.writerow([k] + [f"{trajectory[rid][k]:.3f}" for rid in ids])


def summary_dict(schedule, trajectory, report, objective, model, scenario, status="Optimal", trace=None) -> dict:
    model = validate_model(model)
    n = scenario.n_hours
    return {
        "objective": objective,
        "status": status,
        "feasible": report.feasible,
        "violations": [
            {"kind": v.kind, "entity": v.entity, "hour": v.hour, "magnitude": v.magnitude} for v in report.violations
        ],
        "totals": {
            "turbine": {pid: float(np.sum(schedule.turbine[pid])) for pid in model.plant_ids},
            "spill": {rid: float(np.sum(schedule.spill_of(rid, n))) for rid in model.spilling},
        },
        "final_volume": {rid: trajectory.final(rid) for rid in model.reservoir_ids},
        "slp": {
            "iterations": trace.iterations if trace else 0,
            "final_step": trace.final_step if trace else None,
            "converged": trace.converged if trace else None,
            "objectives": list(trace.objectives) if trace else [],
            "steps": list(trace.steps) if trace else [],
        },
    }


def emit_results(out_dir, schedule, trajectory, report, objective, model, scenario, status="Optimal", trace=None):
    """Write ``schedule.csv``, ``volumes.csv``, ``summary.json`` and ``plot_data.csv``."""
    model = validate_model(model)
    n = scenario.n_hours
    if n == 0:
        raise HorizonZero("nothing to emit for an empty horizon")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_schedule(out / "schedule.csv", schedule, scenario, model)
    write_volumes(out / "volumes.csv", trajectory, model)
    summary = summary_dict(schedule, trajectory, report, objective, model, scenario, status, trace)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    with open(out / "plot_data.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "series", "entity", "value"])
        for k in range(n):
            w.writerow([k + 1, "price", "", _fmt(scenario.prices[k])])
            for pid in model.plant_ids:
                w.writerow([k + 1, "turbine", pid, _fmt(schedule.turbine[pid][k])])
            for rid in model.spilling:
                w.writerow([k + 1, "spill", rid, _fmt(schedule.spill_of(rid, n)[k])])
        for k in range(n + 1):
            for rid in model.reservoir_ids:
                w.writerow([k, "volume", rid, f"{trajectory[rid][k]:.3f}"])
    return [out / name for name in ("schedule.csv", "volumes.csv", "summary.json", "plot_data.csv")]
