"""Depth-first branch and bound over binary variables."""
from __future__ import annotations

import numpy as np

from ..errors import BadBounds, NodeLimitExceeded
from .program import DEFAULT_TOLERANCES, LinearProgram, LpSolution, Status, Tolerances
from .simplex import solve_lp


def semicontinuous_reformulate(lp: LinearProgram, var: int, l: float, u: float):
    """Restrict ``var`` to ``{0} U [l, u]`` through a new binary switch.

    Returns a new program and the index of the binary. The original is left
    untouched.
    """
    if not 0 < l <= u:
        raise BadBounds(f"semicontinuous range needs 0 < l <= u, got l={l}, u={u}")
    out = lp.copy()
    out.lo[var] = 0.0
    out.hi[var] = float(u)
    name = out.names[var] or f"z{var}"
    y = out.add_var(0.0, 1.0, 0.0, name=f"on[{name}]")
    out.add_row({var: 1.0, y: -float(u)}, "<=", 0.0, name=f"upper[{name}]")
    out.add_row({var: 1.0, y: -float(l)}, ">=", 0.0, name=f"lower[{name}]")
    return out, y


def solve_milp(
    lp: LinearProgram,
    binaries,
    tol: Tolerances = DEFAULT_TOLERANCES,
    node_limit: int = 10**6,
    kernel=None,
) -> LpSolution:
    """Maximize ``lp`` with every index in ``binaries`` restricted to {0, 1}.

    Children are explored nearest-rounding first; a node is pruned when its
    relaxation cannot beat the incumbent.
    """
    binaries = sorted(set(binaries))
    for j in binaries:
        if lp.lo[j] < 0 or lp.hi[j] > 1:
            raise BadBounds(f"binary variable {j} has bounds [{lp.lo[j]}, {lp.hi[j]}] outside [0, 1]")
    if not binaries:
        return solve_lp(lp, tol, kernel)

    base_lo, base_hi = list(lp.lo), list(lp.hi)
    work = lp.copy()
    best = None
    nodes = 0
    iterations = 0
    stack = [{}]
    while stack:
        fixed = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(f"branch and bound exceeded {node_limit} nodes")
        work.lo = list(base_lo)
        work.hi = list(base_hi)
        for j, v in fixed.items():
            work.lo[j] = work.hi[j] = float(v)
        sol = solve_lp(work, tol, kernel)
        iterations += sol.iterations
        if sol.status is Status.UNBOUNDED:
            if best is None and not fixed:
                return LpSolution(Status.UNBOUNDED, sol.values, sol.objective_value, iterations, nodes)
            continue
        if sol.status is not Status.OPTIMAL:
            continue
        if best is not None and sol.objective_value <= best.objective_value + 1e-9 * max(1.0, abs(best.objective_value)):
            continue
        frac = [j for j in binaries if abs(sol.values[j] - round(sol.values[j])) > tol.integrality]
        if not frac:
            values = sol.values.copy()
            values[binaries] = np.round(values[binaries])
            best = LpSolution(Status.OPTIMAL, values, float(np.dot(lp.objective, values)), iterations, nodes)
            continue
        j = frac[0]
        first = 1 if sol.values[j] >= 0.5 else 0
        stack.append({**fixed, j: 1 - first})
        stack.append({**fixed, j: first})

    if best is None:
        return LpSolution(Status.INFEASIBLE, np.full(lp.n_vars, np.nan), float("nan"), iterations, nodes)
    best.iterations, best.nodes = iterations, nodes
    return best
