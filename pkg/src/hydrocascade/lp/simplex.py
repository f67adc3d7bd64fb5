"""Two-phase bounded-variable primal simplex on a dense tableau.

Pricing is Dantzig's largest reduced cost with ties going to the lowest
index; after ``Tolerances.bland_after`` degenerate pivots the loop switches
to Bland's rule. Rows are scaled by their largest coefficient before
solving, and feasibility is judged on those scaled rows.
"""
from __future__ import annotations

import numpy as np

from ..errors import SolverStall
from . import kernels
from .program import DEFAULT_TOLERANCES, LinearProgram, LpSolution, Status, Tolerances


def _infeasible(n):
    return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), float("nan"))


def solve_lp(lp: LinearProgram, tol: Tolerances = DEFAULT_TOLERANCES, kernel=None) -> LpSolution:
    """Solve ``lp`` to a vertex optimum. Deterministic for a given input."""
    kern = kernels.get(kernel)
    n = lp.n_vars
    c = np.array(lp.objective, dtype=float)
    lo = np.array(lp.lo, dtype=float)
    hi = np.array(lp.hi, dtype=float)
    if np.any(lo > hi):
        return _infeasible(n)

    A, senses, b = lp.dense()
    keep = []
    for i in range(A.shape[0]):
        scale = np.max(np.abs(A[i])) if n else 0.0
        if scale == 0.0:
            # empty row: 0 (rel) b either holds or the program is infeasible
            s, rhs = senses[i], b[i]
            if (s == "<=" and rhs < -tol.feasibility) or (s == ">=" and rhs > tol.feasibility) or (
                s == "=" and abs(rhs) > tol.feasibility
            ):
                return _infeasible(n)
            continue
        A[i] /= scale
        b[i] /= scale
        keep.append(i)
    A, b = A[keep], b[keep]
    senses = [senses[i] for i in keep]
    m = len(keep)

    # nonbasic structurals start at a finite bound
    at_upper_struct = np.isinf(lo).astype(np.int8)
    z_n = np.where(at_upper_struct == 1, hi, lo)
    resid = b - A @ z_n

    n_slack = sum(1 for s in senses if s != "=")
    slack_cols = []
    row_sign = np.ones(m)
    basis = np.empty(m, dtype=np.int64)
    k = n
    for i, s in enumerate(senses):
        if s == "=":
            slack_cols.append(-1)
            continue
        slack_cols.append(k)
        k += 1
    n_art_max = m
    N = n + n_slack + n_art_max
    T = np.zeros((m + 1, N))
    xb = np.zeros(m)
    k_art = n + n_slack
    for i, s in enumerate(senses):
        sc = slack_cols[i]
        coef = 1.0 if s == "<=" else -1.0
        if sc >= 0 and resid[i] * coef >= 0.0:
            row_sign[i] = coef
            basis[i] = sc
            xb[i] = resid[i] * coef
        else:
            row_sign[i] = -1.0 if resid[i] < 0.0 else 1.0
            basis[i] = k_art
            T[i, k_art] = 1.0
            xb[i] = abs(resid[i])
            k_art += 1
        T[i, :n] = row_sign[i] * A[i]
        if sc >= 0:
            T[i, sc] = row_sign[i] * coef
    N = k_art
    T = np.ascontiguousarray(T[:, :N])

    big_lo = np.concatenate([lo, np.zeros(N - n)])
    big_hi = np.concatenate([hi, np.full(n_slack, np.inf), np.full(N - n - n_slack, np.inf)])
    at_upper = np.concatenate([at_upper_struct, np.zeros(N - n, dtype=np.int8)]).astype(np.int8)
    pos = np.full(N, -1, dtype=np.int64)
    pos[basis] = np.arange(m)
    art = np.arange(n + n_slack, N)

    max_iter = 50 * (m + N) + 1000
    iterations = 0
    degenerate = 0

    if art.size:
        cost1 = np.zeros(N)
        cost1[art] = -1.0
        T[m, :] = cost1 - cost1[basis] @ T[:m, :]
        status, it, degenerate = kern.iterate(
            T, xb, basis, pos, at_upper, big_lo, big_hi,
            max_iter, tol.bland_after, tol.pivot, tol.optimality, degenerate,
        )
        iterations += it
        if status != kernels.OPTIMAL:
            raise SolverStall(f"phase 1 stopped with kernel status {status} after {iterations} iterations")
        art_level = sum(xb[pos[a]] for a in art if pos[a] >= 0)
        if art_level > tol.feasibility:
            return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), float("nan"), iterations)
        # drive basic artificials out wherever a real column can replace them
        for a in art:
            r = pos[a]
            if r < 0:
                continue
            cols = np.flatnonzero(np.abs(T[r, : n + n_slack]) > tol.pivot)
            cols = [j for j in cols if pos[j] < 0]
            if not cols:
                continue
            j = cols[0]
            value = big_hi[j] if at_upper[j] else big_lo[j]
            kern.pivot(T, r, j)
            pos[a] = -1
            at_upper[a] = 0
            basis[r] = j
            pos[j] = r
            at_upper[j] = 0
            xb[r] = value
        big_hi[art] = 0.0

    cost2 = np.concatenate([c, np.zeros(N - n)])
    T[m, :] = cost2 - cost2[basis] @ T[:m, :]
    status, it, degenerate = kern.iterate(
        T, xb, basis, pos, at_upper, big_lo, big_hi,
        max_iter, tol.bland_after, tol.pivot, tol.optimality, degenerate,
    )
    iterations += it
    if status == kernels.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, np.full(n, np.nan), float("inf"), iterations)
    if status != kernels.OPTIMAL:
        raise SolverStall(f"phase 2 hit the iteration limit ({iterations} iterations, {degenerate} degenerate)")

    z = _refactor(A, b, senses, slack_cols, row_sign, basis, at_upper, big_lo, big_hi, n, N, xb)
    z = np.minimum(np.maximum(z, lo), hi)
    viol = lp.max_violation(z)
    if viol > tol.feasibility:
        raise SolverStall(f"solution violates constraints by {viol:.3e} after {iterations} iterations")
    return LpSolution(Status.OPTIMAL, z, float(c @ z), iterations)


def _refactor(A, b, senses, slack_cols, row_sign, basis, at_upper, lo, hi, n, N, xb):
    """Recompute basic values from the original rows to shed pivoting drift."""
    m = A.shape[0]
    full = np.zeros((m, N))
    full[:, :n] = A
    art_start = n
    for i, s in enumerate(senses):
        if slack_cols[i] >= 0:
            full[i, slack_cols[i]] = 1.0 if s == "<=" else -1.0
            art_start = max(art_start, slack_cols[i] + 1)
    # an artificial enters its original row with the sign chosen at setup
    for i in range(m):
        if basis[i] >= art_start:
            full[i, basis[i]] = row_sign[i]
    values = np.where(at_upper == 1, hi, lo).astype(float)
    values[art_start:] = 0.0
    values[basis] = 0.0
    if m:
        try:
            values[basis] = np.linalg.solve(full[:, basis], b - full @ values)
        except np.linalg.LinAlgError:
            values[basis] = xb
    return values[:n]
