"""Numpy implementation of the bounded-variable simplex inner loop.

This is the fallback used when the compiled ``_pivot_ext`` module is not
available. Both implementations perform the same floating point operations
in the same order, so they return bit-identical tableaux.

Tableau layout: ``T`` has ``m + 1`` rows; rows ``0..m-1`` hold ``B^-1 A`` and
row ``m`` holds the reduced costs ``c_j - c_B B^-1 A_j`` of a maximization.
Nonbasic variables sit at ``lo`` unless ``at_upper`` is set.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

DEGENERATE_STEP = 1e-12
RATIO_TIE = 1e-12


def pivot(T, r, j):
    T[r, :] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r, :])
    T[:, j] = 0.0
    T[r, j] = 1.0


def iterate(T, xb, basis, pos, at_upper, lo, hi, max_iter, bland_after, pivot_tol, opt_tol, degenerate):
    """Run simplex iterations in place until optimal, unbounded or out of budget.

    Returns ``(status, iterations, degenerate_pivots)``.
    """
    m = T.shape[0] - 1
    movable = (hi - lo) > 0.0
    iters = 0
    while True:
        if iters >= max_iter:
            return ITERATION_LIMIT, iters, degenerate
        d = T[m, :]
        nonbasic = (pos < 0) & movable
        up = nonbasic & (at_upper == 0) & (d > opt_tol)
        down = nonbasic & (at_upper == 1) & (d < -opt_tol)
        score = np.where(up, d, np.where(down, -d, 0.0))
        eligible = up | down
        if not eligible.any():
            return OPTIMAL, iters, degenerate
        if degenerate >= bland_after:
            j = int(np.argmax(eligible))
        else:
            j = int(np.argmax(score))
        direction = 1.0 if up[j] else -1.0

        col = T[:m, j]
        rate = -direction * col
        ok = np.abs(col) > pivot_tol
        hb = hi[basis]
        lb = lo[basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            lim_dec = (xb - lb) / (direction * col)
            lim_inc = (hb - xb) / rate
        dec = ok & (rate < 0.0)
        inc = ok & (rate > 0.0) & np.isfinite(hb)
        limits = np.full(m, np.inf)
        limits[dec] = lim_dec[dec]
        limits[inc] = lim_inc[inc]
        limits = np.maximum(limits, 0.0)
        t_row = limits.min() if m else np.inf
        t_flip = hi[j] - lo[j]

        if t_row < t_flip:
            ties = np.flatnonzero(limits <= t_row + RATIO_TIE * (1.0 + t_row))
            r = int(ties[np.argmin(basis[ties])])
            t = t_row
        elif np.isfinite(t_flip):
            r = -1
            t = t_flip
        else:
            return UNBOUNDED, iters, degenerate

        xb -= (direction * t) * col
        if r < 0:
            at_upper[j] = 1 - at_upper[j]
        else:
            leaving = basis[r]
            start = hi[j] if at_upper[j] else lo[j]
            at_upper[leaving] = 1 if inc[r] else 0
            pos[leaving] = -1
            basis[r] = j
            pos[j] = r
            at_upper[j] = 0
            xb[r] = start + direction * t
            pivot(T, r, j)
        if t <= DEGENERATE_STEP:
            degenerate += 1
        iters += 1
