# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bounded-variable simplex inner loop.

Mirrors ``_pivot.py`` operation for operation; see that module for the
tableau layout. Compile without -ffast-math or FMA contraction, otherwise
the two kernels stop agreeing bit for bit.
"""
from libc.math cimport fabs, INFINITY, isfinite

cdef int OPTIMAL = 0
cdef int UNBOUNDED = 1
cdef int ITERATION_LIMIT = 2

cdef double DEGENERATE_STEP = 1e-12
cdef double RATIO_TIE = 1e-12


cdef void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1], i, k
    cdef double piv = T[r, j], f
    for k in range(cols):
        T[r, k] = T[r, k] / piv
    for i in range(rows):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for k in range(cols):
                T[i, k] = T[i, k] - f * T[r, k]
        T[i, j] = 0.0
    T[r, j] = 1.0


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t j):
    _pivot(T, r, j)


def iterate(double[:, ::1] T, double[::1] xb, long[::1] basis, long[::1] pos,
            signed char[::1] at_upper, double[::1] lo, double[::1] hi,
            long max_iter, long bland_after, double pivot_tol, double opt_tol,
            long degenerate):
    cdef Py_ssize_t m = T.shape[0] - 1, n = T.shape[1]
    cdef Py_ssize_t i, j, r, k, leaving
    cdef long iters = 0
    cdef double d, score, best, direction, a, rate, lim, t_row, t_flip, t, step, start, tie
    cdef bint bland, hit_upper
    cdef int status = OPTIMAL
    with nogil:
        while True:
            if iters >= max_iter:
                status = ITERATION_LIMIT
                break
            bland = degenerate >= bland_after
            j = -1
            best = 0.0
            direction = 0.0
            for k in range(n):
                if pos[k] >= 0 or not (hi[k] - lo[k] > 0.0):
                    continue
                d = T[m, k]
                if at_upper[k] == 0 and d > opt_tol:
                    score = d
                elif at_upper[k] == 1 and d < -opt_tol:
                    score = -d
                else:
                    continue
                if bland:
                    j = k
                    direction = 1.0 if at_upper[k] == 0 else -1.0
                    break
                if score > best:
                    best = score
                    j = k
                    direction = 1.0 if at_upper[k] == 0 else -1.0
            if j < 0:
                status = OPTIMAL
                break

            t_row = INFINITY
            for i in range(m):
                a = T[i, j]
                if not fabs(a) > pivot_tol:
                    continue
                rate = -direction * a
                if rate < 0.0:
                    lim = (xb[i] - lo[basis[i]]) / (direction * a)
                elif rate > 0.0 and isfinite(hi[basis[i]]):
                    lim = (hi[basis[i]] - xb[i]) / rate
                else:
                    continue
                if lim < 0.0:
                    lim = 0.0
                if lim < t_row:
                    t_row = lim
            t_flip = hi[j] - lo[j]

            r = -1
            hit_upper = False
            if t_row < t_flip:
                tie = t_row + RATIO_TIE * (1.0 + t_row)
                for i in range(m):
                    a = T[i, j]
                    if not fabs(a) > pivot_tol:
                        continue
                    rate = -direction * a
                    if rate < 0.0:
                        lim = (xb[i] - lo[basis[i]]) / (direction * a)
                    elif rate > 0.0 and isfinite(hi[basis[i]]):
                        lim = (hi[basis[i]] - xb[i]) / rate
                    else:
                        continue
                    if lim < 0.0:
                        lim = 0.0
                    if lim <= tie and (r < 0 or basis[i] < basis[r]):
                        r = i
                        hit_upper = rate > 0.0
                t = t_row
            elif isfinite(t_flip):
                t = t_flip
            else:
                status = UNBOUNDED
                break

            step = direction * t
            for i in range(m):
                xb[i] = xb[i] - step * T[i, j]
            if r < 0:
                at_upper[j] = 1 - at_upper[j]
            else:
                leaving = basis[r]
                start = hi[j] if at_upper[j] else lo[j]
                at_upper[leaving] = 1 if hit_upper else 0
                pos[leaving] = -1
                basis[r] = j
                pos[j] = r
                at_upper[j] = 0
                xb[r] = start + direction * t
                _pivot(T, r, j)
            if t <= DEGENERATE_STEP:
                degenerate += 1
            iters += 1
    return status, iters, degenerate
