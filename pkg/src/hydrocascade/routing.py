"""Transit delay between a plant's release and its arrival downstream.

A concentration time ``t_c`` that is not a whole number of hours splits each
hourly release between the two neighbouring integer lags: the share
``1 - frac(t_c)`` arrives after ``floor(t_c)`` hours and ``frac(t_c)`` after
``ceil(t_c)`` hours.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import LengthMismatch, NegativeDelay


@dataclass(frozen=True)
class ArrivalWeights:
    lag_lo: int
    w_lo: float
    lag_hi: int
    w_hi: float


def arrival_weights(t_c: float) -> ArrivalWeights:
    if not t_c >= 0:
        raise NegativeDelay(f"concentration time must be >= 0, got {t_c}")
    lag_lo = math.floor(t_c)
    lag_hi = math.ceil(t_c)
    # Decimal inputs such as 1.8 should give the correctly rounded 0.2 / 0.8,
    # which plain float subtraction does not.
    frac = Fraction(repr(float(t_c))) - lag_lo
    w_hi = float(frac)
    w_lo = float(1 - frac)
    if w_lo + w_hi != 1.0:
        w_lo = 1.0 - w_hi
    if lag_lo == lag_hi:
        w_lo, w_hi = 1.0, 0.0
    return ArrivalWeights(lag_lo, w_lo, lag_hi, w_hi)


def route_release(release, t_c: float, n_hours: int) -> np.ndarray:
    """Arrival series (length ``n_hours``) for a release series.

    Water released in hour ``k`` arrives in hour ``k + lag``; arrivals that
    would land past the horizon are dropped.
    """
    release = np.asarray(release, dtype=float)
    if release.ndim != 1 or release.size > n_hours:
        raise LengthMismatch(f"release series of length {release.size} does not fit {n_hours} hours")
    if release.size < n_hours:
        # shorter releases are zero-padded: routing onto an extended horizon
        padded = np.zeros(n_hours)
        padded[: release.size] = release
        release = padded
    w = arrival_weights(t_c)
    arrival = np.zeros(n_hours)
    for lag, weight in ((w.lag_lo, w.w_lo), (w.lag_hi, w.w_hi)):
        if weight == 0.0 or lag >= n_hours:
            continue
        arrival[lag:] += weight * release[: n_hours - lag]
    return arrival
