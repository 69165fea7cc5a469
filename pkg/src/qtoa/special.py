"""Dawson's integral D(y) = exp(-y^2) * int_0^y exp(t^2) dt."""

from __future__ import annotations

import math

# Beyond this the asymptotic series is truncated before its terms stop
# shrinking and its error is ~exp(-y^2) < 1e-15.
_ASYMPTOTIC_FROM = 6.0


def _dawson_power_series(y: float) -> float:
    # int_0^y e^{t^2} dt = sum y^(2n+1) / (n! (2n+1)): all terms positive, so
    # no cancellation; the exp(-y^2) prefactor is applied at the end.
    y2 = y * y
    term = y  # y^(2n+1)/n!
    total = y
    n = 0
    while True:
        n += 1
        term *= y2 / n
        contrib = term / (2 * n + 1)
        total += contrib
        if contrib <= 1e-17 * total:
            break
    return math.exp(-y2) * total


def _dawson_asymptotic(y: float) -> float:
    # D(y) ~ sum_n (2n-1)!! / (2^(n+1) y^(2n+1))
    inv2 = 1.0 / (2.0 * y * y)
    term = 1.0 / (2.0 * y)
    total = term
    n = 0
    while True:
        n += 1
        nxt = term * (2 * n - 1) * inv2
        if nxt >= term or nxt < 1e-17 * total:
            break
        term = nxt
        total += term
    return total


def dawson(y: float) -> float:
    """Dawson's integral, accurate to ~1e-15 relative for real ``y``."""
    y = float(y)
    if math.isnan(y):
        return y
    if math.isinf(y):
        return 0.0
    if y < 0:
        return -dawson(-y)
    if y == 0:
        return 0.0
    if y < _ASYMPTOTIC_FROM:
        return _dawson_power_series(y)
    return _dawson_asymptotic(y)
