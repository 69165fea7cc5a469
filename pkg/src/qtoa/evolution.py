"""Regulated free evolution of arrival-time eigenfunctions.

The position amplitude at time t is the momentum integral

    psi(q, t) = (2 pi hbar)^-1/2 int dp exp(i p q / hbar - i t p^2 / (2 mu hbar))
                                        * phi(p) * exp(-strength * p^2)

With phi from :func:`qtoa.physics_model.eigenfunction_amplitude` every branch
reduces to the half-line transform

    I(B, A) = int_0^inf p^(1/2) exp(-A p^2 + i B p) dp,   Re A > 0,

with A = strength + i (t - tau) / (2 mu hbar) and B = +-(q - X) / hbar.  On the
real axis this is a chirp with thousands of oscillations for weak damping,
so it is evaluated along a deformed contour: a straight segment from 0 to
the saddle p* = iB / (2A), then the steepest-descent ray from p*.  The
integrand is analytic away from the branch cut of p^(1/2) on the negative
axis, which the contour never crosses, so the value is unchanged.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .physics_model import NATURAL_UNITS, Branch, EigenState, PhysicalConstants
from .quadrature import DEFAULT_CONFIG, QuadConfig, integrate_adaptive, integrate_semi_infinite


@dataclass(frozen=True)
class EvolutionRegulator:
    """Gaussian momentum damping exp(-strength * p^2)."""

    strength: float = 1e-3
    kind: str = "gaussian_cutoff"

    def __post_init__(self):
        if self.kind != "gaussian_cutoff":
            raise ValueError(f"unknown evolution regulator {self.kind!r}")
        if not (self.strength > 0 and math.isfinite(self.strength)):
            raise ValueError("evolution regulator strength must be > 0")


@dataclass(frozen=True)
class GridSpec:
    q_min: float = -30.0
    q_max: float = 30.0
    n_points: int = 1201
    times: Sequence[float] = (1.0, 2.0, 3.0, 4.0, 5.0)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.n_points == 1:
            if self.q_min != self.q_max:
                raise ValueError("a one-point grid needs q_min == q_max")
        elif not self.q_min < self.q_max:
            raise ValueError("q_min must be < q_max")
        if not all(math.isfinite(t) for t in self.times):
            raise ValueError("times must be finite")

    @property
    def q_values(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)

    @property
    def spacing(self) -> float:
        return 0.0 if self.n_points == 1 else (self.q_max - self.q_min) / (self.n_points - 1)


@dataclass(frozen=True)
class DensitySnapshot:
    t: float
    q_values: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    peak_q: float
    density_at_X: float
    variance: float


# Contributions below exp(-_DECAY_CUT) relative to O(1) are dropped.
_DECAY_CUT = 60.0


def half_line_transform(B: float, A: complex, cfg: QuadConfig = DEFAULT_CONFIG) -> complex:
    """I(B, A) = int_0^inf sqrt(p) exp(-A p^2 + i B p) dp for Re A > 0."""
    A = complex(A)
    if not A.real > 0:
        raise ValueError("need Re A > 0")
    alpha = cmath.phase(A)
    absA = abs(A)

    # exponent along p = lam * p*:  -c * lam * (2 - lam),  Re c >= 0
    c = B * B / (4.0 * A)
    total = 0.0j
    if B != 0:
        ps = 1j * B / (2.0 * A)
        # p = ps * u^2 removes the sqrt(p) endpoint singularity
        lam_end = 1.0
        if c.real > _DECAY_CUT:
            lam_end = 1.0 - math.sqrt(1.0 - _DECAY_CUT / c.real)
        u_end = math.sqrt(lam_end)
        # initial panels each carry at most ~pi of phase/decay
        n = max(1, math.ceil(abs(c) * lam_end * (2.0 - lam_end) / math.pi))
        lam_k = 1.0 - np.sqrt(np.clip(1.0 - np.arange(1, n) * (lam_end * (2.0 - lam_end) / n), 0.0, 1.0))
        points = np.sqrt(lam_k)
        pref = 2.0 * ps * cmath.sqrt(ps)

        def seg(u):
            u2 = u * u
            return u2 * np.exp(-c * u2 * (2.0 - u2))

        res = integrate_adaptive(seg, 0.0, u_end, cfg, points=points)
        total += pref * res.value
        if lam_end < 1.0:
            return total
        start = ps
    else:
        start = 0.0j

    # steepest-descent ray p = start + e^{-i alpha/2} w^2
    rot = cmath.exp(-0.5j * alpha)
    phase0 = cmath.exp(-c)

    def ray(w):
        w2 = w * w
        p = start + rot * w2
        return 2.0 * w * np.sqrt(p) * np.exp(-absA * w2 * w2)

    res = integrate_semi_infinite(ray, 0.0, lambda w: math.exp(-absA * w**4) * (1.0 + w) ** 3, cfg,
                                  step=absA**-0.25)
    return total + rot * phase0 * res.value


def _prefactor(c: PhysicalConstants) -> float:
    return 1.0 / (2.0 * math.pi * c.hbar * math.sqrt(c.mu))


def _combine(branch: Branch, fwd: complex, bwd: complex) -> complex:
    if branch is Branch.RIGHT:
        return fwd
    if branch is Branch.LEFT:
        return bwd
    if branch is Branch.EVEN:
        return fwd + bwd
    return fwd - bwd


def _chirp(s: EigenState, t: float, reg: EvolutionRegulator, c: PhysicalConstants) -> complex:
    return complex(reg.strength, (t - s.tau) / (2.0 * c.mu * c.hbar))


def evolve_amplitude(
    s: EigenState,
    t: float,
    q: float,
    reg: EvolutionRegulator = EvolutionRegulator(),
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> complex:
    """Position amplitude of the regulated eigenfunction at time ``t``."""
    A = _chirp(s, t, reg, c)
    B = (q - s.X) / c.hbar
    fwd = half_line_transform(B, A, cfg) if s.branch is not Branch.LEFT else 0.0
    bwd = half_line_transform(-B, A, cfg) if s.branch is not Branch.RIGHT else 0.0
    return _prefactor(c) * _combine(s.branch, fwd, bwd)


def _amplitudes(s: EigenState, t: float, qs: np.ndarray, reg, c, cfg) -> np.ndarray:
    A = _chirp(s, t, reg, c)
    cache: dict[float, complex] = {}

    def transform(B: float) -> complex:
        if B not in cache:
            cache[B] = half_line_transform(B, A, cfg)
        return cache[B]

    out = np.empty(len(qs), dtype=complex)
    for i, q in enumerate(qs):
        B = (float(q) - s.X) / c.hbar
        fwd = transform(B) if s.branch is not Branch.LEFT else 0.0
        bwd = transform(-B) if s.branch is not Branch.RIGHT else 0.0
        out[i] = _combine(s.branch, fwd, bwd)
    return _prefactor(c) * out


def _snapshot(t: float, qs: np.ndarray, density: np.ndarray, X: float) -> DensitySnapshot:
    peak_q = float(qs[int(np.argmax(density))])
    idx = np.flatnonzero(np.isclose(qs, X, rtol=0.0, atol=1e-12 * max(1.0, abs(X))))
    if idx.size:
        at_x = float(density[idx[0]])
    else:
        at_x = float(np.interp(X, qs, density)) if qs[0] <= X <= qs[-1] else math.nan
    weight = density.sum()
    if weight > 0:
        mean = float((qs * density).sum() / weight)
        variance = float(((qs - mean) ** 2 * density).sum() / weight)
    else:
        variance = 0.0
    return DensitySnapshot(float(t), qs, density, peak_q, at_x, variance)


def density_snapshot(
    s: EigenState,
    t: float,
    grid: GridSpec,
    reg: EvolutionRegulator = EvolutionRegulator(),
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> DensitySnapshot:
    """|psi(q, t)|^2 on the grid plus peak position, value at X and variance.

    Densities are not normalised (the eigenfunctions are not normalisable);
    the variance uses the grid-restricted density as its weight.
    """
    qs = grid.q_values
    density = np.abs(_amplitudes(s, t, qs, reg, c, cfg)) ** 2
    return _snapshot(t, qs, density, s.X)


def collapse_trajectory(
    s: EigenState,
    grid: GridSpec,
    reg: EvolutionRegulator = EvolutionRegulator(),
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> list[DensitySnapshot]:
    if not grid.times:
        raise ValueError("grid.times is empty")
    return [density_snapshot(s, t, grid, reg, c, cfg) for t in grid.times]
