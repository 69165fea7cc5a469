"""Physical constants, Gaussian initial states and time-of-arrival eigenfunctions.

Everything here is a pure function of its arguments and accepts numpy arrays
for the position/momentum argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    """Mass and reduced Planck constant; natural units by default."""

    mu: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")


NATURAL_UNITS = PhysicalConstants()


@dataclass(frozen=True)
class GaussianPacket:
    """Gaussian wave packet centred at ``q0`` with position spread ``sigma0``
    (variance ``sigma0**2``) and carrier wave number ``k0``."""

    q0: float
    sigma0: float
    k0: float

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        for name in ("q0", "sigma0", "k0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def p0(self, c: PhysicalConstants = NATURAL_UNITS) -> float:
        return c.hbar * self.k0

    def momentum_spread(self, c: PhysicalConstants = NATURAL_UNITS) -> float:
        """Standard deviation of the momentum density |psi(p)|^2."""
        return c.hbar / (2.0 * self.sigma0)


class Branch(str, Enum):
    RIGHT = "right"
    LEFT = "left"
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class EigenState:
    """Eigenfunction of the arrival-time operator with eigenvalue ``tau`` for
    arrival at ``X``; ``branch`` selects the right/left or even/odd basis."""

    branch: Branch
    tau: float
    X: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))


def classical_toa(c: PhysicalConstants, X: float, q0: float, p0: float) -> float:
    """Classical arrival time mu (X - q0) / p0 (negative when moving away)."""
    if p0 == 0:
        raise ValueError("undefined classical arrival (zero momentum)")
    return c.mu * (X - q0) / p0


def packet_position_amplitude(pk: GaussianPacket, q):
    q = np.asarray(q, dtype=float)
    norm = (math.sqrt(2.0 * math.pi) * pk.sigma0) ** -0.5
    envelope = np.exp(-((q - pk.q0) ** 2) / (4.0 * pk.sigma0**2))
    return norm * envelope * np.exp(1j * pk.k0 * q)


def packet_momentum_amplitude(pk: GaussianPacket, p, c: PhysicalConstants = NATURAL_UNITS):
    """Momentum-space amplitude of the Gaussian packet.

    The Gaussian exponent carries a 1/hbar**2 so the amplitude stays
    normalised and Fourier-conjugate to :func:`packet_position_amplitude`
    for any hbar; in natural units this is the textbook expression.
    """
    p = np.asarray(p, dtype=float)
    s2 = pk.sigma0**2
    dp = p - pk.p0(c)
    norm = (2.0 * s2 / (math.pi * c.hbar**2)) ** 0.25
    return norm * np.exp(-(dp**2) * s2 / c.hbar**2 - 1j * dp * pk.q0 / c.hbar)


def packet_momentum_density(pk: GaussianPacket, p, c: PhysicalConstants = NATURAL_UNITS):
    """|psi(p)|^2, computed directly rather than by squaring the amplitude."""
    p = np.asarray(p, dtype=float)
    s2 = pk.sigma0**2
    norm = math.sqrt(2.0 * s2 / math.pi) / c.hbar
    return norm * np.exp(-2.0 * (p - pk.p0(c)) ** 2 * s2 / c.hbar**2)


def eigenfunction_amplitude(s: EigenState, p, c: PhysicalConstants = NATURAL_UNITS):
    """Momentum amplitude <p|tau> of an arrival-time eigenfunction.

    Theta(0) and sgn(0) are taken as 0, which is harmless since the
    |p|**(1/2) prefactor already vanishes there.
    """
    p = np.asarray(p, dtype=float)
    base = (
        np.sqrt(np.abs(p) / c.mu)
        / math.sqrt(2.0 * math.pi * c.hbar)
        * np.exp(-1j * s.X * p / c.hbar + 1j * s.tau * p**2 / (2.0 * c.mu * c.hbar))
    )
    if s.branch is Branch.RIGHT:
        return base * np.heaviside(p, 0.0)
    if s.branch is Branch.LEFT:
        return base * np.heaviside(-p, 0.0)
    if s.branch is Branch.ODD:
        return base * np.sign(p)
    return base * np.where(p == 0, 0.0, 1.0)
