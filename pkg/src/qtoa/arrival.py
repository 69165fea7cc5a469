"""Arrival-time expectation values for a Gaussian packet.

Three independent routes are provided:

* the Gaussian correction factor, by quadrature and in closed form via
  Dawson's integral;
* the position-representation double integral against the kernel
  <q|T|q'>;
* the momentum-representation integral, optionally restricted to one
  half-line and tamed at p = 0 by a regulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .physics_model import (
    NATURAL_UNITS,
    GaussianPacket,
    PhysicalConstants,
    classical_toa,
    packet_momentum_amplitude,
    packet_momentum_density,
    packet_position_amplitude,
)
from .quadrature import (
    DEFAULT_CONFIG,
    QuadConfig,
    QuadResult,
    UnregulatedSingularityError,
    integrate_adaptive,
    integrate_regulated_origin,
    integrate_semi_infinite,
)
from .special import dawson


class CausalDivergenceError(ValueError):
    """The one-sided regulator was asked to integrate over negative momenta."""


class RegulatorKind(str, Enum):
    NONE = "none"
    ONE_SIDED_CAUSAL = "causal"
    SYMMETRIC_RELAXED = "relaxed"


@dataclass(frozen=True)
class Regulator:
    """Multiplicative factor taming the p -> 0 behaviour of momentum integrals.

    ``ONE_SIDED_CAUSAL`` is exp(-eps/p): it kills small positive momenta and
    blows up for p -> 0-.  ``SYMMETRIC_RELAXED`` is exp(-eps/|p|).
    """

    kind: RegulatorKind = RegulatorKind.NONE
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegulatorKind(self.kind))
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.kind is not RegulatorKind.NONE and self.epsilon == 0:
            raise ValueError(f"{self.kind.value} regulator needs epsilon > 0")
        if self.kind is RegulatorKind.NONE and self.epsilon != 0:
            raise ValueError("the 'none' regulator takes no epsilon")

    def weight(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind is RegulatorKind.NONE:
            return np.ones_like(p)
        denom = p if self.kind is RegulatorKind.ONE_SIDED_CAUSAL else np.abs(p)
        with np.errstate(divide="ignore", over="ignore"):
            w = np.exp(-self.epsilon / denom)
        return np.where(p == 0, 0.0, w)

    def log_derivative(self, p):
        """(d weight / dp) / weight, i.e. eps/p^2 (times sgn p when relaxed)."""
        p = np.asarray(p, dtype=float)
        if self.kind is RegulatorKind.NONE:
            return np.zeros_like(p)
        with np.errstate(divide="ignore"):
            slope = self.epsilon / (p * p)
        if self.kind is RegulatorKind.SYMMETRIC_RELAXED:
            slope = slope * np.sign(p)
        return slope

    def derivative(self, p):
        return self.log_derivative(p) * self.weight(p)

    @property
    def label(self) -> str:
        if self.kind is RegulatorKind.NONE:
            return "none"
        return f"{self.kind.value}(eps={self.epsilon:g})"


NO_REGULATOR = Regulator()


class MomentumDomain(str, Enum):
    FULL_LINE = "full"
    POSITIVE_HALF = "positive"
    NEGATIVE_HALF = "negative"


@dataclass(frozen=True)
class ArrivalResult:
    tau_quant: float
    imag_residual: float
    error_estimate: float
    domain: MomentumDomain
    regulator: Regulator
    diverged: bool = False
    converged: bool = True


# ---------------------------------------------------------------------------
# Position representation and the Gaussian correction factor


def toa_kernel(q, q2, X: float, c: PhysicalConstants = NATURAL_UNITS):
    """Position matrix element <q|T|q2> = i mu (2X - q - q2) sgn(q - q2) / (4 hbar)."""
    q = np.asarray(q, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    # q + q2 is commutative in floating point, so Hermiticity holds exactly
    return 1j * c.mu * (2.0 * X - (q + q2)) * np.sign(q - q2) / (4.0 * c.hbar)


def _correction_factor_quad(x: float, cfg: QuadConfig) -> QuadResult:
    if x < 0:
        raise ValueError(f"correction factor needs k0*sigma0 >= 0, got {x}")
    if x == 0:
        return QuadResult(0.0, 0.0, 0, True)
    width = 8.0 * x * x
    return integrate_semi_infinite(
        lambda v: np.sin(v) * np.exp(-v * v / width),
        0.0,
        lambda v: math.exp(-v * v / width),
        cfg,
        # a lobe of sin or, for small x, the envelope width 2x, whichever is narrower
        panel_width=min(math.pi, 2.0 * x),
    )


def correction_factor(x: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Quantum correction factor tau_quant / tau_class for a Gaussian packet,
    ``int_0^inf sin(v) exp(-v^2 / (8 x^2)) dv`` with ``x = k0 * sigma0``."""
    return float(_correction_factor_quad(x, cfg).value)


def correction_factor_closed_form(x: float) -> float:
    """Same integral as :func:`correction_factor`: ``2 sqrt(2) x D(sqrt(2) x)``."""
    if x < 0:
        raise ValueError(f"correction factor needs k0*sigma0 >= 0, got {x}")
    y = math.sqrt(2.0) * x
    return 2.0 * y * dawson(y)


def tau_quant_gaussian(
    pk: GaussianPacket,
    X: float,
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> ArrivalResult:
    """Unrestricted (causality-violating) expectation value tau_class * factor."""
    if pk.k0 == 0:
        raise ValueError("classical time undefined (k0 = 0)")
    t_class = classical_toa(c, X, pk.q0, pk.p0(c))
    cf = _correction_factor_quad(abs(pk.k0) * pk.sigma0, cfg)
    return ArrivalResult(
        tau_quant=t_class * cf.value,
        imag_residual=0.0,
        error_estimate=abs(t_class) * cf.error_estimate,
        domain=MomentumDomain.FULL_LINE,
        regulator=NO_REGULATOR,
        converged=cf.converged,
    )


POSITION_SPAN = 10.0  # integration box is q0 +- POSITION_SPAN * sigma0


def tau_quant_position_quadrature(
    pk: GaussianPacket,
    X: float,
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> ArrivalResult:
    """<psi|T|psi> as an iterated integral over q and q' against the kernel.

    The inner integral is split at q' = q where the kernel's sign function
    jumps.  The kernel is Hermitian, so the imaginary part is pure numerical
    error and is reported as ``imag_residual``.
    """
    lo = pk.q0 - POSITION_SPAN * pk.sigma0
    hi = pk.q0 + POSITION_SPAN * pk.sigma0
    pref = 1j * c.mu / (4.0 * c.hbar)
    inner_err = 0.0
    inner_ok = True

    def inner(q: float) -> complex:
        nonlocal inner_err, inner_ok
        total = 0.0 + 0.0j
        # sgn(q - q') = +1 for q' < q, -1 for q' > q
        for a, b, sgn in ((lo, q, 1.0), (q, hi, -1.0)):
            if b <= a:
                continue
            r = integrate_adaptive(
                lambda qq: (2.0 * X - q - qq) * packet_position_amplitude(pk, qq), a, b, cfg
            )
            total += sgn * r.value
            inner_err = max(inner_err, r.error_estimate)
            inner_ok = inner_ok and r.converged
        return pref * total

    def outer(qs: np.ndarray) -> np.ndarray:
        vals = np.array([inner(float(q)) for q in qs])
        return np.conj(packet_position_amplitude(pk, qs)) * vals

    res = integrate_adaptive(outer, lo, hi, cfg)
    # |psi| integrates to sqrt(2 sqrt(2 pi)) sigma0^(1/2) over the line
    psi_l1 = math.sqrt(2.0 * math.sqrt(2.0 * math.pi) * pk.sigma0)
    err = res.error_estimate + 2.0 * abs(pref) * inner_err * psi_l1
    return ArrivalResult(
        tau_quant=float(res.value.real),
        imag_residual=abs(res.value.imag),
        error_estimate=err,
        domain=MomentumDomain.FULL_LINE,
        regulator=NO_REGULATOR,
        converged=res.converged and inner_ok,
    )


# ---------------------------------------------------------------------------
# Momentum representation


def momentum_integrand(p, pk: GaussianPacket, X: float, c: PhysicalConstants = NATURAL_UNITS):
    """Unregulated integrand of the momentum-space expectation value,

    -i mu hbar |psi(p)|^2 / p^2 * [-2 p (p - p0) sigma0^2 / hbar^2 + i p (X - q0) / hbar - 1].
    """
    p = np.asarray(p, dtype=float)
    if np.any(p == 0):
        raise ValueError("singular point p = 0")
    dens = np.abs(packet_momentum_amplitude(pk, p, c)) ** 2
    p0 = pk.p0(c)
    bracket = (
        -2.0 * p * (p - p0) * pk.sigma0**2 / c.hbar**2
        + 1j * p * (X - pk.q0) / c.hbar
        - 1.0
    )
    return -1j * c.mu * c.hbar * dens / p**2 * bracket


def _regulated_integrand(pk: GaussianPacket, X: float, reg: Regulator, c: PhysicalConstants):
    """Integrand of <R psi | T | R psi> divided by the weight R^2.

    Its real part is Re(momentum_integrand); with the symmetric operator
    ordering the imaginary part of the weighted integrand is a total
    derivative, so it integrates to zero on every domain and serves as a
    quadrature check.
    """
    p0 = pk.p0(c)
    s2h = pk.sigma0**2 / c.hbar**2
    mh = c.mu * c.hbar
    lever = c.mu * (X - pk.q0)

    def k(p):
        p = np.asarray(p, dtype=float)
        g = packet_momentum_density(pk, p, c)
        slope = reg.log_derivative(p)
        real = lever * g / p
        imag = mh * g * (2.0 * (p - p0) * s2h / p + 0.5 / (p * p) - 0.5 * slope / p)
        return real + 1j * imag

    return k


def _envelope(pk: GaussianPacket, X: float, c: PhysicalConstants):
    p0 = abs(pk.p0(c))
    s2h = pk.sigma0**2 / c.hbar**2
    scale = (
        math.sqrt(2.0 * pk.sigma0**2 / math.pi) / c.hbar
        * c.mu * (abs(X - pk.q0) + c.hbar * (1.0 + 2.0 * s2h * (1.0 + p0)))
    )

    def env(p: float) -> float:
        d = max(abs(p) - p0, 0.0)
        return scale * math.exp(-2.0 * d * d * s2h)

    return env


def _origin_is_negligible(pk: GaussianPacket, c: PhysicalConstants, cfg: QuadConfig) -> bool:
    z = pk.p0(c) / pk.momentum_spread(c)
    return math.exp(-0.5 * z * z) <= cfg.tail_cut_tol


def _peak_points(pk: GaussianPacket, c: PhysicalConstants) -> list[float]:
    # breakpoints every spread around |p0| so narrow peaks are never stepped over
    p0, s = abs(pk.p0(c)), pk.momentum_spread(c)
    return [p0 + j * s for j in range(-8, 9) if p0 + j * s > 0]


def _support(pk: GaussianPacket, c: PhysicalConstants, cfg: QuadConfig) -> tuple[float, float]:
    r = math.sqrt(2.0 * math.log(1.0 / cfg.tail_cut_tol))
    s = pk.momentum_spread(c)
    return pk.p0(c) - r * s, pk.p0(c) + r * s


DIVERGENCE_FACTOR = 1e6


def tau_quant_momentum(
    pk: GaussianPacket,
    X: float,
    reg: Regulator,
    dom: MomentumDomain | str,
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
    *,
    divergence_factor: float = DIVERGENCE_FACTOR,
) -> ArrivalResult:
    """Regulated arrival time from the momentum representation.

    ``tau_quant`` is the real part of the regulated integral over ``dom``;
    the full line is folded onto p > 0 so that contributions from +p and -p
    are combined before integration.  ``diverged`` is set when the result
    exceeds ``divergence_factor * |tau_class|`` (or ``divergence_factor``
    when k0 = 0).
    """
    dom = MomentumDomain(dom)
    if reg.kind is RegulatorKind.ONE_SIDED_CAUSAL and dom is not MomentumDomain.POSITIVE_HALF:
        raise CausalDivergenceError("regulator enforces divergence on negative momenta")

    k = _regulated_integrand(pk, X, reg, c)
    env = _envelope(pk, X, c)
    pts = _peak_points(pk, c)

    if reg.kind is RegulatorKind.NONE and not _origin_is_negligible(pk, c, cfg):
        raise UnregulatedSingularityError("unregulated singular integral")

    def integrate(part):
        if reg.kind is RegulatorKind.NONE:
            lo, hi = _support(pk, c, cfg)
            if dom is MomentumDomain.POSITIVE_HALF:
                lo = max(lo, 0.0)
            elif dom is MomentumDomain.NEGATIVE_HALF:
                hi = min(hi, 0.0)
            return integrate_adaptive(part, lo, hi, cfg) if lo < hi else QuadResult(0.0, 0.0, 1, True)
        if dom is MomentumDomain.POSITIVE_HALF:
            return integrate_regulated_origin(part, (0.0, math.inf), reg, cfg, envelope=env, points=pts)
        if dom is MomentumDomain.NEGATIVE_HALF:
            return integrate_regulated_origin(part, (-math.inf, 0.0), reg, cfg, envelope=env, points=pts)
        # symmetric weight: fold -p onto +p before integrating
        return integrate_regulated_origin(lambda p: part(p) + part(-p), (0.0, math.inf), reg, cfg,
                                          envelope=lambda p: 2.0 * env(p), points=pts)

    # separate passes so the error control follows the real part alone; the
    # imaginary part cancels between large terms when eps is tiny
    res = integrate(lambda p: k(p).real)
    imag = integrate(lambda p: k(p).imag)
    value = complex(res.value, imag.value)
    if pk.k0 != 0:
        bound = divergence_factor * abs(classical_toa(c, X, pk.q0, pk.p0(c)))
    else:
        bound = divergence_factor
    return ArrivalResult(
        tau_quant=value.real,
        imag_residual=abs(value.imag),
        error_estimate=res.error_estimate,
        domain=dom,
        regulator=reg,
        diverged=abs(value.real) > bound or not math.isfinite(value.real),
        converged=res.converged,
    )


@dataclass(frozen=True)
class DecompositionReport:
    positive: ArrivalResult
    negative: ArrivalResult
    full: ArrivalResult
    residual: float
    tolerance: float
    holds: bool
    cancels_at_zero: bool | None = field(default=None)


def halfline_decomposition_check(
    pk: GaussianPacket,
    X: float,
    reg: Regulator,
    c: PhysicalConstants = NATURAL_UNITS,
    cfg: QuadConfig = DEFAULT_CONFIG,
    *,
    zero_tol: float = 1e-6,
) -> DecompositionReport:
    """Check positive-half + negative-half = full line for a symmetric regulator.

    ``cancels_at_zero`` is only filled in for k0 = 0, where the two halves
    should cancel to within ``zero_tol``.
    """
    if reg.kind is not RegulatorKind.SYMMETRIC_RELAXED:
        raise ValueError("decomposition check needs the symmetric (relaxed) regulator")
    pos = tau_quant_momentum(pk, X, reg, MomentumDomain.POSITIVE_HALF, c, cfg)
    neg = tau_quant_momentum(pk, X, reg, MomentumDomain.NEGATIVE_HALF, c, cfg)
    full = tau_quant_momentum(pk, X, reg, MomentumDomain.FULL_LINE, c, cfg)
    residual = abs(pos.tau_quant + neg.tau_quant - full.tau_quant)
    scale = abs(pos.tau_quant) + abs(neg.tau_quant) + abs(full.tau_quant)
    tol = pos.error_estimate + neg.error_estimate + full.error_estimate + 64 * np.finfo(float).eps * scale
    cancels = abs(full.tau_quant) <= zero_tol if pk.k0 == 0 else None
    return DecompositionReport(pos, neg, full, residual, tol, residual <= tol, cancels)
