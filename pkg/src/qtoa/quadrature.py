"""Adaptive Gauss-Kronrod integration for the three integral classes used here.

* :func:`integrate_adaptive` -- finite interval, globally adaptive bisection
  driven by the embedded 10-point Gauss / 21-point Kronrod pair.
* :func:`integrate_semi_infinite` -- ``[a, inf)`` truncated where a supplied
  decay envelope becomes negligible, optionally with period-bounded panels
  for oscillatory integrands.
* :func:`integrate_regulated_origin` -- half-line integrals whose integrand
  is tamed at the origin by a factor like ``exp(-eps/p)``; the region near 0 is
  stretched logarithmically so the essential decay is resolved.

Integrands must be vectorised: they receive a 1-D float array and return an
array of the same shape (real or complex).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]


class IntegrandError(ArithmeticError):
    """The integrand returned a non-finite value."""


class NonDecayingTailError(ValueError):
    pass


class UnregulatedSingularityError(ValueError):
    pass


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    tail_cut_tol: float = 1e-12

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "tail_cut_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tolerance(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_CONFIG = QuadConfig()


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )


# Kronrod 21-point abscissae on [0, 1] (the rule is symmetric); odd indices
# are the 10-point Gauss-Legendre nodes.  Values from QUADPACK dqk21.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452475,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full 21-node layout on [-1, 1]: negatives, centre, positives.
NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
_gauss_pos = np.arange(1, 10, 2)  # indices of Gauss nodes among the first 10
GAUSS_WEIGHTS[_gauss_pos] = _WG
GAUSS_WEIGHTS[20 - _gauss_pos] = _WG

_EPS = np.finfo(float).eps


def _check_finite(x: np.ndarray, y: np.ndarray) -> None:
    bad = ~np.isfinite(y)
    if bad.any():
        raise IntegrandError(f"integrand failure at x={x[bad][0]!r}")


def _gk_panels(f: Integrand, lefts: np.ndarray, rights: np.ndarray):
    """Apply the G10/K21 pair to every panel in one integrand call."""
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    y = np.asarray(f(x))
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    _check_finite(x, y)
    y = y.reshape(len(lefts), 21)
    kron = (y @ KRONROD_WEIGHTS) * half
    gauss = (y @ GAUSS_WEIGHTS) * half
    resabs = (np.abs(y) @ KRONROD_WEIGHTS) * np.abs(half)
    err = np.abs(kron - gauss)
    # cannot resolve below rounding of the panel's absolute mass
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return kron, err, x.size


def _initial_breaks(a: float, b: float, points: Optional[Sequence[float]], max_panel: Optional[float]):
    breaks = {a, b}
    if points is not None:
        breaks.update(float(p) for p in points if a < p < b)
    breaks = sorted(breaks)
    if max_panel is None:
        return breaks
    out = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, math.ceil((hi - lo) / max_panel))
        out.extend(np.linspace(lo, hi, n + 1)[1:].tolist())
    return out


def _ordered_sum(values) -> complex | float:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def integrate_adaptive(
    f: Integrand,
    a: float,
    b: float,
    cfg: QuadConfig = DEFAULT_CONFIG,
    *,
    points: Optional[Sequence[float]] = None,
    max_panel: Optional[float] = None,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` by adaptive Gauss-Kronrod bisection.

    ``points`` are extra initial breakpoints (kinks, known features) and
    ``max_panel`` caps the initial panel width.  The panel with the largest
    error is bisected until the summed error meets
    ``max(abs_tol, rel_tol*|value|)`` or ``cfg.max_subdivisions`` bisections
    have been spent, in which case ``converged`` is False and the best
    estimate is returned.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    breaks = np.array(_initial_breaks(float(a), float(b), points, max_panel))
    lefts, rights = breaks[:-1], breaks[1:]
    vals, errs, nev = _gk_panels(f, lefts, rights)

    # heap of (-err, tiebreak, left, right); values kept alongside
    panels = {}
    heap = []
    for i, (lo, hi, v, e) in enumerate(zip(lefts, rights, vals, errs)):
        panels[i] = (lo, hi, v, e)
        heap.append((-e, i))
    heapq.heapify(heap)
    next_id = len(panels)

    def totals():
        keys = sorted(panels, key=lambda k: panels[k][0])
        value = _ordered_sum([panels[k][2] for k in keys])
        error = math.fsum(panels[k][3] for k in keys)
        return value, error

    # running sums steer the loop; the final answer is re-summed in a fixed order
    value, error = totals()
    splits = 0
    while error > cfg.tolerance(value) and splits < cfg.max_subdivisions and heap:
        _, pid = heapq.heappop(heap)
        lo, hi, v_old, e_old = panels[pid]
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi) or (hi - lo) <= 4 * _EPS * max(abs(lo), abs(hi)):
            continue
        v2, e2, n2 = _gk_panels(f, np.array([lo, mid]), np.array([mid, hi]))
        nev += n2
        del panels[pid]
        for lo_c, hi_c, v, e in ((lo, mid, v2[0], e2[0]), (mid, hi, v2[1], e2[1])):
            panels[next_id] = (lo_c, hi_c, v, e)
            heapq.heappush(heap, (-e, next_id))
            next_id += 1
        splits += 1
        value = value + (v2[0] + v2[1] - v_old)
        error = max(error + (e2[0] + e2[1] - e_old), 0.0)

    value, error = totals()
    return QuadResult(value, float(error), int(nev), bool(error <= cfg.tolerance(value)))


def _tail_cutoff(envelope: Callable[[float], float], a: float, step: float, tol: float) -> float:
    """Smallest grid point ``a + k*step`` (k >= 1) where envelope(P)*|P| < tol."""

    def small(k: int) -> bool:
        P = a + k * step
        return envelope(P) * max(abs(P), 1.0) < tol

    k = 1
    while not small(k):
        k *= 2
        if k > 2**62:
            raise NonDecayingTailError(f"non-decaying tail: envelope not below {tol} by x={a + k * step:g}")
    lo, hi = k // 2, k
    if lo < 1:
        return a + step
    while hi - lo > 1:
        m = (lo + hi) // 2
        if small(m):
            hi = m
        else:
            lo = m
    return a + hi * step


def integrate_semi_infinite(
    f: Integrand,
    a: float,
    envelope: Callable[[float], float],
    cfg: QuadConfig = DEFAULT_CONFIG,
    *,
    panel_width: Optional[float] = None,
    step: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> QuadResult:
    """Integrate ``f`` over ``[a, inf)``.

    ``envelope`` must be a nonincreasing bound on ``|f|`` for large x.  The
    domain is cut at the first grid point ``P`` with ``envelope(P)*P`` below
    ``cfg.tail_cut_tol``; that bound is added to the error estimate.  For
    oscillatory integrands pass ``panel_width`` (pi for unit-frequency sines)
    so every lobe gets its own initial panel.
    """
    grid_step = step or panel_width or 1.0
    P = _tail_cutoff(envelope, a, grid_step, cfg.tail_cut_tol)
    res = integrate_adaptive(f, a, P, cfg, points=points, max_panel=panel_width)
    tail = envelope(P) * max(abs(P), 1.0)
    err = res.error_estimate + tail
    return QuadResult(res.value, err, res.evaluations, res.converged and err <= cfg.tolerance(res.value))


# The stretched region starts where exp(-eps/p) ~ exp(-300), far below any
# power-law growth of the integrand we care about.
_ORIGIN_RATIO = 1.0 / 300.0
SWITCH_FACTOR = 10.0


def _looks_singular(f: Integrand) -> bool:
    probes = np.array([1e-6, 1e-9, 1e-12])
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(f(probes), dtype=complex)) * probes
    if not np.all(np.isfinite(vals)):
        return True
    # an integrable f has p*|f(p)| -> 0
    return bool(vals[-1] > 0.5 * vals[0] and vals[0] > 0)


def integrate_regulated_origin(
    f: Integrand,
    domain: tuple[float, float],
    reg,
    cfg: QuadConfig = DEFAULT_CONFIG,
    *,
    envelope: Optional[Callable[[float], float]] = None,
    panel_width: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> QuadResult:
    """Integrate ``f(p) * reg.weight(p)`` over a half-line touching the origin.

    ``domain`` is ``(0, hi)`` or ``(lo, 0)``; the far end may be infinite.
    ``reg`` needs an ``epsilon`` attribute and a vectorised ``weight(p)``
    (e.g. ``exp(-eps/p)``).  On ``(0, 10*eps)`` the substitution
    ``p = eps*exp(u)`` resolves the essential decay; the remainder is handed
    to :func:`integrate_adaptive` or :func:`integrate_semi_infinite`.
    ``envelope`` bounds ``|f*weight|`` on the far side (defaults to the
    integrand's own magnitude).  ``points`` are breakpoints given as
    distances from the origin, e.g. around a narrow peak.
    """
    lo, hi = domain
    if lo == 0 and hi > 0:
        sign, far = 1.0, hi
    elif hi == 0 and lo < 0:
        sign, far = -1.0, -lo
    else:
        raise ValueError(f"domain must be (0, b] or [b, 0), got {domain}")

    eps = 0.0 if reg is None else float(reg.epsilon)

    if eps > 0:
        def g(p):
            q = sign * p
            return f(q) * reg.weight(q)
    else:
        def g(p):
            return f(sign * p)

    if envelope is None:
        def env(x):
            return float(np.abs(g(np.array([x])))[0])
    else:
        def env(x):
            return envelope(sign * x)

    if eps <= 0:
        if _looks_singular(g):
            raise UnregulatedSingularityError("unregulated singular integral")
        if math.isinf(far):
            return integrate_semi_infinite(g, 0.0, env, cfg, panel_width=panel_width, points=points)
        return integrate_adaptive(g, 0.0, far, cfg, points=points, max_panel=panel_width)

    switch = min(SWITCH_FACTOR * eps, far)

    def stretched(u):
        p = eps * np.exp(u)
        return g(p) * p

    u_lo = math.log(_ORIGIN_RATIO)
    u_hi = math.log(switch / eps)
    u_points = None if points is None else [math.log(x / eps) for x in points if x > 0]
    result = integrate_adaptive(stretched, u_lo, u_hi, cfg, points=u_points)
    if switch >= far:
        return result

    if math.isinf(far):
        tail = integrate_semi_infinite(g, switch, env, cfg, panel_width=panel_width, step=max(switch, 1.0),
                                       points=points)
    else:
        tail = integrate_adaptive(g, switch, far, cfg, points=points, max_panel=panel_width)
    return result + tail
