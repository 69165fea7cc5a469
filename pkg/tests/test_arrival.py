import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtoa.arrival import (
    CausalDivergenceError,
    MomentumDomain,
    Regulator,
    RegulatorKind,
    correction_factor,
    correction_factor_closed_form,
    halfline_decomposition_check,
    momentum_integrand,
    tau_quant_gaussian,
    tau_quant_momentum,
    tau_quant_position_quadrature,
    toa_kernel,
)
from qtoa.physics_model import NATURAL_UNITS, GaussianPacket, PhysicalConstants, classical_toa
from qtoa.quadrature import UnregulatedSingularityError

from conftest import packet

# int_0^inf sin(v) exp(-v^2/(8x^2)) dv by mpmath.quadosc at 30 digits
CF_FROZEN = {
    0.01: 0.00039994667093308953465,
    0.1: 0.039470909060347914338,
    0.25: 0.2301721413097424333,
    0.5: 0.72477845900707633182,
    1.0: 1.2799761491308178514,
    2.0: 1.0815851832536082661,
    5.0: 1.0103161564918598872,
    10.0: 1.0025189885714712089,
}
# location and height of the correction factor's maximum (mpmath findroot)
CF_ARGMAX, CF_MAX = 1.06205689736721908830, 1.28474943965684648252

# Real part of the regulated momentum integral, mpmath.quad at 30 digits,
# q0=-5, X=0, sigma0=0.5: (kind, eps, domain, k0) -> tau
MOMENTUM_FROZEN = {
    ("causal", 0.5, "positive", 0.0): 1.3104879884006201371,
    ("causal", 0.1, "positive", 0.0): 3.7882382953916705669,
    ("causal", 0.01, "positive", 0.0): 8.1749281385113628702,
    ("causal", 0.01, "positive", 10.0): 0.50464253657235624671,
    ("relaxed", 0.01, "full", 2.0): 3.1333290759829440152,
    ("relaxed", 0.1, "negative", 1.0): -1.4990804402369585692,
}


def test_kernel_examples():
    assert toa_kernel(1.3, 1.3, 0.7) == 0
    assert toa_kernel(1.0, 0.0, 0.0) == pytest.approx(-0.25j)


@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(-20, 20), st.floats(0.1, 5), st.floats(0.1, 5))
def test_kernel_hermitian(q, q2, X, mu, hbar):
    c = PhysicalConstants(mu, hbar)
    k = toa_kernel(q, q2, X, c)
    assert k == np.conj(toa_kernel(q2, q, X, c))
    assert k.real == 0


@pytest.mark.parametrize("x,expected", sorted(CF_FROZEN.items()))
def test_correction_factor_frozen(x, expected):
    assert abs(correction_factor(x) - expected) <= 1e-8
    assert abs(correction_factor_closed_form(x) - expected) <= 1e-12


def test_correction_factor_limits():
    assert correction_factor(0.0) == 0.0
    assert correction_factor_closed_form(0.0) == 0.0
    assert correction_factor(0.01) <= 1e-3
    assert 1 < correction_factor_closed_form(10.0) < 1.01
    with pytest.raises(ValueError):
        correction_factor(-1.0)


def test_correction_factor_overshoots_one():
    xs = np.linspace(0.5, 2.0, 3001)
    vals = np.array([correction_factor_closed_form(x) for x in xs])
    assert xs[np.argmax(vals)] == pytest.approx(CF_ARGMAX, abs=1e-3)
    assert vals.max() == pytest.approx(CF_MAX, rel=1e-8)
    assert correction_factor(CF_ARGMAX) == pytest.approx(CF_MAX, abs=1e-8)


@given(st.floats(3, 1e3))
def test_correction_factor_asymptotics(x):
    approx = 1 + 1 / (4 * x * x) + 3 / (16 * x**4)
    assert correction_factor_closed_form(x) == pytest.approx(approx, abs=2 / x**6 + 1e-15)


def test_gaussian_tau():
    with pytest.raises(ValueError, match="undefined"):
        tau_quant_gaussian(packet(0.0), 0.0)
    r = tau_quant_gaussian(packet(20.0), 0.0)
    assert r.tau_quant == pytest.approx(5 / 20 * CF_FROZEN[10.0], rel=1e-12)
    assert r.domain is MomentumDomain.FULL_LINE and r.regulator.kind is RegulatorKind.NONE
    assert tau_quant_gaussian(GaussianPacket(5.0, 0.5, 1.0), 0.0).tau_quant < 0
    assert tau_quant_gaussian(packet(-1.0), 0.0).tau_quant < 0
    small = [tau_quant_gaussian(packet(k), 0.0).tau_quant for k in (1e-2, 1e-3, 1e-4)]
    assert small[0] > small[1] > small[2] > 0 and small[2] < 1e-3


@pytest.mark.parametrize("k0", [0.5, 1.0, 2.0, 4.0])
def test_position_quadrature_matches_gaussian(k0):
    pk = packet(k0)
    pos = tau_quant_position_quadrature(pk, 0.0)
    ref = tau_quant_gaussian(pk, 0.0).tau_quant
    assert abs(pos.tau_quant / ref - 1) <= 1e-6
    assert pos.imag_residual <= 1e-10
    assert pos.converged


def test_position_quadrature_other_units():
    c = PhysicalConstants(mu=2.0, hbar=0.5)
    pk = GaussianPacket(-3.0, 0.8, 1.5)
    pos = tau_quant_position_quadrature(pk, 1.0, c)
    ref = tau_quant_gaussian(pk, 1.0, c).tau_quant
    assert pos.tau_quant == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("key,expected", sorted(MOMENTUM_FROZEN.items()))
def test_momentum_frozen(key, expected):
    kind, eps, dom, k0 = key
    r = tau_quant_momentum(packet(k0), 0.0, Regulator(kind, eps), dom)
    assert abs(r.tau_quant - expected) <= 1e-8 * max(1, abs(expected))
    assert r.imag_residual <= 1e-8
    assert not r.diverged and r.converged


def test_causal_regulator_rejects_negative_momenta():
    for dom in ("negative", "full"):
        with pytest.raises(CausalDivergenceError, match="regulator enforces divergence on negative momenta"):
            tau_quant_momentum(packet(1.0), 0.0, Regulator("causal", 0.1), dom)


def test_unregulated_needs_negligible_origin():
    with pytest.raises(UnregulatedSingularityError, match="unregulated singular integral"):
        tau_quant_momentum(packet(0.5), 0.0, Regulator(), "full")
    r = tau_quant_momentum(packet(10.0), 0.0, Regulator(), "full")
    assert r.tau_quant == pytest.approx(0.5 * CF_FROZEN[5.0], rel=1e-9)


def test_unregulated_matches_gaussian_in_other_units():
    c = PhysicalConstants(mu=1.5, hbar=0.4)
    pk = GaussianPacket(-5.0, 0.5, 12.0)
    r = tau_quant_momentum(pk, 0.0, Regulator(), "full", c)
    assert r.tau_quant == pytest.approx(tau_quant_gaussian(pk, 0.0, c).tau_quant, rel=1e-9)


def test_divergence_flag():
    r = tau_quant_momentum(packet(0.0), 0.0, Regulator("causal", 1e-3), "positive", divergence_factor=1.0)
    assert r.diverged
    r = tau_quant_momentum(packet(0.0), 0.0, Regulator("causal", 1e-3), "positive")
    assert not r.diverged and r.tau_quant > 0


def test_momentum_integrand_real_part():
    pk = packet(1.3)
    ps = np.array([-2.0, -0.3, 0.4, 1.0, 3.0])
    vals = momentum_integrand(ps, pk, 0.0)
    g = np.sqrt(2 * 0.25 / math.pi) * np.exp(-2 * (ps - 1.3) ** 2 * 0.25)
    assert np.allclose(vals.real, 5 * g / ps, rtol=1e-13)
    with pytest.raises(ValueError):
        momentum_integrand(np.array([0.0]), pk, 0.0)


def test_regulator_validation_and_weights():
    with pytest.raises(ValueError):
        Regulator("causal", 0.0)
    with pytest.raises(ValueError):
        Regulator("none", 0.1)
    with pytest.raises(ValueError):
        Regulator("relaxed", -1.0)
    causal, relaxed = Regulator("causal", 0.1), Regulator("relaxed", 0.1)
    assert causal.weight(0.0) == 0 and relaxed.weight(0.0) == 0
    assert causal.weight(-0.01) > 1e4 and relaxed.weight(-0.01) < 1e-4
    assert relaxed.weight(0.3) == relaxed.weight(-0.3) == causal.weight(0.3)
    p = np.array([-2.0, -0.1, 0.05, 1.0])
    h = 1e-7
    for reg in (causal, relaxed):
        numeric = (reg.weight(p + h) - reg.weight(p - h)) / (2 * h)
        assert np.allclose(reg.derivative(p), numeric, rtol=1e-5)


@given(st.floats(0, 6), st.sampled_from([0.5, 0.1, 0.01]))
@settings(max_examples=25, deadline=None)
def test_decomposition_and_signs(k0, eps):
    rep = halfline_decomposition_check(packet(k0), 0.0, Regulator("relaxed", eps))
    assert rep.holds
    assert rep.negative.tau_quant <= 0 <= rep.positive.tau_quant
    for r in (rep.positive, rep.negative, rep.full):
        assert r.imag_residual <= max(1e-9, 10 * r.error_estimate)


def test_decomposition_cancels_at_zero():
    rep = halfline_decomposition_check(packet(0.0), 0.0, Regulator("relaxed", 0.01))
    assert rep.cancels_at_zero is True
    assert abs(rep.full.tau_quant) <= 1e-6
    with pytest.raises(ValueError):
        halfline_decomposition_check(packet(0.0), 0.0, Regulator("causal", 0.01))


@pytest.mark.parametrize("k0", [1.0, 2.0, 4.0])
def test_causal_tends_to_gaussian_tail_behaviour(k0):
    # as eps -> 0 the causal result exceeds the full Gaussian result by the
    # (negative) contribution the negative momenta would have made
    pk = packet(k0)
    gauss = tau_quant_gaussian(pk, 0.0).tau_quant
    causal = tau_quant_momentum(pk, 0.0, Regulator("causal", 1e-4), "positive").tau_quant
    neg = tau_quant_momentum(pk, 0.0, Regulator("relaxed", 1e-4), "negative").tau_quant
    assert causal + neg == pytest.approx(gauss, rel=2e-3)
    assert causal >= gauss


def test_classical_limit_of_causal_result():
    for k0 in (10.0, 20.0):
        pk = packet(k0)
        r = tau_quant_momentum(pk, 0.0, Regulator("causal", 0.01), "positive")
        t_class = classical_toa(NATURAL_UNITS, 0.0, pk.q0, k0)
        assert abs(r.tau_quant / t_class - 1) <= 0.01


def test_position_quadrature_zero_momentum_and_imag_bound():
    assert abs(tau_quant_position_quadrature(packet(0.0), 0.0).tau_quant) <= 1e-10
    for k0 in (1.0, 3.0, 10.0):
        r = tau_quant_position_quadrature(packet(k0), 0.0)
        assert r.imag_residual <= 1e-8 * abs(r.tau_quant)


@given(st.floats(0.25, 5.0), st.sampled_from([0.3, 0.5, 1.2]))
@settings(max_examples=12, deadline=None)
def test_position_matches_gaussian_over_range(x, sigma0):
    pk = GaussianPacket(-5.0, sigma0, x / sigma0)
    pos = tau_quant_position_quadrature(pk, 0.0).tau_quant
    assert pos == pytest.approx(tau_quant_gaussian(pk, 0.0).tau_quant, rel=1e-4)


def test_momentum_integrand_at_peak_and_decay():
    pk = packet(1.7)
    g0 = math.sqrt(2 * 0.25 / math.pi)
    val = momentum_integrand(np.array([1.7]), pk, 0.0)[0]
    assert val.imag == pytest.approx(g0 / 1.7**2, rel=1e-13)
    far = np.abs(momentum_integrand(np.array([-30.0, 40.0]), pk, 0.0))
    assert np.all(far < 1e-200)


def test_correction_factor_bounds():
    for x in np.linspace(0.001, 0.1, 25):
        assert 0 <= correction_factor_closed_form(x) <= 5 * x * x
    for x in np.linspace(2, 20, 37):
        assert abs(correction_factor_closed_form(x) - 1) <= 1 / (3 * x * x)


@given(st.floats(0, 8), st.sampled_from([0.5, 0.1, 0.01]), st.floats(-8, -0.5))
@settings(max_examples=30, deadline=None)
def test_causal_positivity(k0, eps, q0):
    r = tau_quant_momentum(GaussianPacket(q0, 0.5, k0), 0.0, Regulator("causal", eps), "positive")
    assert r.tau_quant > 0


def test_negative_half_vanishes_in_classical_limit():
    rep = halfline_decomposition_check(packet(10.0), 0.0, Regulator("relaxed", 0.01))
    assert abs(rep.negative.tau_quant) <= 1e-3 * abs(rep.positive.tau_quant)
