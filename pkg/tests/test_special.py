import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtoa.special import dawson

# mpmath at 30 digits: sqrt(pi)/2 * exp(-y^2) * erfi(y)
FROZEN = {
    0.1: 0.09933599239785286115,
    1.0: 0.53807950691276841914,
    2.5: 0.22308372216743548113,
    5.9: 0.086019681992648080169,
    6.1: 0.083116330508351488593,
    20.0: 0.025031367926403671947,
}


@pytest.mark.parametrize("y,expected", sorted(FROZEN.items()))
def test_frozen_values(y, expected):
    assert dawson(y) == pytest.approx(expected, rel=1e-14)


def test_odd_and_zero():
    assert dawson(0.0) == 0.0
    assert dawson(-1.3) == -dawson(1.3)


def _taylor_oracle(y):
    # D(y) = sum (-1)^n 2^n y^(2n+1) / (2n+1)!!, summed in high precision
    with mpmath.workdps(60):
        y = mpmath.mpf(y)
        return mpmath.nsum(lambda n: (-1) ** n * 2**n * y ** (2 * n + 1) / mpmath.fac2(2 * n + 1), [0, mpmath.inf])


@given(st.floats(0, 8))
def test_against_alternating_taylor_series(y):
    assert dawson(y) == pytest.approx(float(_taylor_oracle(y)), rel=1e-12, abs=1e-300)


@given(st.floats(0.5, 1e6))
def test_large_argument_asymptotics(y):
    # D(y) ~ 1/(2y) + 1/(4y^3) + ...
    assert dawson(y) == pytest.approx(1 / (2 * y) + 1 / (4 * y**3), rel=2 / y**4 + 1e-15)


@pytest.mark.parametrize("y", [5e-324, 1e-310, 1e-300])
def test_tiny_arguments_terminate(y):
    assert dawson(y) == y


def test_non_finite():
    assert dawson(float("inf")) == 0.0
    assert dawson(-float("inf")) == 0.0
    assert dawson(float("nan")) != dawson(float("nan"))
