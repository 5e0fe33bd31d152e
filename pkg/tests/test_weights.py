import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subcalc import ConvergenceError, DomainError, OperatorSpec, consistency_defect, generating_polynomial, weights
from subcalc.harness import CONSISTENCY_LADDER, fit_order


def spec(alpha, sigma=0.0, p=5, h=0.1):
    return OperatorSpec(alpha, sigma, p, h)


# generating polynomials, exact rationals


@pytest.mark.parametrize(
    "p, coeffs",
    [
        (1, ["1", "-1"]),
        (2, ["3/2", "-2", "1/2"]),
        (3, ["11/6", "-3", "3/2", "-1/3"]),
        (4, ["25/12", "-4", "3", "-4/3", "1/4"]),
        (5, ["137/60", "-5", "5", "-10/3", "5/4", "-1/5"]),
    ],
)
def test_generating_polynomial_coefficients(p, coeffs):
    assert generating_polynomial(p).coeffs == tuple(Fraction(c) for c in coeffs)


@pytest.mark.parametrize("p", [0, 6, 2.5, True])
def test_generating_polynomial_rejects_unsupported_order(p):
    with pytest.raises(DomainError):
        generating_polynomial(p)


@pytest.mark.parametrize("kwargs", [dict(p=6), dict(h=0.0), dict(h=-1.0), dict(alpha=math.nan), dict(sigma=math.inf)])
def test_operator_spec_validation(kwargs):
    args = dict(alpha=0.5, sigma=0.5, p=5, h=0.1) | kwargs
    with pytest.raises(DomainError):
        OperatorSpec(**args)


# examples


def test_p1_recurrence():
    alpha, sigma, h = 0.37, 0.8, 0.05
    g = weights(spec(alpha, sigma, 1, h), 40).g
    expect = [1.0]
    for m in range(1, 41):
        expect.append(math.exp(-sigma * h) * (1 - (alpha + 1) / m) * expect[-1])
    np.testing.assert_allclose(g, expect, rtol=1e-13, atol=0)


def test_alpha_one_returns_polynomial():
    np.testing.assert_array_equal(weights(spec(1.0, 0.0, 2), 4).g, [1.5, -2.0, 0.5, 0.0, 0.0])


def test_half_derivative_second_weight():
    assert weights(spec(0.5, 0.0, 1), 2).g[2] == pytest.approx(-1 / 8, rel=1e-15)


def test_leading_weight_is_constant_term_power():
    assert weights(spec(0.5, 0.0, 5), 3).g[0] == pytest.approx(math.sqrt(137 / 60), rel=1e-15)


def test_alpha_zero_is_impulse():
    g = weights(spec(0.0, 0.7, 3), 5).g
    np.testing.assert_array_equal(g, [1, 0, 0, 0, 0, 0])


def test_weights_read_only():
    g = weights(spec(0.5), 4).g
    with pytest.raises(ValueError):
        g[0] = 2.0


def test_negative_length_rejected():
    with pytest.raises(DomainError):
        weights(spec(0.5), -1)


# invariants


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(-2.5, 2.5),
    sigma=st.floats(-2.0, 2.0),
    p=st.integers(1, 5),
    h=st.floats(1e-3, 0.5),
)
def test_sigma_twist_factorization(alpha, sigma, p, h):
    n = 120
    g = weights(OperatorSpec(alpha, sigma, p, h), n).g
    l = weights(OperatorSpec(alpha, 0.0, p, h), n).g
    twisted = np.exp(-sigma * h * np.arange(n + 1)) * l
    np.testing.assert_allclose(g, twisted, rtol=1e-14, atol=0)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-2.5, 2.5), sigma=st.floats(-1.0, 1.0), h=st.floats(1e-3, 0.5))
def test_p1_binomial_closed_form(alpha, sigma, h):
    m = np.arange(51)
    g = weights(OperatorSpec(alpha, sigma, 1, h), 50).g
    # (-1)^m C(alpha, m) as its defining product, 30 digits
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        c, expect = mpmath.mpf(1), []
        for k in m:
            expect.append(float(mpmath.exp(-sigma * k * h) * c))
            c *= (k - a) / (k + 1)
    expect = np.array(expect)
    np.testing.assert_allclose(g, expect, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_integer_alpha_has_finite_support(p, alpha):
    g = weights(spec(float(alpha), 0.0, p), p * alpha + 30).g
    # exact polynomial power via rationals
    u = generating_polynomial(p).coeffs
    poly = [Fraction(1)]
    for _ in range(alpha):
        poly = [sum(poly[i] * u[k - i] for i in range(len(poly)) if 0 <= k - i < len(u)) for k in range(len(poly) + p)]
    np.testing.assert_allclose(g[: p * alpha + 1], [float(c) for c in poly], rtol=1e-13, atol=1e-13)
    assert np.max(np.abs(g[p * alpha + 1 :])) <= 1e-12 * np.max(np.abs(g))


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("alpha", [-1.5, -0.5, 0.5, 1.5])
def test_convolution_inverse(p, alpha):
    s = spec(alpha, 0.4, p)
    n = 199
    conv = np.convolve(weights(s, n).g, weights(s.inverse(), n).g)[: n + 1]
    impulse = np.zeros(n + 1)
    impulse[0] = 1.0
    np.testing.assert_allclose(conv, impulse, rtol=0, atol=1e-12)


@pytest.mark.parametrize("p", range(1, 6))
def test_stability_decay(p):
    m = np.arange(100, 5001)
    g = weights(spec(-0.5, 0.0, p), 5000).g[100:]
    slope = np.polyfit(np.log(m), np.log(np.abs(g)), 1)[0]
    assert -0.55 <= slope <= -0.45


# consistency defect


def _defect_order(alpha, p):
    return fit_order([(h, consistency_defect(spec(alpha, 0.5, p, h))) for h in CONSISTENCY_LADDER])


def test_backward_euler_integral_is_first_order():
    assert _defect_order(-1.0, 1) == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("alpha", [-0.5, 0.5])
def test_fifth_order_defect_slope(alpha):
    assert _defect_order(alpha, 5) >= 4.9


def test_defect_independent_of_sigma():
    d = [consistency_defect(OperatorSpec(0.5, s, 3, 1 / 32)) for s in (0.0, 0.5, -1.0)]
    assert d[1] == pytest.approx(d[0], rel=1e-12)
    assert d[2] == pytest.approx(d[0], rel=1e-12)


def test_defect_double_precision_agrees_when_resolvable():
    s = spec(-0.5, 0.0, 2, 1 / 16)
    assert consistency_defect(s, precision="double") == pytest.approx(consistency_defect(s), rel=1e-6)


def test_defect_of_identity_is_zero():
    assert consistency_defect(spec(0.0, 0.3, 4, 0.1)) == 0.0


def test_short_truncation_raises():
    with pytest.raises(ConvergenceError) as info:
        consistency_defect(spec(-1.5, 0.0, 5, 1 / 64), N=50)
    assert info.value.estimate is not None
