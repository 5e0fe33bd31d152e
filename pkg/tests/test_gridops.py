import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import gamma

from subcalc import (
    DomainError,
    GridFunction,
    OperatorSpec,
    PowerExpFunction,
    PreconditionError,
    apply,
    apply_fast,
    fit_order,
    max_error,
    solve,
    weights,
)
from subcalc.gridops import relative_max_deviation
from subcalc.harness import DYADIC_LADDER

ALPHAS = (-1.5, -0.5, 0.5, 1.5)


def grid(func, h, b=1.0):
    return GridFunction.sample(func, 0.0, h, round(b / h))


def test_first_order_stencil_annihilates_damping():
    sigma, h = 0.7, 0.05
    spec = OperatorSpec(1.0, sigma, 1, h)
    f = grid(lambda x: np.exp(-sigma * x), h)
    out = apply(spec, f).values
    np.testing.assert_allclose(out[1:], 0.0, atol=1e-12)


def test_example1_first_level():
    alpha, sigma, h = 0.5, 0.5, 0.1
    spec = OperatorSpec(alpha, sigma, 5, h)
    f = grid(PowerExpFunction(5 + alpha, sigma), h)
    rhs = lambda x: gamma(6 + alpha) / gamma(6) * x**5 * np.exp(-sigma * x)  # noqa: E731
    assert max_error(apply(spec, f), rhs) == pytest.approx(2.0214e-4, rel=2e-2)


def test_zero_maps_to_zero():
    spec = OperatorSpec(-0.5, 0.3, 1, 0.1)
    out = apply(spec, GridFunction(0.0, 0.1, np.zeros(11)))
    assert np.all(out.values == 0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_impulse_returns_scaled_weights(alpha):
    h, n = 0.02, 40
    spec = OperatorSpec(alpha, 0.5, 4, h)
    imp = np.zeros(n + 1)
    imp[0] = 1.0
    expect = h ** (-alpha) * weights(spec, n).g
    for op in (apply, apply_fast):
        np.testing.assert_allclose(op(spec, GridFunction(0.0, h, imp)).values, expect, rtol=1e-13, atol=1e-13 * np.max(np.abs(expect)))


@pytest.mark.parametrize("n", [0, 1, 5, 17, 32])
def test_fast_matches_direct_small(n):
    rng = np.random.default_rng(n)
    spec = OperatorSpec(0.5, 0.5, 5, 0.1)
    f = GridFunction(0.0, 0.1, rng.standard_normal(n + 1))
    assert relative_max_deviation(apply_fast(spec, f).values, apply(spec, f).values) < 1e-13


@pytest.mark.parametrize("k", [6, 10, 14])  # 2^16 is covered by the acceptance module
@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("alpha", ALPHAS)
def test_fast_path_equivalence(k, p, alpha):
    n = 2**k
    rng = np.random.default_rng(1000 * k + p)
    spec = OperatorSpec(alpha, 0.5, p, 1.0 / n)
    f = GridFunction(0.0, spec.h, rng.standard_normal(n + 1))
    assert relative_max_deviation(apply_fast(spec, f).values, apply(spec, f).values) < 1e-12


def test_spacing_mismatch():
    spec = OperatorSpec(0.5, 0.5, 2, 0.1)
    f = GridFunction(0.0, 0.1 * (1 + 1e-9), np.ones(5))
    for op in (apply, apply_fast):
        with pytest.raises(PreconditionError):
            op(spec, f)
    with pytest.raises(PreconditionError):
        solve(spec, f, 0.0)


def test_grid_function_validation():
    with pytest.raises(DomainError):
        GridFunction(0.0, 0.1, np.array([]))
    with pytest.raises(DomainError):
        GridFunction(0.0, 0.0, np.ones(3))


@settings(max_examples=40, deadline=None)
@given(
    u=arrays(np.float64, 33, elements=st.floats(-10, 10)),
    v=arrays(np.float64, 33, elements=st.floats(-10, 10)),
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    alpha=st.sampled_from(ALPHAS),
    p=st.integers(1, 5),
)
def test_linearity(u, v, a, b, alpha, p):
    spec = OperatorSpec(alpha, 0.5, p, 1 / 32)
    lhs = apply(spec, GridFunction(0.0, spec.h, a * u + b * v)).values
    rhs = a * apply(spec, GridFunction(0.0, spec.h, u)).values + b * apply(spec, GridFunction(0.0, spec.h, v)).values
    scale = (abs(a) * np.max(np.abs(apply(spec, GridFunction(0.0, spec.h, u)).values))
             + abs(b) * np.max(np.abs(apply(spec, GridFunction(0.0, spec.h, v)).values)) + 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * scale


def test_first_order_solve_reproduces_exponential():
    sigma, h = 0.5, 0.1
    spec = OperatorSpec(1.0, sigma, 1, h)
    out = solve(spec, GridFunction(0.0, h, np.zeros(21)), 1.0)
    np.testing.assert_allclose(out.values, np.exp(-sigma * h * np.arange(21)), rtol=1e-14)


def _smooth_grid(h):
    return grid(lambda x: np.exp(-0.5 * x) * np.cos(3 * x) + x**2, h)


@pytest.mark.parametrize(
    "n, alpha",
    [(100, a) for a in ALPHAS] + [(10_000, -0.5), (10_000, 0.5)],
)
@pytest.mark.parametrize("p", [1, 3, 5])
def test_solve_inverts_apply(n, alpha, p):
    # |alpha| = 1.5 at n = 10^4 amplifies input rounding by ~h^-1.5, see residual test below
    spec = OperatorSpec(alpha, 0.5, p, 1.0 / n)
    f = _smooth_grid(spec.h)
    back = solve(spec, apply(spec, f), f.values[0])
    assert relative_max_deviation(back.values, f.values) < 1e-11


@pytest.mark.parametrize("p", [1, 3, 5])
@pytest.mark.parametrize("alpha", ALPHAS)
def test_solve_is_backward_stable(p, alpha):
    n = 10_000
    spec = OperatorSpec(alpha, 0.5, p, 1.0 / n)
    rhs = apply(spec, _smooth_grid(spec.h))
    f = solve(spec, rhs, 1.0)
    resid = apply(spec, f).values[1:] - rhs.values[1:]
    assert np.max(np.abs(resid)) < 1e-12 * np.max(np.abs(rhs.values))


def test_solve_example1_half_derivative():
    alpha, sigma = 0.5, 0.5
    exact = PowerExpFunction(5 + alpha, sigma)
    rhs = exact.transformed(alpha)
    errs = []
    for h in DYADIC_LADDER:
        spec = OperatorSpec(alpha, sigma, 5, h)
        errs.append(max_error(solve(spec, grid(rhs, h), 0.0), exact))
    assert fit_order(list(zip(DYADIC_LADDER, errs))) >= 4.7


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_discrete_composition_order(p, alpha):
    # D_h^alpha I_h^alpha f = f up to the truncated-inverse defect
    errs = []
    hs = DYADIC_LADDER
    f = PowerExpFunction(5 + alpha, 0.5)
    for h in hs:
        fwd = OperatorSpec(-alpha, 0.5, p, h)
        g = apply(fwd, grid(f, h))
        errs.append(max_error(apply(fwd.inverse(), g), f))
    # weights are exact convolution inverses, so the composition is round-off
    assert max(errs) < 1e-10 or fit_order(list(zip(hs, errs))) >= p - 0.2


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("alpha", ALPHAS)
def test_apply_convergence_order(p, alpha):
    f = PowerExpFunction(5 + alpha, 0.5)
    errs = [max_error(apply(OperatorSpec(alpha, 0.5, p, h), grid(f, h)), f.transformed(alpha)) for h in DYADIC_LADDER]
    assert fit_order(list(zip(DYADIC_LADDER, errs))) >= p - 0.1


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("order", [0.5, 1.5])
def test_integral_order_on_derivative_test_function(p, order):
    # same f as the derivative case; the coarse ladder is still pre-asymptotic here
    ladder = (1 / 40, 1 / 80, 1 / 160, 1 / 320, 1 / 640)
    f = PowerExpFunction(5 + order, 0.5)
    errs = [max_error(apply(OperatorSpec(-order, 0.5, p, h), grid(f, h)), f.transformed(-order)) for h in ladder]
    assert fit_order(list(zip(ladder, errs))) >= p - 0.1


def test_max_error_skips_first_node():
    g = GridFunction(0.0, 0.5, np.array([5.0, 1.0, 2.0]))
    assert max_error(g, np.array([0.0, 1.0, 2.5])) == 0.5
    assert max_error(g, np.zeros(3), skip_first=False) == 5.0
    assert max_error(g, lambda x: 2 * x) == 0.0
