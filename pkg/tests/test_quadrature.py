import math

import numpy as np
import pytest
from scipy import integrate, special

from tubekernel.errors import DomainValidationError
from tubekernel.polynomial import Polynomial, derivative
from tubekernel.quadrature import (ShiftedPolynomial, N_value, bnw_estimate, laplace_integral,
                                   laplace_integrals, lower_bound_I, shift_poly,
                                   upper_bound_check)

SQRT2 = math.sqrt(2.0)
TAUS = [1e-2, 1.0, 1e2]


def _centred(coeffs) -> ShiftedPolynomial:
    return ShiftedPolynomial(p=Polynomial(tuple(coeffs)), eta=0.0, lambda_eta=0.0, legendre=0.0)


def test_shift_poly_examples(quartic, double_well):
    sp = shift_poly(quartic, 0.0)
    assert sp.p.coeffs == pytest.approx((0.0, 0.0, 0.0, 0.0, 0.25), abs=1e-12)
    assert sp.lambda_eta == pytest.approx(0.0, abs=1e-12)

    sp = shift_poly(double_well, 0.0)
    assert sp.lambda_eta == pytest.approx(SQRT2)
    assert sp.legendre == pytest.approx(1.0)
    assert sp.p(0.0) == 0.0
    assert sp.p(-2 * SQRT2) == pytest.approx(0.0, abs=1e-10)
    for xi in (-1.0, 0.5, 2.0):
        expected = (xi + SQRT2) ** 4 / 4 - (xi + SQRT2) ** 2 + 1
        assert sp.p(xi) == pytest.approx(expected, abs=1e-12)


def test_shift_poly_curvature(cubic_tilt):
    d2 = derivative(cubic_tilt, 2)
    for eta in (-20.0, 0.5, 2.0, 15.0):
        sp = shift_poly(cubic_tilt, eta)
        assert derivative(sp.p, 2)(0.0) == pytest.approx(d2(sp.lambda_eta), rel=1e-10)
        assert min(sp.p(xi) for xi in np.linspace(-10, 10, 2001)) >= -1e-9


@pytest.mark.parametrize('tau', TAUS)
def test_gaussian_closed_form(tau):
    res = laplace_integral(_centred((0.0, 0.0, 1.0)), tau)
    assert res.converged
    assert res.value == pytest.approx(math.sqrt(math.pi / (2 * tau)), rel=1e-8)


@pytest.mark.parametrize('a', [0.25, 3.0])
@pytest.mark.parametrize('tau', TAUS)
def test_quartic_closed_form(a, tau):
    res = laplace_integral(_centred((0.0, 0.0, 0.0, 0.0, a)), tau)
    assert res.converged
    expected = 2 * special.gamma(1.25) / (2 * tau * a) ** 0.25
    assert res.value == pytest.approx(expected, rel=1e-8)


def test_quartic_matches_simpson(quartic):
    sp = shift_poly(quartic, 0.0)
    xs = np.linspace(-8, 8, 160001)
    simpson = integrate.simpson(np.exp(-xs ** 4 / 2), x=xs)
    assert laplace_integral(sp, 1.0).value == pytest.approx(simpson, rel=1e-9)


def test_gaussian_tau_scaling():
    sp = _centred((0.0, 0.0, 0.7))
    assert laplace_integral(sp, 2.0).value == pytest.approx(
        laplace_integral(sp, 1.0).value / SQRT2, rel=1e-9)


def test_laplace_integral_rejects_tau(quartic):
    sp = shift_poly(quartic, 1.0)
    for tau in (0.0, -1.0, math.nan):
        with pytest.raises(DomainValidationError):
            laplace_integral(sp, tau)
    with pytest.raises(DomainValidationError):
        laplace_integrals(sp, [1.0, 0.0])


def test_vector_matches_scalar(double_well):
    sp = shift_poly(double_well, 0.3)
    taus = [5.0, 1e-3, 40.0, 0.2, 1e3, 1.0]
    vec = laplace_integrals(sp, taus)
    assert len(vec) == len(taus)
    for tau, res in zip(taus, vec):
        assert res.value == pytest.approx(laplace_integral(sp, tau).value, rel=1e-8)


def test_positive_and_decreasing_in_tau(cubic_tilt):
    taus = np.logspace(-3, 3, 40)
    for eta in (-5.0, 0.0, 2.0, 7.5):
        values = [r.value for r in laplace_integrals(shift_poly(cubic_tilt, eta), taus)]
        assert all(v > 0 for v in values)
        assert all(v1 > v2 for v1, v2 in zip(values, values[1:]))


def test_refinement_stability(double_well):
    for eta in (0.1, 3.0):
        sp = shift_poly(double_well, eta)
        for tau in (0.01, 1.0, 100.0):
            coarse = laplace_integral(sp, tau, tol=1e-8)
            fine = laplace_integral(sp, tau, tol=5e-9)
            slack = coarse.abs_error_estimate + 1e-12 * (1 + fine.value)
            assert abs(coarse.value - fine.value) <= slack


def test_N_value_examples(quartic, double_well):
    res = N_value(quartic, 0.0, 1.0)
    assert res.legendre == pytest.approx(0.0, abs=1e-12)
    assert res.log_N == pytest.approx(math.log(2 * special.gamma(1.25) * 2 ** 0.25), rel=1e-8)

    res = N_value(double_well, 0.0, 10.0)
    assert res.legendre == pytest.approx(1.0)
    assert res.log_N == pytest.approx(20.0 + math.log(res.I.value), rel=1e-12)


@pytest.mark.parametrize('eta,tau', [(0.0, 0.5), (0.3, 2.0), (-4.0, 1.0), (6.0, 0.1)])
def test_N_value_matches_direct_definition(double_well, eta, tau):
    res = N_value(double_well, eta, tau)
    assert 2 * tau * res.legendre < 50

    def _integrand(x):
        return math.exp(-2 * tau * (double_well(x) - eta * x))

    direct, _ = integrate.quad(_integrand, -12, 12, points=[-SQRT2, 0.0, SQRT2], limit=500,
                               epsabs=0, epsrel=1e-12)
    assert math.exp(res.log_N) == pytest.approx(direct, rel=1e-6)


def test_bnw_estimate_examples():
    assert bnw_estimate([1.0]) == 1.0
    assert bnw_estimate([0.0, 0.0, 16.0]) == pytest.approx(0.5)
    with pytest.raises(DomainValidationError):
        bnw_estimate([0.0, 0.0])


def test_bnw_estimate_against_quadrature(rng):
    for _ in range(100):
        deg = int(rng.integers(2, 9))
        beta = rng.uniform(0, 1, deg - 1) * 10.0 ** rng.uniform(-3, 3, deg - 1)
        beta[-1] = max(beta[-1], 1e-6)

        def _integrand(xi, beta=beta):
            return math.exp(-sum(bj * xi ** j for j, bj in enumerate(beta, start=2)))

        value, _ = integrate.quad(_integrand, 0, np.inf, epsabs=0, epsrel=1e-8, limit=200)
        assert 0.1 <= value / bnw_estimate(beta) <= 10


def test_lower_bound_examples(quartic):
    assert lower_bound_I(quartic, 0.0, 1.0) == pytest.approx(6 ** -0.25)
    base = lower_bound_I(quartic, 0.0, 1.0)
    assert lower_bound_I(quartic, 0.0, 16.0) == pytest.approx(base / 2)
    # at lambda = 2 the quadratic term dominates for large tau
    tau = 1e3
    ratio = lower_bound_I(quartic, 8.0, tau) * math.sqrt(tau * derivative(quartic, 2)(2.0))
    assert 0.5 <= ratio <= 1.0
    with pytest.raises(DomainValidationError):
        lower_bound_I(quartic, 0.0, 0.0)


def test_lower_bound_sandwich(double_well, cubic_tilt):
    """The lower comparator stays within a fixed factor of ``I`` on a grid of slopes."""
    taus = np.logspace(-3, 3, 13)
    ratios = []
    for b in (double_well, cubic_tilt):
        for eta in np.linspace(-10, 10, 11):
            results = laplace_integrals(shift_poly(b, float(eta)), taus)
            ratios += [lower_bound_I(b, float(eta), float(tau)) / r.value
                       for tau, r in zip(taus, results)]
    K = max(ratios)
    assert 0 < min(ratios) and K < 100


def test_upper_bound_check_double_well(double_well):
    res = upper_bound_check(double_well, 0.0, 0.5, np.logspace(-3, 3, 25))
    assert res.holds
    assert res.max_ratio <= 1.05 * res.fitted_c
    assert len(res.etas) == 9 and all(0 < e < 0.5 for e in res.etas)
    assert math.isfinite(res.tail_product)


def test_upper_bound_check_convex(quartic):
    res = upper_bound_check(quartic, 2.0, 1.0, np.logspace(-2, 2, 9))
    assert res.holds


def test_upper_bound_tail_is_bounded(double_well):
    small = upper_bound_check(double_well, 0.0, 0.5, np.logspace(0, 2, 5))
    large = upper_bound_check(double_well, 0.0, 0.5, np.logspace(0, 4, 9))
    assert large.tail_product == pytest.approx(small.tail_product, rel=0.05)


def test_upper_bound_check_rejects(double_well):
    with pytest.raises(DomainValidationError):
        upper_bound_check(double_well, 0.0, 0.0, [1.0])
    with pytest.raises(DomainValidationError):
        upper_bound_check(double_well, 0.0, 0.5, [])
