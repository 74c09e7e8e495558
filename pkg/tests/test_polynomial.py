import math

import numpy as np
import pytest

from tubekernel.errors import DomainValidationError, NegativePolynomialError
from tubekernel.polynomial import (Polynomial, concavity_intervals, convexity_intervals,
                                   derivative, evaluate, factor_nonneg, from_text,
                                   inflection_points, is_convex, real_roots, shift, to_text,
                                   validate_domain)


def test_evaluate_examples(quartic, double_well):
    assert evaluate(quartic, 2.0) == pytest.approx(4.0)
    assert evaluate(double_well, math.sqrt(2.0)) == pytest.approx(-1.0)
    p = Polynomial((3.5, -1.0, 2.0))
    assert evaluate(p, 0.0) == 3.5


def test_evaluate_array_matches_scalar(double_well):
    xs = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(evaluate(double_well, xs), [double_well(float(x)) for x in xs])


def test_derivative_examples(quartic, double_well):
    assert derivative(double_well, 1).coeffs == pytest.approx((0.0, -2.0, 0.0, 1.0))
    assert derivative(quartic, 4).coeffs == pytest.approx((6.0,))
    assert derivative(Polynomial((0.0, 0.0, 0.0, 1.0)), 5).is_zero
    assert derivative(quartic, 0) is quartic
    with pytest.raises(DomainValidationError):
        derivative(quartic, -1)


def test_derivative_matches_finite_difference(rng):
    for _ in range(20):
        deg = int(rng.integers(1, 11))
        p = Polynomial(tuple(rng.uniform(-10, 10, deg + 1)))
        dp = derivative(p, 1)
        xs = rng.uniform(-1, 1, 50)
        h = 1e-6
        fd = (p(xs + h) - p(xs - h)) / (2 * h)
        exact = dp(xs)
        scale = np.maximum(np.abs(exact), np.max(np.abs(p.coeffs)))
        assert np.all(np.abs(fd - exact) <= 1e-6 * scale)


def test_trailing_zeros_are_trimmed():
    p = Polynomial((1.0, 2.0, 0.0, 0.0))
    assert p.degree == 1
    assert Polynomial((0.0, 0.0)).is_zero


def test_arithmetic():
    p = Polynomial.linear(1.0, 1.0)
    assert (p * p).coeffs == pytest.approx((1.0, 2.0, 1.0))
    assert (p - p).is_zero
    assert (p + p).coeffs == pytest.approx((2.0, 2.0))


def test_shift(double_well):
    a = 0.7
    shifted = shift(double_well, a)
    for x in (-2.0, -0.3, 0.0, 1.1):
        assert shifted(x) == pytest.approx(double_well(x + a))


def test_text_round_trip():
    text = '0.1,-2.5,1e-17,0.0,0.25'
    p = from_text(text)
    assert from_text(to_text(p)) == p
    assert str(from_text('0, 0, -1, 0, 0.25')) == '0.0,0.0,-1.0,0.0,0.25'


@pytest.mark.parametrize('text', ['', '1,,2', 'a,b', '1,nan,2', '1,inf'])
def test_from_text_rejects(text):
    with pytest.raises(DomainValidationError):
        from_text(text)


@pytest.mark.parametrize('text', ['0,0,1', '0,0,0,0,0,1', '0,0,0,0,-1',
                                  '1,2,3,4,5,6,7,8,9,10,0,0'])
def test_validate_domain_rejects(text):
    with pytest.raises(DomainValidationError):
        validate_domain(from_text(text))


def test_validate_domain_accepts(double_well):
    assert validate_domain(double_well) is double_well


def test_real_roots_simple():
    roots = real_roots(Polynomial((0.0, -2.0, 0.0, 1.0)))
    assert roots.locations == pytest.approx([-math.sqrt(2), 0.0, math.sqrt(2)], abs=1e-12)
    assert [m for _, m in roots.real_roots] == [1, 1, 1]
    assert roots.complex_pairs == ()


def test_real_roots_complex_pair():
    roots = real_roots(Polynomial((1.0, 0.0, 1.0)))
    assert roots.real_roots == ()
    ((h, k, m),) = roots.complex_pairs
    assert h == pytest.approx(0.0, abs=1e-12)
    assert k == pytest.approx(1.0)
    assert m == 1


def test_real_roots_double():
    roots = real_roots(Polynomial((1.0, -2.0, 1.0)))
    ((x, m),) = roots.real_roots
    assert x == pytest.approx(1.0, abs=1e-7)
    assert m == 2
    assert roots.odd_roots() == []


def test_real_roots_count_and_residual(rng):
    for _ in range(30):
        deg = int(rng.integers(1, 11))
        p = Polynomial(tuple(rng.uniform(-10, 10, deg + 1)))
        roots = real_roots(p)
        assert roots.count == p.degree
        scale = sum(abs(c) for c in p.coeffs)
        for x in roots.locations:
            assert abs(p(x)) <= 1e-6 * scale * (1 + abs(x)) ** p.degree


def test_real_roots_degenerate():
    with pytest.raises(DomainValidationError):
        real_roots(Polynomial((0.0,)))
    assert real_roots(Polynomial((2.0,))).count == 0


def test_convexity_intervals(quartic, double_well):
    assert convexity_intervals(quartic) == [(-math.inf, math.inf)]
    assert convexity_intervals(Polynomial((0, 0, 0, 0, 0, 0, 1.0))) == [(-math.inf, math.inf)]
    (lo1, hi1), (lo2, hi2) = convexity_intervals(double_well)
    c = math.sqrt(2.0 / 3.0)
    assert lo1 == -math.inf and hi2 == math.inf
    assert hi1 == pytest.approx(-c) and lo2 == pytest.approx(c)
    assert concavity_intervals(double_well) == [(pytest.approx(-c), pytest.approx(c))]
    assert inflection_points(double_well) == pytest.approx([-c, c])
    assert is_convex(quartic)
    assert not is_convex(double_well)


def test_convexity_intervals_sign_property(random_domain_poly):
    for n in (2, 3, 4):
        p = random_domain_poly(n, scale=3.0)
        d2 = derivative(p, 2)
        intervals = convexity_intervals(p)
        for lo, hi in intervals:
            mid = (lo + hi) / 2 if math.isfinite(lo + hi) else (
                hi - 1 if math.isfinite(hi) else lo + 1 if math.isfinite(lo) else 0.0)
            assert d2(mid) >= -1e-8
        for (_, hi), (lo, _) in zip(intervals, intervals[1:]):
            assert d2((hi + lo) / 2) < 0


def test_factor_nonneg_examples():
    res = factor_nonneg(Polynomial((0, 0, 0, 0, 0.25)))
    assert res.zero_order == 4
    assert res.factors == ()
    assert res.leading == 0.25

    # xi**2 (xi - 1)**2 / 4
    res = factor_nonneg(Polynomial((0, 0, 0.25, -0.5, 0.25)))
    assert res.zero_order == 2
    ((h, k),) = res.factors
    assert h == pytest.approx(1.0, abs=1e-7)
    assert k == pytest.approx(0.0, abs=1e-12)

    # xi**2 (xi**2 + 1) / 4
    res = factor_nonneg(Polynomial((0, 0, 0.25, 0, 0.25)))
    ((h, k),) = res.factors
    assert h == pytest.approx(0.0, abs=1e-12)
    assert k == pytest.approx(1.0)


def test_factor_nonneg_reconstructs():
    p = Polynomial((0.0, 0.0, 1.0, -0.4, 0.9, 0.1, 0.3))
    res = factor_nonneg(p)
    assert res.residual <= 1e-9
    np.testing.assert_allclose(res.expand().coeffs, p.coeffs, rtol=1e-9, atol=1e-12)
    assert [h for h, _ in res.factors] == sorted(h for h, _ in res.factors)


def test_factor_nonneg_errors():
    with pytest.raises(NegativePolynomialError) as exc:
        factor_nonneg(Polynomial((0, 0, -1.0, 0, 0.25)))
    assert exc.value.value is not None and exc.value.value < 0
    assert exc.value.code == 2
    with pytest.raises(NegativePolynomialError):
        factor_nonneg(Polynomial((0, 0, 0, 1.0, 1.0)))
    with pytest.raises(DomainValidationError):
        factor_nonneg(Polynomial((1.0, 0, 1.0)))
    with pytest.raises(DomainValidationError):
        factor_nonneg(Polynomial((0.0,)))
