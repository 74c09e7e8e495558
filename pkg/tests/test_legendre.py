import math

import numpy as np
import pytest

from tubekernel.errors import DomainValidationError
from tubekernel.legendre import (EnvelopeTable, GapRecord, asymptotic_ratios, biconjugate,
                                 gap_intervals, legendre, minimizer_set, signed_power,
                                 subgradient)
from tubekernel.polynomial import Polynomial, derivative
from tubekernel.util import jsonable

SQRT2 = math.sqrt(2.0)


def _brute_legendre(b: Polynomial, eta: float, radius: float) -> float:
    """``sup_x [eta x - b(x)]`` on a grid, refined by Newton steps on ``b' = eta``."""
    xs = np.linspace(-radius, radius, 200001)
    x = float(xs[np.argmax(eta * xs - b(xs))])
    db, d2b = derivative(b, 1), derivative(b, 2)
    for _ in range(20):
        curv = d2b(x)
        if curv <= 0:
            break
        step = (db(x) - eta) / curv
        x -= step
        if abs(step) < 1e-15 * (1 + abs(x)):
            break
    return eta * x - b(x)


def test_minimizer_set_examples(quartic, double_well):
    ms = minimizer_set(quartic, 1.0)
    assert ms.minimizers == pytest.approx((1.0,))
    assert ms.min_value == pytest.approx(-0.75)

    ms = minimizer_set(double_well, 0.0)
    assert ms.minimizers == pytest.approx((-SQRT2, SQRT2))
    assert ms.sigma == pytest.approx(-SQRT2)
    assert ms.lambda_ == pytest.approx(SQRT2)
    assert ms.min_value == pytest.approx(-1.0)
    assert ms.is_tied

    ms = minimizer_set(double_well, 10.0)
    assert ms.minimizers == pytest.approx((2.3089,), abs=1e-4)
    assert not ms.is_tied


def test_legendre_examples(quartic, double_well, cubic_tilt):
    assert legendre(quartic, 1.0) == pytest.approx(0.75)
    assert legendre(quartic, 8.0) == pytest.approx(0.75 * 8.0 ** (4 / 3))
    assert legendre(double_well, 0.0) == pytest.approx(1.0)
    x0 = 2.0
    eta = derivative(cubic_tilt, 1)(x0)
    assert legendre(cubic_tilt, eta) == pytest.approx(eta * x0 - cubic_tilt(x0))


def test_legendre_matches_brute_force(random_domain_poly, rng):
    for _ in range(10):
        n = int(rng.integers(2, 4))
        b = random_domain_poly(n)
        for eta in rng.uniform(-100, 100, 100):
            radius = 2 + (2 * n * abs(eta)) ** (1 / (2 * n - 1)) * 2
            expected = _brute_legendre(b, float(eta), radius)
            assert legendre(b, float(eta)) == pytest.approx(expected, rel=1e-6, abs=1e-9)


def test_lambda_is_increasing_inverse_of_derivative(double_well):
    db = derivative(double_well, 1)
    etas = np.sort(np.random.default_rng(1).uniform(-20, 20, 1000))
    lams = [minimizer_set(double_well, float(e)).lambda_ for e in etas]
    assert all(l1 < l2 for l1, l2 in zip(lams, lams[1:]))
    for eta, lam in zip(etas, lams):
        assert db(lam) == pytest.approx(eta, abs=1e-8 * (1 + abs(eta)))


def test_legendre_is_convex(cubic_tilt, rng):
    for _ in range(1000):
        e1, e2, e3 = np.sort(rng.uniform(-50, 50, 3))
        if e3 - e1 < 1e-6:
            continue
        t = (e2 - e1) / (e3 - e1)
        chord = (1 - t) * legendre(cubic_tilt, e1) + t * legendre(cubic_tilt, e3)
        assert legendre(cubic_tilt, e2) <= chord + 1e-9 * (1 + abs(chord))


def test_gap_intervals_convex(quartic):
    assert gap_intervals(quartic).gaps == []


def test_gap_intervals_double_well(double_well):
    env = gap_intervals(double_well)
    (gap,) = env.gaps
    assert gap.c == pytest.approx(0.0, abs=1e-8)
    assert gap.sigma == pytest.approx(-SQRT2, abs=1e-6)
    assert gap.lambda_ == pytest.approx(SQRT2, abs=1e-6)
    assert gap.bridge_value == pytest.approx(-1.0)
    assert not gap.degraded


def test_gap_intervals_sextic(sextic_well):
    (gap,) = gap_intervals(sextic_well).gaps
    assert gap.c == pytest.approx(0.0, abs=1e-8)
    assert gap.sigma == pytest.approx(-2 ** 0.25, abs=1e-6)
    assert gap.lambda_ == pytest.approx(2 ** 0.25, abs=1e-6)


def test_gap_intervals_bitangency(cubic_tilt):
    (gap,) = gap_intervals(cubic_tilt).gaps
    db = derivative(cubic_tilt, 1)
    assert db(gap.sigma) == pytest.approx(gap.c, abs=1e-8)
    assert db(gap.lambda_) == pytest.approx(gap.c, abs=1e-8)
    chord = (cubic_tilt(gap.lambda_) - cubic_tilt(gap.sigma)) / (gap.lambda_ - gap.sigma)
    assert chord == pytest.approx(gap.c, abs=1e-8)
    # the largest minimizer at the bitangent slope is the right tangency point
    assert minimizer_set(cubic_tilt, gap.c).lambda_ == pytest.approx(gap.lambda_, abs=1e-6)


def test_structure_of_lambda_range(double_well):
    """``lambda(eta)`` never falls in ``[-sqrt(2), sqrt(2))``."""
    for eta in np.linspace(-100, 100, 10000):
        lam = minimizer_set(double_well, float(eta)).lambda_
        assert not -SQRT2 + 1e-8 <= lam < SQRT2 - 1e-8


def test_gap_count_bound(random_domain_poly, rng):
    for _ in range(50):
        n = int(rng.integers(2, 5))
        b = random_domain_poly(n, scale=5.0)
        env = gap_intervals(b)
        assert len(env.gaps) <= n - 1
        for g1, g2 in zip(env.gaps, env.gaps[1:]):
            assert g1.c < g2.c
            assert g1.lambda_ <= g2.sigma + 1e-9


def test_biconjugate_examples(quartic, double_well, double_well_env):
    assert biconjugate(double_well, double_well_env, 0.0) == pytest.approx(-1.0)
    assert biconjugate(double_well, double_well_env, 2.0) == pytest.approx(double_well(2.0))
    for u in (-3.0, 0.3, 5.0):
        assert biconjugate(quartic, EnvelopeTable(), u) == quartic(u)


def test_biconjugate_properties(cubic_tilt, rng):
    env = gap_intervals(cubic_tilt)
    (gap,) = env.gaps
    us = rng.uniform(-8, 4, 10000)
    for u in us:
        bss = biconjugate(cubic_tilt, env, u)
        assert bss <= cubic_tilt(u) + 1e-10 * (1 + abs(cubic_tilt(u)))
        if not gap.sigma < u < gap.lambda_:
            assert bss == pytest.approx(cubic_tilt(u), rel=1e-10, abs=1e-10)
    for _ in range(1000):
        u1, u2, u3 = np.sort(rng.uniform(-8, 4, 3))
        if u3 - u1 < 1e-6:
            continue
        t = (u2 - u1) / (u3 - u1)
        chord = (1 - t) * biconjugate(cubic_tilt, env, u1) + t * biconjugate(cubic_tilt, env, u3)
        assert biconjugate(cubic_tilt, env, u2) <= chord + 1e-9 * (1 + abs(chord))


def test_biconjugate_matches_double_conjugate(double_well, double_well_env):
    etas = np.linspace(-50, 50, 20001)
    bstar = np.array([legendre(double_well, float(e)) for e in etas])
    for u in np.linspace(-2.5, 2.5, 100):
        direct = float(np.max(etas * u - bstar))
        assert biconjugate(double_well, double_well_env, float(u)) == pytest.approx(direct,
                                                                                   abs=1e-5)


def test_fenchel_identity_on_lambda_graph(cubic_tilt):
    env = gap_intervals(cubic_tilt)
    for eta in np.linspace(-30, 30, 61):
        ms = minimizer_set(cubic_tilt, float(eta))
        u = ms.lambda_
        assert cubic_tilt(u) == pytest.approx(biconjugate(cubic_tilt, env, u), abs=1e-9)
        assert ms.legendre + cubic_tilt(u) == pytest.approx(eta * u, abs=1e-9 * (1 + abs(eta)))


def test_subgradient_is_continuous(double_well, double_well_env):
    for end in (-SQRT2, SQRT2):
        for side in (-1e-7, 1e-7):
            assert subgradient(double_well, double_well_env, end + side) == pytest.approx(
                0.0, abs=1e-6)
    assert subgradient(double_well, double_well_env, 3.0) == pytest.approx(21.0)


def test_envelope_json_round_trip(cubic_tilt):
    env = gap_intervals(cubic_tilt)
    data = jsonable(env)
    assert set(data['gaps'][0]) == {'c', 'sigma', 'lambda', 'bridge_value', 'degraded'}
    assert EnvelopeTable.from_dict(data) == env


def test_envelope_from_dict_casts_ints():
    env = EnvelopeTable.from_dict({'gaps': [{'c': 0, 'sigma': -1, 'lambda': 1,
                                             'bridge_value': 2}]})
    assert env.gaps == [GapRecord(c=0.0, sigma=-1.0, lambda_=1.0, bridge_value=2.0)]


def test_signed_power():
    assert signed_power(-8.0, 1 / 3) == pytest.approx(-2.0)
    assert signed_power(27.0, 1 / 3) == pytest.approx(3.0)


def test_asymptotic_ratios_quartic(quartic):
    res = asymptotic_ratios(quartic, 125.0)
    assert res.lambda_ratio == pytest.approx(1.0, abs=1e-12)
    assert res.simple


@pytest.mark.parametrize('fixture', ['cubic_tilt', 'sextic_well'])
@pytest.mark.parametrize('eta,slack', [(1e6, 0.02), (-1e6, 0.02), (1e9, 0.002), (-1e9, 0.002)])
def test_asymptotic_ratios(fixture, eta, slack, request):
    b = request.getfixturevalue(fixture)
    res = asymptotic_ratios(b, eta)
    assert res.n == b.degree // 2
    assert res.lambda_ratio == pytest.approx(1.0, abs=slack)
    assert res.legendre_ratio == pytest.approx(1.0, abs=slack)
    assert sorted(res.derivative_ratios) == list(range(2, b.degree + 1))
    for ratio in res.derivative_ratios.values():
        assert ratio == pytest.approx(1.0, abs=slack)


def test_asymptotic_ratios_rejects_zero(quartic):
    with pytest.raises(DomainValidationError):
        asymptotic_ratios(quartic, 0.0)
