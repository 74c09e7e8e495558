"""Shared fixtures: the standard test polynomials and a seeded random generator."""
import math

import numpy as np
import pytest

from tubekernel.legendre import gap_intervals
from tubekernel.polynomial import Polynomial

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def quartic() -> Polynomial:
    """``x**4/4``, convex."""
    return Polynomial((0.0, 0.0, 0.0, 0.0, 0.25))


@pytest.fixture
def double_well() -> Polynomial:
    """``x**4/4 - x**2``, one bitangent at slope 0 touching at ``-sqrt(2)`` and ``sqrt(2)``."""
    return Polynomial((0.0, 0.0, -1.0, 0.0, 0.25))


@pytest.fixture
def double_well_env(double_well):
    return gap_intervals(double_well)


@pytest.fixture
def sextic_well() -> Polynomial:
    """``x**6/6 - x**2``."""
    return Polynomial((0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0 / 6.0))


@pytest.fixture
def cubic_tilt() -> Polynomial:
    """``x**4/4 + x**3``, nonconvex with an asymmetric bitangent."""
    return Polynomial((0.0, 0.0, 0.0, 1.0, 0.25))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20231101)


@pytest.fixture
def random_domain_poly(rng):
    """Factory for random domain-defining polynomials of degree ``2n``: normal-form leading
    coefficient ``1/(2n)`` and uniform lower coefficients in ``[-scale, scale]``."""
    def _make(n: int, scale: float = 1.0) -> Polynomial:
        coeffs = list(rng.uniform(-scale, scale, 2 * n)) + [1.0 / (2 * n)]
        return Polynomial(tuple(coeffs))
    return _make
