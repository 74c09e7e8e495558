"""Real polynomials in one variable: evaluation, derivatives, roots and convexity analysis.

Polynomials are stored as tuples of float coefficients in ascending degree order, so that
``coeffs[j]`` is the coefficient of ``x**j``.  The text format used on the command line and in
JSON output is the same sequence written as comma-separated numbers, e.g. ``"0,0,-1,0,0.25"``
for ``x**4/4 - x**2``.

Root finding uses the eigenvalues of the companion matrix
(:py:func:`numpy.polynomial.polynomial.polyroots`), clusters nearby eigenvalues into roots of
higher multiplicity, and polishes real roots with Newton's method.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as npoly

from .conf import CLUSTER_TOL
from .errors import DomainValidationError, NegativePolynomialError

logger = logging.getLogger(__name__)

Interval = tuple[float, float]
"""A closed or open interval ``(lo, hi)``; unbounded ends are ``-inf``/``inf``."""

FACTOR_RESIDUAL_TOL = 1e-9
"""Relative residual above which a quadratic factorization is reported as inaccurate."""

ZERO_COEFF_TOL = 1e-13
"""Low-order coefficients below ``ZERO_COEFF_TOL * max|coeff|`` count as zero when measuring the
vanishing order at the origin."""


@dataclass(frozen=True)
class Polynomial:
    """A real polynomial with coefficients in ascending degree order.

    Trailing zero coefficients are removed on construction; the zero polynomial is stored as
    ``(0.0,)``.
    """
    coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = [float(c) for c in self.coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0.0]
        object.__setattr__(self, 'coeffs', tuple(coeffs))

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient (0 for constants, including zero)."""
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        """The leading coefficient."""
        return self.coeffs[-1]

    @property
    def is_zero(self) -> bool:
        """Whether this is the zero polynomial."""
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other: 'Polynomial') -> 'Polynomial':
        return Polynomial(tuple(npoly.polyadd(self.coeffs, other.coeffs)))

    def __sub__(self, other: 'Polynomial') -> 'Polynomial':
        return Polynomial(tuple(npoly.polysub(self.coeffs, other.coeffs)))

    def __mul__(self, other: 'Polynomial') -> 'Polynomial':
        return Polynomial(tuple(npoly.polymul(self.coeffs, other.coeffs)))

    def __str__(self) -> str:
        return to_text(self)

    @staticmethod
    def linear(c0: float, c1: float) -> 'Polynomial':
        """The polynomial ``c0 + c1*x``."""
        return Polynomial((c0, c1))


@dataclass(frozen=True, kw_only=True)
class RootList:
    """Roots of a real polynomial, grouped by multiplicity."""

    real_roots: tuple[tuple[float, int], ...] = ()
    """Sorted ``(location, multiplicity)`` pairs, strictly increasing in location."""

    complex_pairs: tuple[tuple[float, float, int], ...] = ()
    """``(h, k, multiplicity)`` for each conjugate pair ``h ± ik`` with ``k > 0``."""

    @property
    def locations(self) -> list[float]:
        """Real root locations, ascending."""
        return [x for x, _ in self.real_roots]

    @property
    def count(self) -> int:
        """Number of roots counted with multiplicity, conjugate pairs counted twice."""
        return (sum(m for _, m in self.real_roots)
                + 2 * sum(m for _, _, m in self.complex_pairs))

    def odd_roots(self) -> list[float]:
        """Real roots of odd multiplicity, i.e. the sign changes of the polynomial."""
        return [x for x, m in self.real_roots if m % 2 == 1]


@dataclass(frozen=True, kw_only=True)
class QuadraticFactorization:
    """Factorization ``leading * xi**zero_order * prod_j ((xi - h_j)**2 + k_j**2)`` of a
    nonnegative polynomial vanishing at the origin."""

    leading: float
    """The (positive) leading coefficient."""

    zero_order: int
    """Even vanishing order at the origin, at least 2."""

    factors: tuple[tuple[float, float], ...] = ()
    """``(h_j, k_j)`` with ``k_j >= 0``, ordered by ``h_j`` ascending. Real double roots appear
    with ``k_j = 0``."""

    residual: float = 0.0
    """Relative reconstruction error measured at sample points."""

    def expand(self) -> Polynomial:
        """Multiply the factorization back out."""
        coeffs = np.zeros(self.zero_order + 1)
        coeffs[-1] = self.leading
        for h, k in self.factors:
            coeffs = npoly.polymul(coeffs, [h * h + k * k, -2.0 * h, 1.0])
        return Polynomial(tuple(coeffs))


def evaluate(p: Polynomial, x):
    """Evaluate ``p`` at ``x`` by Horner's scheme.

    Args:
        p (Polynomial):
            The polynomial.
        x (float | numpy.ndarray):
            A point, or an array of points.

    Returns:
        float | numpy.ndarray: The value(s) of ``p``.
    """
    if isinstance(x, np.ndarray):
        return npoly.polyval(x, p.coeffs)
    ret = 0.0
    for c in reversed(p.coeffs):
        ret = ret * x + c
    return ret


def derivative(p: Polynomial, j: int = 1) -> Polynomial:
    """Return the ``j``-th derivative of ``p``; the zero polynomial if ``j > p.degree``."""
    if j < 0:
        raise DomainValidationError(f'Derivative order must be nonnegative, got {j}.')
    if j == 0:
        return p
    if j > p.degree:
        return Polynomial((0.0,))
    return Polynomial(tuple(npoly.polyder(p.coeffs, j)))


def shift(p: Polynomial, a: float) -> Polynomial:
    """Return the Taylor shift ``xi -> p(xi + a)``, by repeated synthetic division."""
    c = list(p.coeffs)
    n = len(c)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            c[j] += a * c[j + 1]
    return Polynomial(tuple(c))


def from_text(text: str) -> Polynomial:
    """Parse a comma-separated list of ascending coefficients.

    Raises:
        DomainValidationError: on empty, non-numeric or non-finite input.
    """
    parts = [s.strip() for s in text.strip().split(',')]
    if not parts or any(s == '' for s in parts):
        raise DomainValidationError(f'Invalid polynomial text: {text!r}.')
    try:
        coeffs = [float(s) for s in parts]
    except ValueError as exc:
        raise DomainValidationError(f'Invalid polynomial text: {text!r}.') from exc
    if not all(math.isfinite(c) for c in coeffs):
        raise DomainValidationError(f'Polynomial coefficients must be finite: {text!r}.')
    return Polynomial(tuple(coeffs))


def to_text(p: Polynomial) -> str:
    """Format ``p`` as comma-separated ascending coefficients; inverse of :py:func:`from_text`."""
    return ','.join(repr(c) for c in p.coeffs)


def validate_domain(p: Polynomial) -> Polynomial:
    """Check that ``p`` can define a tube domain: even degree at least 4 and a positive leading
    coefficient.

    Returns:
        Polynomial: ``p`` itself.

    Raises:
        DomainValidationError: if the check fails.
    """
    if p.degree < 4:
        raise DomainValidationError(f'Degree must be at least 4, got {p.degree}.')
    if p.degree % 2 == 1:
        raise DomainValidationError(f'Degree must be even, got {p.degree}.')
    if p.leading <= 0:
        raise DomainValidationError(
            f'Leading coefficient must be positive, got {p.leading!r}.')
    return p


def _cluster(zs: np.ndarray, tol: float) -> list[list[complex]]:
    """Single-linkage clustering of complex numbers at distance ``tol * (1 + |z|)``."""
    clusters: list[list[complex]] = []
    for z in sorted(zs, key=lambda w: (w.real, w.imag)):
        home = None
        for cl in clusters:
            if any(abs(z - w) <= tol * (1 + abs(w)) for w in cl):
                if home is None:
                    cl.append(z)
                    home = cl
                else:
                    home.extend(cl)
                    cl.clear()
        clusters = [cl for cl in clusters if cl]
        if home is None:
            clusters.append([z])
    return clusters


def _polish(p: Polynomial, x0: float, mult: int, tol: float) -> float:
    """Newton-polish a real root of multiplicity ``mult`` on ``p**(mult-1)``, where it is simple."""
    q = derivative(p, mult - 1)
    dq = derivative(q, 1)
    best, best_val = x0, abs(q(x0))
    x = x0
    for _ in range(8):
        slope = dq(x)
        if slope == 0.0:
            break
        x = x - q(x) / slope
        if not math.isfinite(x) or abs(x - x0) > 1e3 * tol * (1 + abs(x0)):
            break
        val = abs(q(x))
        if val < best_val:
            best, best_val = x, val
        if val == 0.0:
            break
    return best


def real_roots(p: Polynomial, tol: float = CLUSTER_TOL) -> RootList:
    """Find all roots of ``p`` with multiplicities.

    Args:
        p (Polynomial):
            The polynomial.
        tol (float, optional):
            Relative clustering tolerance. Defaults to
            :py:const:`~tubekernel.conf.CLUSTER_TOL`.

    Returns:
        RootList: real roots (Newton-polished) and complex-conjugate pairs.

    Raises:
        DomainValidationError: if ``p`` is the zero polynomial.
    """
    if p.is_zero:
        raise DomainValidationError('The zero polynomial has no isolated roots.')
    if p.degree == 0:
        return RootList()

    zs = npoly.polyroots(p.coeffs)
    reals: list[tuple[float, int]] = []
    pairs: list[tuple[float, float, int]] = []
    for cl in _cluster(np.asarray(zs, dtype=complex), tol):
        centre = complex(np.mean(cl))
        if abs(centre.imag) <= tol * (1 + abs(centre)):
            reals.append((centre.real, len(cl)))
        elif centre.imag > 0:
            pairs.append((centre.real, centre.imag, len(cl)))

    polished = sorted((_polish(p, x, m, tol), m) for x, m in reals)
    merged: list[tuple[float, int]] = []
    for x, m in polished:
        if merged and abs(x - merged[-1][0]) <= tol * (1 + abs(x)):
            x0, m0 = merged[-1]
            merged[-1] = ((x0 * m0 + x * m) / (m0 + m), m0 + m)
        else:
            merged.append((x, m))

    logger.debug('roots of degree-%d polynomial: real=%s, complex=%s', p.degree, merged, pairs)
    return RootList(real_roots=tuple(merged), complex_pairs=tuple(sorted(pairs)))


def _sign_segments(p: Polynomial) -> list[tuple[float, float, int]]:
    """Split the real line at the sign changes of ``p``: ``(lo, hi, sign)`` triples."""
    if p.is_zero:
        return [(-math.inf, math.inf, 0)]
    cuts = real_roots(p).odd_roots() if p.degree > 0 else []
    sign = 1 if p.leading > 0 else -1
    segments = []
    ends = [-math.inf] + cuts + [math.inf]
    for i in range(len(ends) - 1, 0, -1):
        segments.append((ends[i - 1], ends[i], sign))
        sign = -sign
    return segments[::-1]


def convexity_intervals(p: Polynomial) -> list[Interval]:
    """Maximal closed intervals on which ``p'' >= 0``, with endpoints at the sign changes of
    ``p''``.

    Isolated zeros of ``p''`` between two concave stretches are not reported.
    """
    return [(lo, hi) for lo, hi, sign in _sign_segments(derivative(p, 2)) if sign >= 0]


def concavity_intervals(p: Polynomial) -> list[Interval]:
    """Maximal open intervals on which ``p'' < 0``; the complement of
    :py:func:`convexity_intervals`."""
    return [(lo, hi) for lo, hi, sign in _sign_segments(derivative(p, 2)) if sign < 0]


def inflection_points(p: Polynomial) -> list[float]:
    """Points where ``p''`` changes sign."""
    q = derivative(p, 2)
    if q.is_zero or q.degree == 0:
        return []
    return real_roots(q).odd_roots()


def is_convex(p: Polynomial) -> bool:
    """Whether ``p`` is convex on the whole real line."""
    return not concavity_intervals(p)


def _negative_witness(p: Polynomial, centre: float, scale: float) -> tuple[float, float] | None:
    """Look for a point near ``centre`` where ``p`` is negative."""
    for k in range(1, 10):
        for x in (centre - scale * 10.0**-k, centre + scale * 10.0**-k):
            val = p(x)
            if val < 0:
                return x, val
    return None


def factor_nonneg(p: Polynomial, tol: float = CLUSTER_TOL) -> QuadraticFactorization:
    """Factor a nonnegative polynomial with an even-order zero at the origin into quadratics.

    Args:
        p (Polynomial):
            A polynomial with ``p >= 0`` on the real line and ``p(0) = 0``.
        tol (float, optional):
            Root clustering tolerance.

    Returns:
        QuadraticFactorization: the factorization, with factors sorted by ``h``.

    Raises:
        DomainValidationError: if ``p`` is zero or does not vanish at the origin.
        NegativePolynomialError: if ``p`` is detectably negative somewhere (a witness point is
            attached), or vanishes to odd order at the origin.
    """
    if p.is_zero:
        raise DomainValidationError('Cannot factor the zero polynomial.')
    if p.leading < 0 or p.degree % 2 == 1:
        x = (1.0 + sum(abs(c) for c in p.coeffs) / abs(p.leading)) * (-1 if p.leading > 0 else 1)
        raise NegativePolynomialError('Polynomial is negative for large |x|.', x, p(x))

    scale = max(abs(c) for c in p.coeffs)
    order = 0
    while order < p.degree and abs(p.coeffs[order]) <= ZERO_COEFF_TOL * scale:
        order += 1
    if order == 0:
        raise DomainValidationError('Polynomial must vanish at the origin.')
    if order % 2 == 1:
        wit = _negative_witness(p, 0.0, 1.0)
        raise NegativePolynomialError(f'Odd vanishing order {order} at the origin.',
                                      *(wit or (None, None)))

    reduced = Polynomial(p.coeffs[order:])
    roots = real_roots(reduced, tol) if reduced.degree > 0 else RootList()
    factors: list[tuple[float, float]] = []
    for x, m in roots.real_roots:
        if m % 2 == 1:
            wit = _negative_witness(p, x, 1 + abs(x))
            raise NegativePolynomialError(f'Real root {x!r} of odd multiplicity {m}.',
                                          *(wit or (x, p(x))))
        factors.extend([(x, 0.0)] * (m // 2))
    for h, k, m in roots.complex_pairs:
        factors.extend([(h, k)] * m)
    factors.sort()

    ret = QuadraticFactorization(leading=p.leading, zero_order=order, factors=tuple(factors))
    radius = 1 + max([abs(h) + k for h, k in factors], default=0.0)
    xs = np.linspace(-radius, radius, 2 * p.degree)
    expected = p(xs)
    residual = float(np.max(np.abs(ret.expand()(xs) - expected))
                     / max(float(np.max(np.abs(expected))), np.finfo(float).tiny))
    if residual > FACTOR_RESIDUAL_TOL:
        logger.warning('quadratic factorization residual %.3g exceeds %.1g',
                       residual, FACTOR_RESIDUAL_TOL)
    return QuadraticFactorization(leading=p.leading, zero_order=order,
                                  factors=tuple(factors), residual=residual)
