"""Laplace-type integrals ``I(eta, tau) = int exp(-2 tau p_eta(xi)) dxi`` and
``N(eta, tau) = exp(2 tau b*(eta)) I(eta, tau)``, with their analytic comparators.

``p_eta(xi) = b(xi + lambda(eta)) - b(lambda(eta)) - eta*xi`` is ``B_eta`` recentred at its
largest global minimizer: it is nonnegative, vanishes to even order at the origin, and any other
real zero is negative.

The integrals are computed by adaptive Gauss-Kronrod quadrature
(:py:func:`scipy.integrate.quad`, or :py:func:`scipy.integrate.quad_vec` for many ``tau`` at
once) on a finite window ``[-L, R]`` outside of which ``2 tau p_eta >= 700`` and ``p_eta`` is
monotone and convex, so the discarded tails are bounded by
``exp(-2 tau p_eta(R)) / (2 tau |p_eta'(R)|)``.  Breakpoints are placed at every critical point
of ``p_eta``.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from . import conf
from .errors import DomainValidationError, NonConvergenceError
from .legendre import minimizer_set
from .polynomial import Polynomial, derivative, real_roots, shift

logger = logging.getLogger(__name__)

CHUNK_SIZE = 32
"""Number of ``tau`` values integrated together by :py:func:`laplace_integrals`."""


@dataclass(frozen=True, kw_only=True)
class ShiftedPolynomial:
    """The polynomial ``p_eta``, recentred at ``lambda(eta)``."""

    p: Polynomial
    """Coefficients in ``xi``; constant and linear terms are exactly zero."""

    eta: float
    """The slope."""

    lambda_eta: float
    """The shift point ``lambda(eta)``."""

    legendre: float
    """``b*(eta)``, computed along with the shift."""

    @cached_property
    def critical_points(self) -> list[float]:
        """Real roots of ``p_eta'``, ascending."""
        return real_roots(derivative(self.p, 1)).locations

    @cached_property
    def anchors(self) -> tuple[float, float]:
        """Leftmost and rightmost of 0, the critical points and the inflection points; beyond
        them ``p_eta`` is monotone and convex."""
        d2 = derivative(self.p, 2)
        pts = [0.0] + self.critical_points
        if d2.degree > 0:
            pts += real_roots(d2).locations
        return min(pts), max(pts)

    def tail_bound(self, xi: float, tau: float) -> float:
        """Bound on ``int exp(-2 tau p)`` beyond ``xi`` (outside the anchors)."""
        slope = abs(derivative(self.p, 1)(xi))
        if slope == 0.0:
            return math.inf
        return math.exp(-2.0 * tau * self.p(xi)) / (2.0 * tau * slope)


@dataclass(frozen=True, kw_only=True)
class QuadratureResult:
    """The result of one Laplace-type integral."""

    value: float
    """The integral, nonnegative."""

    abs_error_estimate: float
    """Quadrature error estimate plus the truncated tails."""

    truncation_radius: float
    """Largest ``|xi|`` of the integration window."""

    panels: int
    """Number of adaptive subintervals used."""

    converged: bool
    """Whether ``abs_error_estimate <= tol * (1 + value)``."""


@dataclass(frozen=True, kw_only=True)
class NValue:
    """``log N(eta, tau) = 2 tau b*(eta) + log I(eta, tau)``."""
    log_N: float
    I: QuadratureResult
    legendre: float


@dataclass(frozen=True, kw_only=True)
class UpperBoundCheck:
    """Empirical check of ``I <= c (1 + sqrt(tau)) / sqrt(tau)`` on a window of slopes."""

    fitted_c: float
    """Constant fitted at ``tau_ref``."""

    holds: bool
    """Whether the bound, with slack, holds at every grid point."""

    tau_ref: float
    max_ratio: float
    """Largest ``I sqrt(tau) / (1 + sqrt(tau))`` on the grid."""

    tail_product: float
    """Largest ``I sqrt(tau)`` at the largest ``tau``; stays bounded as ``tau`` grows."""

    etas: list[float] = field(default_factory=list)
    taus: list[float] = field(default_factory=list)


def shift_poly(b: Polynomial, eta: float) -> ShiftedPolynomial:
    """Recentre ``B_eta`` at ``lambda(eta)``: ``p_eta(xi) = b(xi + lambda) - b(lambda) - eta*xi``.

    The constant and linear terms are set to exactly zero.
    """
    ms = minimizer_set(b, eta)
    coeffs = list(shift(b, ms.lambda_).coeffs)
    coeffs[0] = 0.0
    coeffs[1] = 0.0
    return ShiftedPolynomial(p=Polynomial(tuple(coeffs)), eta=eta, lambda_eta=ms.lambda_,
                             legendre=ms.legendre)


def _radius(sp: ShiftedPolynomial, tau: float, direction: int) -> float:
    """Distance from 0 in ``direction`` beyond which ``2 tau p >= UNDERFLOW_EXPONENT``."""
    anchor = sp.anchors[1] if direction > 0 else -sp.anchors[0]
    step = 1.0 + anchor
    rad = anchor + step
    for _ in range(200):
        if 2.0 * tau * sp.p(direction * rad) >= conf.UNDERFLOW_EXPONENT:
            break
        step *= 2.0
        rad = anchor + step
    return rad


def truncation(sp: ShiftedPolynomial, tau: float) -> tuple[float, float]:
    """Integration window ``(-L, R)`` for ``tau``."""
    return -_radius(sp, tau, -1), _radius(sp, tau, 1)


def _breakpoints(sp: ShiftedPolynomial, lo: float, hi: float) -> list[float]:
    return sorted({x for x in [0.0] + sp.critical_points if lo < x < hi})


def laplace_integral(sp: ShiftedPolynomial, tau: float, tol: float = conf.QUAD_TOL,
                     panels: int = conf.PANEL_BUDGET) -> QuadratureResult:
    """Compute ``I = int exp(-2 tau p_eta(xi)) dxi``.

    Args:
        sp (ShiftedPolynomial):
            The recentred polynomial.
        tau (float):
            Positive parameter.
        tol (float, optional):
            Requested accuracy, relative to ``1 + I``.
        panels (int, optional):
            Budget of adaptive subintervals.

    Returns:
        QuadratureResult: the integral; ``converged`` is false if the budget ran out, in which
        case the best estimate is returned.

    Raises:
        DomainValidationError: if ``tau <= 0``.
    """
    if not tau > 0:
        raise DomainValidationError(f'tau must be positive, got {tau!r}.')
    lo, hi = truncation(sp, tau)
    p = sp.p

    def _integrand(xi: float) -> float:
        return math.exp(-2.0 * tau * p(xi))

    res = integrate.quad(_integrand, lo, hi, points=_breakpoints(sp, lo, hi) or None,
                         epsabs=0.5 * tol, epsrel=0.5 * tol, limit=panels, full_output=1)
    value, err, info = res[0], res[1], res[2]
    err += sp.tail_bound(lo, tau) + sp.tail_bound(hi, tau)
    converged = len(res) == 3 and err <= tol * (1 + value)
    if not converged:
        logger.warning('I(eta=%r, tau=%r) not converged: %s', sp.eta, tau,
                       res[3] if len(res) > 3 else f'error {err:.3g}')
    return QuadratureResult(value=max(value, 0.0), abs_error_estimate=err,
                            truncation_radius=max(-lo, hi), panels=int(info['last']),
                            converged=converged)


def _bnw_scale(sp: ShiftedPolynomial, taus: np.ndarray) -> np.ndarray:
    """``sum_j (2 tau |beta_j|)**(1/j)``, the reciprocal of the expected size of ``I``."""
    ret = np.zeros_like(taus)
    for j, beta in enumerate(sp.p.coeffs):
        if j >= 2 and beta != 0.0:
            ret += (2.0 * taus * abs(beta)) ** (1.0 / j)
    return ret


def laplace_integrals(sp: ShiftedPolynomial, taus, tol: float = conf.QUAD_TOL,
                      panels: int = conf.PANEL_BUDGET) -> list[QuadratureResult]:
    """Compute ``I(eta, tau)`` for many ``tau`` at once with vector-valued adaptive quadrature.

    Each component is scaled by the reciprocal of its expected size, so that ``tol`` acts as a
    relative tolerance on every component.

    Returns:
        list[QuadratureResult]: one result per entry of ``taus``, in the same order.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(~(taus > 0)):
        raise DomainValidationError('All tau must be positive.')
    order = np.argsort(taus)
    out: list[QuadratureResult | None] = [None] * len(taus)
    coeffs = sp.p.coeffs

    for start in range(0, len(order), CHUNK_SIZE):
        idx = order[start:start + CHUNK_SIZE]
        chunk = taus[idx]
        lo, hi = truncation(sp, float(chunk[0]))
        scale = _bnw_scale(sp, chunk)

        def _integrand(xi: float, chunk=chunk, scale=scale) -> np.ndarray:
            val = 0.0
            for c in reversed(coeffs):
                val = val * xi + c
            return np.exp(-2.0 * chunk * val) * scale

        res, err, info = integrate.quad_vec(
            _integrand, lo, hi, epsabs=0.5 * tol, epsrel=0.5 * tol, norm='max',
            points=_breakpoints(sp, lo, hi) or None, limit=panels, full_output=True)
        for i, tau, val, sc in zip(idx, chunk, res, scale):
            value = float(val / sc)
            e = float(err / sc) + sp.tail_bound(lo, tau) + sp.tail_bound(hi, tau)
            out[i] = QuadratureResult(
                value=max(value, 0.0), abs_error_estimate=e, truncation_radius=max(-lo, hi),
                panels=int(info.intervals.shape[0]),
                converged=bool(info.success) and e <= tol * (1 + value))
        if not info.success:
            logger.warning('vector quadrature for eta=%r, tau in [%r, %r] hit its budget',
                           sp.eta, chunk[0], chunk[-1])
    return out


def N_value(b: Polynomial, eta: float, tau: float, tol: float = conf.QUAD_TOL,
            panels: int = conf.PANEL_BUDGET) -> NValue:
    """Compute ``log N(eta, tau)`` through ``N = exp(2 tau b*(eta)) I(eta, tau)``."""
    if not tau > 0:
        raise DomainValidationError(f'tau must be positive, got {tau!r}.')
    sp = shift_poly(b, eta)
    res = laplace_integral(sp, tau, tol, panels)
    log_i = math.log(res.value) if res.value > 0 else -math.inf
    return NValue(log_N=2.0 * tau * sp.legendre + log_i, I=res, legendre=sp.legendre)


def bnw_estimate(beta) -> float:
    """The convex-case size estimate ``[sum_j |beta_j|**(1/j)]**-1`` for
    ``int_0^inf exp(-p)`` with ``p(xi) = sum_{j>=2} beta_j xi**j``.

    Args:
        beta (Sequence[float]):
            Coefficients ``beta_2, beta_3, ..., beta_2n`` (``beta[0]`` multiplies ``xi**2``).

    Raises:
        DomainValidationError: if all coefficients vanish.
    """
    total = sum(abs(bj) ** (1.0 / j) for j, bj in enumerate(beta, start=2) if bj != 0)
    if total == 0:
        raise DomainValidationError('At least one coefficient must be nonzero.')
    return 1.0 / total


def lower_bound_I(b: Polynomial, eta: float, tau: float) -> float:
    """The comparator ``[sum_{j=2}^{2n} tau**(1/j) |b^(j)(lambda(eta))|**(1/j)]**-1``.

    Bounds ``I(eta, tau)`` from below up to a constant depending only on the degree.
    """
    if not tau > 0:
        raise DomainValidationError(f'tau must be positive, got {tau!r}.')
    lam = minimizer_set(b, eta).lambda_
    total = sum((tau * abs(derivative(b, j)(lam))) ** (1.0 / j)
                for j in range(2, b.degree + 1))
    return 1.0 / total


def upper_bound_check(b: Polynomial, eta0: float, eps: float, taus,
                      tol: float = conf.QUAD_TOL, grid: int = 9) -> UpperBoundCheck:
    """Check the local bound ``I(eta, tau) <= c (1 + sqrt(tau)) / sqrt(tau)`` for
    ``eta`` in ``(eta0, eta0 + eps)``.

    The constant is fitted at the ``tau`` where the ratio ``I sqrt(tau) / (1 + sqrt(tau))`` is
    largest, using every other slope of the grid; the bound is then tested at every grid point
    with :py:const:`~tubekernel.conf.UPPER_BOUND_SLACK`.

    Raises:
        DomainValidationError: if ``eps <= 0`` or ``taus`` is empty.
        NonConvergenceError: if any quadrature fails to converge.
    """
    taus = np.sort(np.asarray(taus, dtype=float))
    if not eps > 0:
        raise DomainValidationError(f'eps must be positive, got {eps!r}.')
    if taus.size == 0:
        raise DomainValidationError('tau_set must be nonempty.')
    etas = eta0 + eps * np.arange(1, grid + 1) / (grid + 1)

    ratios = np.empty((grid, taus.size))
    tails = []
    for i, eta in enumerate(etas):
        results = laplace_integrals(shift_poly(b, float(eta)), taus, tol)
        if not all(r.converged for r in results):
            raise NonConvergenceError(f'Quadrature of I failed at eta={eta!r}.')
        values = np.array([r.value for r in results])
        ratios[i] = values * np.sqrt(taus) / (1 + np.sqrt(taus))
        tails.append(values[-1] * math.sqrt(taus[-1]))

    j_ref = int(np.argmax(ratios.max(axis=0)))
    fitted_c = float(ratios[::2, j_ref].max())
    holds = bool(np.all(ratios <= conf.UPPER_BOUND_SLACK * fitted_c))
    return UpperBoundCheck(fitted_c=fitted_c, holds=holds, tau_ref=float(taus[j_ref]),
                           max_ratio=float(ratios.max()), tail_product=float(max(tails)),
                           etas=etas.tolist(), taus=taus.tolist())
