"""Point pairs on the closed domain: the singular set, the convergence margin and the function
``A(x, r, eta)``.

A point of the closed tube domain ``{Im z2 >= b(Re z1)}`` is written in boundary coordinates
``(x, y, t, h)``, meaning ``z = (x + iy, t + i(b(x) + h))`` with ``h >= 0``.  For a pair of points
the kernel integral converges absolutely exactly where the convergence margin

    ``h + k + b(x) + b(r) - 2 b**((x + r)/2)``

is positive.  At ``h = k = 0`` the margin vanishes exactly on the singular set: pairs with
``x = r`` and ``x`` a global minimizer of some ``B_eta``, and pairs with ``x, r`` both global
minimizers of ``B_c`` for a bitangent slope ``c``.
"""
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pydantic as pyd
from scipy import optimize

from . import conf
from .errors import DomainValidationError, InconsistentClassificationError
from .legendre import EnvelopeTable, biconjugate, legendre, signed_power, subgradient
from .polynomial import Polynomial, derivative

logger = logging.getLogger(__name__)

Coordinate = pyd.confloat(allow_inf_nan=False)
Height = pyd.confloat(ge=0, allow_inf_nan=False)


class KernelQuery(pyd.BaseModel):
    """A pair of points ``z = (x + iy, t + i(b(x) + h))`` and ``w = (r + is, u + i(b(r) + k))``
    together with the derivative orders of the kernel."""
    model_config = pyd.ConfigDict(frozen=True)

    x: Coordinate = 0.0
    y: Coordinate = 0.0
    t: Coordinate = 0.0
    h: Height = 0.0
    """Height of the first point above the boundary."""

    r: Coordinate = 0.0
    s: Coordinate = 0.0
    u: Coordinate = 0.0
    k: Height = 0.0
    """Height of the second point above the boundary."""

    i1: pyd.NonNegativeInt = 0
    """Order of differentiation in ``z1``."""
    j1: pyd.NonNegativeInt = 0
    """Order of differentiation in ``conj(w1)``."""
    i2: pyd.NonNegativeInt = 0
    """Order of differentiation in ``z2``."""
    j2: pyd.NonNegativeInt = 0
    """Order of differentiation in ``conj(w2)``."""

    @property
    def delta(self) -> float:
        """Total height ``h + k``."""
        return self.h + self.k

    @property
    def s_exp(self) -> int:
        """Power of ``eta`` in the integrand, ``i1 + j1``."""
        return self.i1 + self.j1

    @property
    def m_exp(self) -> int:
        """Total derivative order ``i1 + j1 + i2 + j2``; the integrand carries ``tau**(m+1)``."""
        return self.i1 + self.j1 + self.i2 + self.j2

    def swapped(self) -> 'KernelQuery':
        """The same query with the two points exchanged (derivative orders unchanged)."""
        return self.model_copy(update={
            'x': self.r, 'y': self.s, 't': self.u, 'h': self.k,
            'r': self.x, 's': self.y, 'u': self.t, 'k': self.h})

    def with_delta(self, delta: float) -> 'KernelQuery':
        """The same pair with ``h = delta`` and ``k = 0``."""
        return self.model_copy(update={'h': delta, 'k': 0.0})


@dataclass(frozen=True, kw_only=True)
class PairClassification:
    """Where a point pair lies relative to the singular set and the diagonal."""

    location: Literal['interior-touching', 'boundary']
    """``boundary`` if both points are on the boundary (``h = k = 0``)."""

    on_diagonal: bool
    """Whether ``(x, y, t) = (r, s, u)`` and ``h = k = 0``."""

    in_sigma: bool
    """Whether the pair lies in the singular set."""

    margin: float
    """The convergence margin."""

    branch: Literal['diagonal', 'bitangent'] | None = None
    """For pairs in the singular set: equal ``x`` over the minimizer set, or a bitangent block."""

    slope: float | None = None
    """For the ``bitangent`` branch: the bitangent slope ``c``."""


@dataclass(frozen=True, kw_only=True)
class AValue:
    """``A = A_x + A_r`` at one slope ``eta``."""
    A: float
    A_x: float
    A_r: float


def convergence_margin(b: Polynomial, env: EnvelopeTable, q: KernelQuery) -> float:
    """Return ``h + k + b(x) + b(r) - 2 b**((x + r)/2)``; nonnegative up to rounding."""
    return q.delta + b(q.x) + b(q.r) - 2.0 * biconjugate(b, env, 0.5 * (q.x + q.r))


def excess(b: Polynomial, env: EnvelopeTable, x: float) -> float:
    """``b(x) - b**(x)``: zero exactly on the closure of the range of the minimizer map."""
    return b(x) - biconjugate(b, env, x)


def in_lambda(b: Polynomial, env: EnvelopeTable, x: float, tol: float = conf.CLASS_TOL) -> bool:
    """Whether ``x`` is a global minimizer of ``B_eta`` for some ``eta``.

    Equivalent to ``x`` lying outside every open gap interval, endpoints and tied interior
    minimizers included; tested on values as ``b(x) - b**(x) <= tol/2``.
    """
    return excess(b, env, x) <= 0.5 * tol


def A_value(b: Polynomial, x: float, r: float, eta: float) -> AValue:
    """Evaluate ``A_x(eta) = b*(eta) - (eta*x - b(x))``, the same for ``r``, and their sum.

    Both parts are nonnegative by the Legendre-Fenchel inequality.
    """
    bstar = legendre(b, eta)
    a_x = bstar - (eta * x - b(x))
    a_r = bstar - (eta * r - b(r))
    return AValue(A=a_x + a_r, A_x=a_x, A_r=a_r)


def _fenchel_gap(b: Polynomial, x: float, eta: float) -> float:
    return A_value(b, x, x, eta).A_x


def _common_gap(env: EnvelopeTable, x: float, r: float):
    """The gap whose closed hull, slightly padded, contains both ``x`` and ``r``."""
    for gap in env.gaps:
        pad = 1e-6 * (1 + abs(gap.sigma) + abs(gap.lambda_))
        if all(gap.sigma - pad <= v <= gap.lambda_ + pad for v in (x, r)):
            return gap
    return None


def classify_pair(b: Polynomial, env: EnvelopeTable, q: KernelQuery,
                  tol: float = conf.CLASS_TOL) -> PairClassification:
    """Classify a point pair against the singular set and the diagonal.

    At ``h = k = 0`` the pair is in the singular set iff ``x`` and ``r`` are in the range of the
    minimizer map and ``b**`` is affine between them, i.e. all three nonnegative parts of the
    margin are below ``tol/2``.  The result is cross-checked against an independent test: the
    Fenchel gaps ``A_x(c)``, ``A_r(c)`` at the bitangent slope (off the diagonal), or ``A_x``
    at the slope of ``b**`` at ``x`` (on it).

    Raises:
        InconsistentClassificationError: if the two tests disagree by more than a factor of ten
            in tolerance, which indicates an inaccurate envelope table.
    """
    margin = convergence_margin(b, env, q)
    boundary = q.delta == 0
    location = 'boundary' if boundary else 'interior-touching'
    on_diagonal = boundary and all(abs(p1 - p2) <= tol * (1 + abs(p1)) for p1, p2 in
                                   ((q.x, q.r), (q.y, q.s), (q.t, q.u)))
    if not boundary:
        return PairClassification(location=location, on_diagonal=False, in_sigma=False,
                                  margin=margin)

    mid = 0.5 * (q.x + q.r)
    chord = biconjugate(b, env, q.x) + biconjugate(b, env, q.r) - 2 * biconjugate(b, env, mid)
    in_sigma = (in_lambda(b, env, q.x, tol) and in_lambda(b, env, q.r, tol)
                and chord <= 0.5 * tol)

    branch, slope = None, None
    diagonal = abs(q.x - q.r) <= tol * (1 + abs(q.x))
    gap = None if diagonal else _common_gap(env, q.x, q.r)
    if gap is not None:
        # both points must minimize B_c
        check = A_value(b, q.x, q.r, gap.c)
        independent = max(check.A_x, check.A_r)
    elif diagonal:
        # x must minimize B at the slope of b** there
        independent = max(_fenchel_gap(b, v, subgradient(b, env, v)) for v in (q.x, q.r))
    else:
        independent = margin
    if in_sigma:
        branch, slope = ('diagonal', None) if gap is None else ('bitangent', gap.c)
    logger.debug('pair x=%r r=%r: margin=%r independent=%r in_sigma=%s',
                 q.x, q.r, margin, independent, in_sigma)

    if ((in_sigma and independent > 10 * tol)
            or (not in_sigma and independent < 0.1 * tol and (diagonal or gap is not None))):
        raise InconsistentClassificationError(
            f'Pair (x={q.x!r}, r={q.r!r}): margin {margin!r} and minimizer test '
            f'{independent!r} disagree; the envelope table may be inaccurate.')
    return PairClassification(location=location, on_diagonal=on_diagonal, in_sigma=in_sigma,
                              margin=margin, branch=branch, slope=slope)


def vanishing_factor(b: Polynomial, x: float, eta0: float, eta: float,
                     tol: float = conf.CLASS_TOL) -> float:
    """Return ``F_x(eta) = A_x(eta) / (eta - eta0)`` for ``x`` a global minimizer of
    ``B_eta0``; bounded for ``eta`` near ``eta0``.

    Raises:
        DomainValidationError: if ``eta <= eta0`` or ``x`` does not minimize ``B_eta0``.
    """
    if eta <= eta0:
        raise DomainValidationError(f'Need eta > eta0, got eta={eta!r}, eta0={eta0!r}.')
    a0 = _fenchel_gap(b, x, eta0)
    if a0 > tol * (1 + abs(b(x))):
        raise DomainValidationError(
            f'x={x!r} is not a global minimizer at eta0={eta0!r} (A_x = {a0!r}).')
    return _fenchel_gap(b, x, eta) / (eta - eta0)


def inf_delta_plus_A(b: Polynomial, q: KernelQuery) -> tuple[float, float]:
    """Minimize ``delta + A(x, r, eta)`` over ``eta`` numerically.

    ``A`` is convex in ``eta``; a coarse grid locates the minimum, then a bounded scalar
    minimization refines it.  Used to check that the infimum equals the convergence margin.

    Returns:
        tuple[float, float]: the infimum and the minimizing ``eta``.
    """
    db = derivative(b, 1)
    span = 10.0 + 2.0 * max(abs(db(q.x)), abs(db(q.r)))

    def _fun(eta: float) -> float:
        return q.delta + A_value(b, q.x, q.r, float(eta)).A

    grid = np.linspace(-span, span, 2001)
    vals = [_fun(e) for e in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(_fun, bounds=(lo, hi), method='bounded',
                                   options={'xatol': 1e-12})
    if res.fun <= vals[i]:
        return float(res.fun), float(res.x)
    return float(vals[i]), float(grid[i])


def minimizing_slope(b: Polynomial, env: EnvelopeTable, q: KernelQuery) -> float:
    """The slope at which ``delta + A(x, r, .)`` is smallest: the derivative of ``b**`` at the
    midpoint ``(x + r)/2``."""
    return subgradient(b, env, 0.5 * (q.x + q.r))


def delta_plus_A_ratio(b: Polynomial, q: KernelQuery, eta: float) -> float:
    """Ratio of ``delta + A(x, r, eta)`` to its growth ``(2n-1)/n * eta * rho(eta)``, with
    ``rho(eta) = sign(eta) * |eta / (2n*a)|**(1/(2n-1))`` for leading coefficient ``a``.

    Tends to 1 as ``|eta| -> infinity``.
    """
    if eta == 0:
        raise DomainValidationError('The growth ratio is undefined at eta = 0.')
    two_n = b.degree
    rho = signed_power(eta / (two_n * b.leading), 1.0 / (two_n - 1))
    return (q.delta + A_value(b, q.x, q.r, eta).A) / ((two_n - 1) / (two_n / 2) * eta * rho)
