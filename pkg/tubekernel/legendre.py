"""Global minimization of the tilted family ``B_eta(x) = b(x) - eta*x``.

This module computes, for a domain polynomial ``b``:

- the set of global minimizers of ``B_eta``, with its smallest element ``sigma(eta)`` and
  largest element ``lambda(eta)``;
- the Legendre transform ``b*(eta) = -min B_eta``;
- the finitely many bitangent slopes ``c`` at which ``B_c`` has several global minimizers,
  together with the gap intervals ``[sigma(c), lambda(c))`` skipped by ``lambda``
  (the :py:class:`EnvelopeTable`);
- the convex envelope (biconjugate) ``b**``, which coincides with ``b`` off the gaps and with the
  bitangent line on each gap;
- large-``|eta|`` asymptotic ratios.

The minimizer map ``lambda`` is increasing and injective, so the gaps are found by scanning
``lambda`` for jumps over a window of slopes derived from the concavity intervals of ``b``, then
bisecting each jump and polishing the bitangent with a two-unknown Newton-type solve.
"""
import logging
import math
from dataclasses import dataclass, field

import dacite
import numpy as np
from scipy import optimize

from . import conf
from .errors import DomainValidationError
from .polynomial import Polynomial, concavity_intervals, derivative, real_roots

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-4
"""Candidate minimizers closer than ``MERGE_TOL * (1 + |x|)`` are the same point."""


@dataclass(frozen=True, kw_only=True)
class MinimizerSet:
    """The global minimizers of ``B_eta`` for one slope ``eta``."""

    eta: float
    """The slope."""

    minimizers: tuple[float, ...]
    """All global minimizers, ascending."""

    sigma: float
    """Smallest global minimizer."""

    lambda_: float
    """Largest global minimizer."""

    min_value: float
    """The minimum value ``B_eta(lambda(eta)) = -b*(eta)``."""

    @property
    def legendre(self) -> float:
        """The Legendre transform ``b*(eta)``."""
        return -self.min_value

    @property
    def is_tied(self) -> bool:
        """Whether there is more than one global minimizer."""
        return len(self.minimizers) > 1


@dataclass(frozen=True, kw_only=True)
class GapRecord:
    """One bitangent slope ``c`` and its gap interval ``[sigma(c), lambda(c))``."""

    c: float
    """The bitangent slope."""

    sigma: float
    """Left tangency point."""

    lambda_: float
    """Right tangency point."""

    bridge_value: float
    """``b(sigma)``; the bridge is ``u -> bridge_value + c*(u - sigma)``."""

    degraded: bool = False
    """True if bitangent polishing failed and the bisection bracket is reported instead."""

    def bridge(self, u: float) -> float:
        """Value of the bitangent line at ``u``."""
        return self.bridge_value + self.c * (u - self.sigma)

    def covers(self, u: float) -> bool:
        """Whether ``u`` lies in the closed hull ``[sigma, lambda]``."""
        return self.sigma <= u <= self.lambda_


@dataclass(kw_only=True)
class EnvelopeTable:
    """The bitangent slopes of ``b`` with their gap intervals, sorted by slope.

    Empty exactly when ``b`` is convex.
    """

    gaps: list[GapRecord] = field(default_factory=list)

    def gap_covering(self, u: float) -> GapRecord | None:
        """The gap whose closed hull contains ``u``, if any."""
        for gap in self.gaps:
            if gap.covers(u):
                return gap
        return None

    @staticmethod
    def from_dict(data: dict) -> 'EnvelopeTable':
        """Load a table from its JSON form, e.g. as written by the ``envelope`` command."""
        gaps = [{('lambda_' if k == 'lambda' else k): v for k, v in gap.items()}
                for gap in data.get('gaps', [])]
        return dacite.from_dict(EnvelopeTable, {'gaps': gaps},
                                config=dacite.Config(cast=[float, bool]))


@dataclass(frozen=True, kw_only=True)
class AsymptoticRatios:
    """Ratios of ``lambda(eta)``, ``b*(eta)`` and ``b^(j)(lambda(eta))`` to their leading-order
    growth as ``|eta| -> infinity``; all tend to 1."""
    eta: float
    n: int
    lambda_ratio: float
    legendre_ratio: float
    derivative_ratios: dict[int, float]
    """Keyed by derivative order ``j = 2..2n``."""
    simple: bool
    """Whether ``lambda(eta)`` is the unique minimizer and ``b''(lambda(eta)) > 0``."""


def signed_power(x: float, p: float) -> float:
    """Real-signed power ``sign(x) * |x|**p``."""
    return math.copysign(abs(x) ** p, x)


def _tilted_derivative(b: Polynomial, eta: float) -> Polynomial:
    """``b'(x) - eta``."""
    return derivative(b, 1) - Polynomial((eta,))


def minimizer_set(b: Polynomial, eta: float, tie_tol: float = conf.TIE_TOL) -> MinimizerSet:
    """Find all global minimizers of ``B_eta(x) = b(x) - eta*x``.

    Candidates are the real critical points of ``B_eta``; values within
    ``tie_tol * (1 + |min|)`` of the minimum count as tied.

    Args:
        b (Polynomial):
            A valid domain polynomial.
        eta (float):
            The slope.
        tie_tol (float, optional):
            Relative tie tolerance on values.

    Returns:
        MinimizerSet: the minimizers and the minimum value.
    """
    roots = real_roots(_tilted_derivative(b, eta))
    candidates = roots.locations + [
        h for h, k, _ in roots.complex_pairs if k <= MERGE_TOL * (1 + abs(h))]
    values = [(b(x) - eta * x, x) for x in candidates]
    vmin = min(v for v, _ in values)
    tied = sorted((x, v) for v, x in values if v - vmin <= tie_tol * (1 + abs(vmin)))

    merged: list[tuple[float, float]] = []
    for x, v in tied:
        if merged and abs(x - merged[-1][0]) <= MERGE_TOL * (1 + abs(x)):
            if v < merged[-1][1]:
                merged[-1] = (x, v)
        else:
            merged.append((x, v))

    lam = merged[-1][0]
    return MinimizerSet(eta=eta, minimizers=tuple(x for x, _ in merged),
                        sigma=merged[0][0], lambda_=lam, min_value=b(lam) - eta * lam)


def legendre(b: Polynomial, eta: float) -> float:
    """The Legendre transform ``b*(eta) = sup_x [eta*x - b(x)]``."""
    return minimizer_set(b, eta).legendre


def _lambda(b: Polynomial, eta: float) -> float:
    return minimizer_set(b, eta).lambda_


def _overlaps(lo: float, hi: float, intervals: list[tuple[float, float]]) -> bool:
    """Whether the open interval ``(lo, hi)`` meets one of the open ``intervals``."""
    return any(max(lo, a) < min(hi, b) for a, b in intervals)


def _bitangent(b: Polynomial, s0: float, l0: float) -> tuple[float, float] | None:
    """Solve ``b'(s) = b'(l) = (b(l) - b(s)) / (l - s)`` starting from ``(s0, l0)``."""
    db = derivative(b, 1)
    d2b = derivative(b, 2)

    def _fun(v):
        s, l = v
        width = l - s
        chord = (b(l) - b(s)) / width
        f = [db(s) - db(l), chord - db(s)]
        jac = [[d2b(s), -d2b(l)],
               [(chord - db(s)) / width - d2b(s), (db(l) - chord) / width]]
        return f, jac

    if l0 <= s0:
        return None
    try:
        sol = optimize.root(_fun, [s0, l0], jac=True, method='hybr')
    except (ZeroDivisionError, FloatingPointError, ValueError):
        return None
    s, l = (float(v) for v in sol.x)
    if not sol.success or not l > s:
        return None
    slope = (b(l) - b(s)) / (l - s)
    if abs(db(s) - slope) > 1e-8 * (1 + abs(slope)) or abs(db(l) - slope) > 1e-8 * (1 + abs(slope)):
        return None
    if abs(s - s0) > 1e-3 * (1 + abs(s0)) or abs(l - l0) > 1e-3 * (1 + abs(l0)):
        return None
    return s, l


def _locate_gap(b: Polynomial, eta_a: float, lam_a: float, eta_b: float, lam_b: float,
                concave: list[tuple[float, float]]) -> GapRecord:
    """Bisect a jump of ``lambda`` in ``(eta_a, eta_b]`` and polish the bitangent."""
    while eta_b - eta_a > conf.ETA_BRACKET_WIDTH * max(1.0, abs(eta_a)):
        eta_m = 0.5 * (eta_a + eta_b)
        if eta_m in (eta_a, eta_b):
            break
        lam_m = _lambda(b, eta_m)
        if _overlaps(lam_a, lam_m, concave):
            eta_b, lam_b = eta_m, lam_m
        else:
            eta_a, lam_a = eta_m, lam_m
    logger.debug('jump of lambda bracketed in [%r, %r]: %r -> %r', eta_a, eta_b, lam_a, lam_b)

    polished = _bitangent(b, lam_a, lam_b)
    degraded = polished is None
    if degraded:
        logger.warning('bitangent polishing failed near slope %r; reporting bisection bracket',
                       eta_a)
        s, l = lam_a, lam_b
    else:
        s, l = polished
    c = (b(l) - b(s)) / (l - s)
    logger.info('gap found: c=%r, sigma=%r, lambda=%r', c, s, l)
    return GapRecord(c=c, sigma=s, lambda_=l, bridge_value=b(s), degraded=degraded)


def gap_intervals(b: Polynomial, tol: float = conf.TIE_TOL) -> EnvelopeTable:
    """Find every bitangent slope of ``b`` with its gap interval.

    Args:
        b (Polynomial):
            A valid domain polynomial.
        tol (float, optional):
            Tolerance used to deduplicate gaps found from overlapping slope windows.

    Returns:
        EnvelopeTable: the gaps, sorted by slope; empty iff ``b`` is convex.
    """
    concave = concavity_intervals(b)
    if not concave:
        return EnvelopeTable()

    db = derivative(b, 1)
    found: list[GapRecord] = []
    for lo, hi in concave:
        e_lo, e_hi = db(hi), db(lo)
        pad = 1e-6 * (1 + abs(e_lo) + abs(e_hi))
        etas = np.linspace(e_lo - pad, e_hi + pad, conf.SCAN_POINTS)
        lams = [_lambda(b, float(eta)) for eta in etas]
        for i in range(len(etas) - 1):
            if _overlaps(lams[i], lams[i + 1], concave):
                gap = _locate_gap(b, float(etas[i]), lams[i], float(etas[i + 1]), lams[i + 1],
                                  concave)
                if not any(abs(gap.c - g.c) <= max(tol, 1e-8) * (1 + abs(g.c))
                           and abs(gap.sigma - g.sigma) <= 1e-6 * (1 + abs(g.sigma))
                           for g in found):
                    found.append(gap)

    found.sort(key=lambda g: g.c)
    n = b.degree // 2
    if len(found) > n - 1:
        logger.warning('found %d gaps for degree %d; at most %d expected',
                       len(found), b.degree, n - 1)
    return EnvelopeTable(gaps=found)


def biconjugate(b: Polynomial, env: EnvelopeTable, u: float) -> float:
    """The convex envelope ``b**(u)``: the bridge value on a gap's closed hull, else ``b(u)``."""
    gap = env.gap_covering(u)
    return b(u) if gap is None else gap.bridge(u)


def subgradient(b: Polynomial, env: EnvelopeTable, u: float) -> float:
    """Derivative of ``b**`` at ``u``: the bitangent slope inside a gap, else ``b'(u)``.

    ``b**`` is continuously differentiable, so both expressions agree at gap endpoints.
    """
    gap = env.gap_covering(u)
    return derivative(b, 1)(u) if gap is None else gap.c


def asymptotic_ratios(b: Polynomial, eta: float) -> AsymptoticRatios:
    """Compare ``lambda(eta)``, ``b*(eta)`` and ``b^(j)(lambda(eta))`` with their leading-order
    growth.

    For a degree ``2n`` polynomial with leading coefficient ``a``, let
    ``rho = sign(eta) * |eta / (2n*a)|**(1/(2n-1))``.  Then, as ``|eta| -> infinity``,
    ``lambda(eta) ~ rho``, ``b*(eta) ~ (2n-1)/(2n) * eta * rho`` and
    ``b^(j)(lambda(eta)) ~ a * (2n)!/(2n-j)! * rho**(2n-j)``. With ``a = 1/(2n)``,
    ``rho = eta**(1/(2n-1))``.

    Raises:
        DomainValidationError: if ``eta == 0``.
    """
    if eta == 0:
        raise DomainValidationError('Asymptotic ratios are undefined at eta = 0.')
    two_n = b.degree
    n = two_n // 2
    a = b.leading
    rho = signed_power(eta / (two_n * a), 1.0 / (two_n - 1))

    ms = minimizer_set(b, eta)
    lam = ms.lambda_
    ratios = {}
    for j in range(2, two_n + 1):
        expected = a * math.factorial(two_n) / math.factorial(two_n - j) * rho ** (two_n - j)
        ratios[j] = derivative(b, j)(lam) / expected
    simple = not ms.is_tied and derivative(b, 2)(lam) > 1e-12 * (1 + abs(eta))
    if not simple:
        logger.warning('lambda(%r) is not a simple critical point; ratios may be off', eta)
    return AsymptoticRatios(
        eta=eta, n=n,
        lambda_ratio=lam / rho,
        legendre_ratio=ms.legendre / ((two_n - 1) / two_n * eta * rho),
        derivative_ratios=ratios,
        simple=simple)
