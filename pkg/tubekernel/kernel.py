"""Numerical evaluation of the Szegő kernel integrals.

With ``delta = h + k``, ``s = i1 + j1`` and ``m = i1 + j1 + i2 + j2``, the derivative integrals of
the kernel are

    ``S = int_R int_0^inf exp(-tau (delta + A) + i tau omega) eta**s tau**(m+1) / I dtau deta``

where ``A = A(x, r, eta)``, ``omega = (t - u) + eta (y - s)`` and ``I = I(eta, tau)``; the factor
``exp(2 tau b*(eta))`` of ``N = exp(2 tau b*) I`` has been cancelled against the exponent.  The
normalisation constant in front of the integral is taken to be 1.  The absolute-value integral
``S~`` replaces the phase by 1 and ``eta**s`` by ``|eta|**s``; it is finite exactly when the
convergence margin is positive.

The inner ``tau`` integral is computed by the trapezoidal rule in ``v = log(tau)``, on a grid
anchored at ``log(TAU_MIN)`` and halved until successive sums agree; analytic bounds cover both
ends.  The outer ``eta`` integral uses :py:func:`scipy.integrate.quad_vec` on ``[-M, M]``, with
``M`` doubled until the tail, which decays like ``|eta|**-(2 + (m - s) + (m + 3)/(2n - 1))``, is
below tolerance.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd
from scipy import integrate, special

from . import conf
from .errors import DomainValidationError
from .legendre import EnvelopeTable, minimizer_set
from .polynomial import Polynomial, derivative
from .quadrature import ShiftedPolynomial, laplace_integrals, shift_poly
from .singular import A_value, KernelQuery, classify_pair, minimizing_slope

logger = logging.getLogger(__name__)

Status = Literal['converged', 'diverged', 'margin_nonpositive', 'budget_exceeded']

INNER_TOL_FACTOR = 0.1
"""Relative tolerance of the inner integral, as a fraction of the requested tolerance."""

QUAD_TOL_FACTOR = 1e-3
"""Tolerance of each ``I(eta, tau)``, as a fraction of the requested tolerance."""


@dataclass(frozen=True, kw_only=True)
class Budget:
    """Work limits for one kernel evaluation."""

    panels: int = conf.PANEL_BUDGET
    """Adaptive subintervals per quadrature."""

    eta_cap: float = conf.ETA_CAP
    """Largest allowed outer truncation radius."""

    tau_nodes: int = conf.TAU_NODE_BUDGET
    """Largest allowed inner grid size."""

    eta_min: float = conf.ETA_MIN
    """Smallest outer truncation radius."""


@dataclass(frozen=True, kw_only=True)
class KernelEvaluation:
    """Result of one kernel evaluation."""

    kind: Literal['absolute', 'complex']
    value: float | complex | None
    """The integral; ``None`` when it was not computed (singular pairs)."""

    error_estimate: float
    eta_truncation: float
    """Final outer truncation radius ``M``."""

    status: Status
    margin: float
    s: int = 0
    m: int = 0


@dataclass(frozen=True, kw_only=True)
class DivergenceProbe:
    """Values of ``S~`` with ``s = m = 0`` as ``delta`` is halved."""

    deltas: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    growth_ratios: list[float] = field(default_factory=list)
    """``values[i + 1] / values[i]``."""

    statuses: list[str] = field(default_factory=list)
    in_sigma: bool = False
    """Whether the boundary pair ``(x, r)`` lies in the singular set."""

    complete: bool = True
    """False if the table stopped early because a budget was exhausted."""

    @property
    def diverging(self) -> bool:
        """Whether every growth ratio reaches :py:const:`~tubekernel.conf.GROWTH_THRESHOLD`."""
        return self.complete and all(g >= conf.GROWTH_THRESHOLD for g in self.growth_ratios)

    def to_frame(self) -> pd.DataFrame:
        """Tabulate as ``delta, value, ratio, status`` rows; the first ratio is empty."""
        return pd.DataFrame({
            'delta': self.deltas,
            'value': self.values,
            'ratio': [np.nan] + self.growth_ratios,
            'status': self.statuses,
        })


@dataclass
class _InnerResult:
    values: np.ndarray
    errors: np.ndarray
    ok: bool


def _tau_range(a: float, m_max: int) -> tuple[float, float]:
    """Inner range: from ``TAU_MIN`` to where ``exp(-a tau) tau**(m+2)`` underflows."""
    tau_hi = conf.UNDERFLOW_EXPONENT / a
    for _ in range(3):
        tau_hi = (conf.UNDERFLOW_EXPONENT + (m_max + 2.5) * math.log(max(tau_hi, 1.0))) / a
    return min(conf.TAU_MIN, 1e-10 * tau_hi), tau_hi


def _log_I(sp: ShiftedPolynomial, vs: np.ndarray, quad_tol: float,
           panels: int) -> tuple[np.ndarray, bool]:
    results = laplace_integrals(sp, np.exp(vs), quad_tol, panels)
    return np.log([r.value for r in results]), all(r.converged for r in results)


def _tau_integrals(sp: ShiftedPolynomial, a: float, omega: float, ms: list[int], tol: float,
                   budget: Budget) -> _InnerResult:
    """``int_0^inf exp(-a tau + i omega tau) tau**(m+1) / I(eta, tau) dtau`` for each ``m``."""
    tau_lo, tau_hi = _tau_range(a, max(ms))
    v_lo, v_hi = math.log(tau_lo), math.log(tau_hi)
    strip = 0.5 * math.pi - math.atan(abs(omega) / a)
    step = min(conf.LOG_TAU_STEP, 0.25 * strip)
    n = int(math.ceil((v_hi - v_lo) / step)) + 1
    ok = True
    if n > budget.tau_nodes:
        n = budget.tau_nodes
        step = (v_hi - v_lo) / (n - 1)
        ok = False
    quad_tol = QUAD_TOL_FACTOR * tol
    powers = np.asarray(ms, dtype=float)[:, None] + 2.0

    def _sums(vs, log_i, h):
        taus = np.exp(vs)
        terms = np.exp(powers * vs - a * taus - log_i)
        mags = h * terms.sum(axis=1)
        if omega != 0.0:
            terms = terms * np.exp(1j * omega * taus)
        return h * terms.sum(axis=1), mags

    vs = v_lo + step * np.arange(n)
    log_i, quad_ok = _log_I(sp, vs, quad_tol, budget.panels)
    ok = ok and quad_ok
    total, mags = _sums(vs, log_i, step)
    coarse, _ = _sums(vs[::2], log_i[::2], 2 * step)
    while True:
        err = np.abs(total - coarse)
        if np.all(err <= tol * mags):
            break
        if 2 * len(vs) - 1 > budget.tau_nodes:
            ok = False
            break
        mids = vs[:-1] + 0.5 * step
        log_mid, quad_ok = _log_I(sp, mids, quad_tol, budget.panels)
        ok = ok and quad_ok
        merged_v = np.empty(2 * len(vs) - 1)
        merged_v[::2], merged_v[1::2] = vs, mids
        merged_i = np.empty_like(merged_v)
        merged_i[::2], merged_i[1::2] = log_i, log_mid
        vs, log_i, step = merged_v, merged_i, 0.5 * step
        coarse = total
        total, mags = _sums(vs, log_i, step)

    m_arr = powers[:, 0] - 2.0
    lower = np.exp((m_arr + 2) * v_lo - log_i[0]) / (m_arr + 2)
    with np.errstate(divide='ignore'):
        upper = np.exp(special.gammaln(m_arr + 2.5) + np.log(special.gammaincc(m_arr + 2.5,
                                                                                a * tau_hi))
                       - (m_arr + 2.5) * math.log(a) - 0.5 * v_hi - log_i[-1])
    logger.debug('tau grid for eta=%r: %d nodes, step %.3g', sp.eta, len(vs), step)
    return _InnerResult(values=total, errors=err + lower + upper, ok=ok)


class _EtaIntegrand:
    """Vector-valued outer integrand for a set of derivative orders.

    Components are ``[values..., inner errors...]`` (absolute kind), or
    ``[real, imag, inner error]`` (complex kind), each scaled by ``scale``.
    """

    def __init__(self, b: Polynomial, q: KernelQuery, orders: list[tuple[int, int]],
                 kind: str, margin: float, tol: float, budget: Budget) -> None:
        self.b = b
        self.q = q
        self.orders = orders
        self.kind = kind
        self.margin = margin
        self.tol = INNER_TOL_FACTOR * tol
        self.budget = budget
        self.ms = sorted({m for _, m in orders})
        self.scale = np.ones(2 * len(orders) if kind == 'absolute' else 3)
        self.ok = True

    def raw(self, eta: float) -> np.ndarray:
        """Unscaled integrand at ``eta``."""
        q = self.q
        sp = shift_poly(self.b, eta)
        a = q.delta + self.b(q.x) + self.b(q.r) - eta * (q.x + q.r) + 2.0 * sp.legendre
        a = max(a, self.margin)
        omega = (q.t - q.u) + eta * (q.y - q.s) if self.kind == 'complex' else 0.0
        inner = _tau_integrals(sp, a, omega, self.ms, self.tol, self.budget)
        self.ok = self.ok and inner.ok
        vals, errs = [], []
        for s, m in self.orders:
            i = self.ms.index(m)
            weight = abs(eta) ** s if self.kind == 'absolute' else eta ** s
            vals.append(weight * inner.values[i])
            errs.append(abs(weight) * inner.errors[i])
        if self.kind == 'absolute':
            return np.array([v.real for v in vals] + errs)
        return np.array([vals[0].real, vals[0].imag, errs[0]])

    def __call__(self, eta: float) -> np.ndarray:
        return self.raw(float(eta)) * self.scale

    def values(self, vec: np.ndarray) -> np.ndarray:
        """The value part of an (unscaled) component vector."""
        if self.kind == 'absolute':
            return vec[:len(self.orders)]
        return np.array([complex(vec[0], vec[1])])

    def errors(self, vec: np.ndarray) -> np.ndarray:
        """The inner-error part of an (unscaled) component vector."""
        return vec[len(self.orders):] if self.kind == 'absolute' else vec[2:]


def integrable(q: KernelQuery, margin: float, class_tol: float = conf.CLASS_TOL) -> bool:
    """Whether the kernel integrals at ``q`` are evaluated at all.

    Boundary pairs (``delta = 0``) need a margin above ``class_tol``; a positive height is
    enough off the boundary.
    """
    return margin > (class_tol if q.delta == 0 else 0.0)


def _decay_exponent(b: Polynomial, s: int, m: int) -> float:
    return 2.0 + (m - s) + (m + 3.0) / (b.degree - 1)


def _evaluate(b: Polynomial, env: EnvelopeTable, q: KernelQuery, orders: list[tuple[int, int]],
              kind: str, tol: float, budget: Budget,
              class_tol: float) -> list[KernelEvaluation]:
    cls = classify_pair(b, env, q, class_tol)
    margin = cls.margin
    if not integrable(q, margin, class_tol):
        status = 'diverged' if cls.in_sigma else 'margin_nonpositive'
        logger.info('pair (x=%r, r=%r) has margin %r: %s', q.x, q.r, margin, status)
        return [KernelEvaluation(kind=kind, value=None, error_estimate=math.inf,
                                 eta_truncation=0.0, status=status, margin=margin, s=s, m=m)
                for s, m in orders]

    fun = _EtaIntegrand(b, q, orders, kind, margin, tol, budget)
    eta_star = minimizing_slope(b, env, q)
    db = derivative(b, 1)
    M = max(budget.eta_min, 2.0 * abs(eta_star), 2.0 * max(abs(db(q.x)), abs(db(q.r))),
            *(2.0 * abs(g.c) for g in env.gaps))
    M = min(M, budget.eta_cap)
    breaks = [0.0, eta_star] + [g.c for g in env.gaps]

    # scale components to unit size near the peak of the integrand
    probe = np.max(np.abs([fun.raw(eta_star + d) for d in (-1.0, -0.25, 0.0, 0.25, 1.0)]),
                   axis=0)
    if kind == 'absolute':
        peak = probe[:len(orders)]
        peak = np.where(peak > 0, peak, 1.0)
        fun.scale = 1.0 / np.concatenate([peak, peak])
    else:
        fun.scale = np.full(3, 1.0 / (max(probe[0], probe[1]) or 1.0))

    def _quad(lo: float, hi: float):
        pts = sorted({p for p in breaks if lo < p < hi}) or None
        res, err, info = integrate.quad_vec(fun, lo, hi, epsabs=0.0, epsrel=0.25 * tol,
                                            norm='max', points=pts, limit=budget.panels,
                                            full_output=True)
        if not info.success:
            fun.ok = False
        return res / fun.scale, err / fun.scale

    total, q_err = _quad(-M, M)
    exponents = np.array([_decay_exponent(b, s, m) for s, m in orders])
    capped = False
    while True:
        edge = np.abs(fun.values(fun.raw(M))) + np.abs(fun.values(fun.raw(-M)))
        tail = edge * M / (exponents - 1.0)
        if np.all(tail <= 0.5 * tol * (1.0 + np.abs(fun.values(total)))):
            break
        if 2.0 * M > budget.eta_cap:
            capped = True
            logger.warning('eta truncation reached its cap %r', budget.eta_cap)
            break
        for lo, hi in ((M, 2.0 * M), (-2.0 * M, -M)):
            res, err = _quad(lo, hi)
            total, q_err = total + res, q_err + err
        M *= 2.0
        logger.debug('eta truncation doubled to %r', M)

    values = fun.values(total)
    quad_err = np.abs(fun.values(q_err))
    inner_err = np.abs(fun.errors(total))
    ret = []
    for i, (s, m) in enumerate(orders):
        value = values[i]
        error = float(quad_err[i] + inner_err[i] + tail[i])
        converged = fun.ok and not capped and error <= tol * (1.0 + abs(value))
        status = 'converged' if converged else 'budget_exceeded'
        ret.append(KernelEvaluation(
            kind=kind, value=float(value) if kind == 'absolute' else complex(value),
            error_estimate=error, eta_truncation=M, status=status, margin=margin, s=s, m=m))
    logger.info('kernel at (x=%r, r=%r, delta=%r): %s', q.x, q.r, q.delta,
                [e.status for e in ret])
    return ret


def abs_kernel(b: Polynomial, env: EnvelopeTable, q: KernelQuery, tol: float = conf.KERNEL_TOL,
               budget: Budget | None = None,
               class_tol: float = conf.CLASS_TOL) -> KernelEvaluation:
    """Evaluate the absolute-value integral ``S~`` for the derivative orders of ``q``.

    Boundary pairs with margin at most ``class_tol`` are not integrated: the status is
    ``diverged`` for pairs in the singular set and ``margin_nonpositive`` otherwise.
    """
    return _evaluate(b, env, q, [(q.s_exp, q.m_exp)], 'absolute', tol, budget or Budget(),
                     class_tol)[0]


def abs_kernel_family(b: Polynomial, env: EnvelopeTable, q: KernelQuery,
                      orders: list[tuple[int, int]], tol: float = conf.KERNEL_TOL,
                      budget: Budget | None = None,
                      class_tol: float = conf.CLASS_TOL) -> list[KernelEvaluation]:
    """Evaluate ``S~`` for several ``(s, m)`` pairs at once, sharing the ``I(eta, tau)`` values.

    The derivative orders stored in ``q`` are ignored.
    """
    for s, m in orders:
        if not 0 <= s <= m:
            raise DomainValidationError(f'Need 0 <= s <= m, got s={s}, m={m}.')
    return _evaluate(b, env, q, list(orders), 'absolute', tol, budget or Budget(), class_tol)


def kernel(b: Polynomial, env: EnvelopeTable, q: KernelQuery, tol: float = conf.KERNEL_TOL,
           budget: Budget | None = None, class_tol: float = conf.CLASS_TOL,
           strict: bool = True) -> KernelEvaluation:
    """Evaluate the complex derivative integral ``S`` with the phase
    ``exp(i tau (t - u) + i eta tau (y - s))``.

    Args:
        strict: raise on pairs that are not integrated; otherwise return their status with no
            value, as ``abs_kernel`` does.

    Raises:
        DomainValidationError: if ``strict`` and the convergence margin of ``q`` is not
            positive.
    """
    ret = _evaluate(b, env, q, [(q.s_exp, q.m_exp)], 'complex', tol, budget or Budget(),
                    class_tol)[0]
    if strict and ret.status in ('diverged', 'margin_nonpositive'):
        raise DomainValidationError(
            f'The kernel integral diverges at this pair (margin {ret.margin!r}).')
    return ret


def I_j_lower(b: Polynomial, x: float, r: float, delta: float, s: int, m: int, j: int,
              eta: float) -> float:
    """``|eta|**s |b^(j)(lambda(eta))|**(1/j) Gamma(m + 2 + 1/j) (delta + A)**-(m + 2 + 1/j)``.

    This is the ``tau`` integral of ``exp(-tau (delta + A)) |eta|**s tau**(m+1)`` against the
    ``j``-th term of the lower-bound comparator for ``1/I``, in closed form.

    Raises:
        DomainValidationError: if ``delta + A(x, r, eta) <= 0``.
    """
    a = delta + A_value(b, x, r, eta).A
    if not a > 0:
        raise DomainValidationError(f'delta + A must be positive, got {a!r}.')
    lam = minimizer_set(b, eta).lambda_
    power = m + 2 + 1.0 / j
    return (abs(eta) ** s * abs(derivative(b, j)(lam)) ** (1.0 / j)
            * special.gamma(power) * a ** -power)


def integrated_lower_bounds(b: Polynomial, env: EnvelopeTable, q: KernelQuery,
                            eta_max: float = 64.0, tol: float = 1e-8) -> float:
    """``sum_{j=2}^{2n} int_{-eta_max}^{eta_max} I_j(eta) deta`` for the orders of ``q``."""
    js = range(2, b.degree + 1)

    def _fun(eta: float) -> np.ndarray:
        return np.array([I_j_lower(b, q.x, q.r, q.delta, q.s_exp, q.m_exp, j, float(eta))
                         for j in js])

    pts = sorted({p for p in [0.0, minimizing_slope(b, env, q)] + [g.c for g in env.gaps]
                  if -eta_max < p < eta_max}) or None
    res, _ = integrate.quad_vec(_fun, -eta_max, eta_max, epsrel=tol, points=pts)
    return float(np.sum(res))


def divergence_probe(b: Polynomial, env: EnvelopeTable, x: float, r: float, delta0: float,
                     halvings: int, tol: float = conf.PROBE_TOL, budget: Budget | None = None,
                     class_tol: float = conf.CLASS_TOL) -> DivergenceProbe:
    """Evaluate ``S~`` with ``s = m = 0`` at ``delta = delta0, delta0/2, ..., delta0/2**halvings``
    for the boundary pair ``(x, r)`` (with ``y = s``, ``t = u``).

    On the singular set the values blow up and the growth ratios stay away from 1; elsewhere
    they converge to the finite boundary value.  If an entry exhausts its budget the table
    stops there and ``complete`` is false.
    """
    if not delta0 > 0:
        raise DomainValidationError(f'delta0 must be positive, got {delta0!r}.')
    if halvings < 0:
        raise DomainValidationError(f'halvings must be nonnegative, got {halvings!r}.')
    base = KernelQuery(x=x, r=r)
    in_sigma = classify_pair(b, env, base, class_tol).in_sigma
    deltas, values, statuses = [], [], []
    complete = True
    for i in range(halvings + 1):
        delta = delta0 / 2 ** i
        ev = abs_kernel(b, env, base.with_delta(delta), tol, budget, class_tol)
        deltas.append(delta)
        values.append(ev.value)
        statuses.append(ev.status)
        if ev.status != 'converged':
            logger.warning('probe stopped at delta=%r: %s', delta, ev.status)
            complete = False
            break
    ratios = [v1 / v0 for v0, v1 in zip(values, values[1:])]
    return DivergenceProbe(deltas=deltas, values=values, growth_ratios=ratios,
                           statuses=statuses, in_sigma=in_sigma, complete=complete)
