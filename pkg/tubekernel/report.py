"""Aggregated outputs of the command-line interface: the ``analyze`` report, the ``roots``
report and the sweep tables.

Every number in these outputs comes from one call of the underlying library function with the
same tolerances, so that individual entries can be reproduced directly.  Sweeps return
:py:class:`pandas.DataFrame` objects with one row per grid node, in grid order; a node that
fails gets ``NaN`` quantities and a message in the ``error`` column.
"""
import logging
import math
import time
import typing as ty
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd

from . import conf
from .errors import TubeKernelError
from .kernel import Budget, abs_kernel
from .legendre import EnvelopeTable, biconjugate, gap_intervals, minimizer_set
from .polynomial import (Interval, Polynomial, convexity_intervals, inflection_points, is_convex,
                         real_roots, to_text)
from .quadrature import N_value
from .singular import KernelQuery, classify_pair

logger = logging.getLogger(__name__)

Node = ty.TypeVar('Node')


@dataclass(frozen=True, kw_only=True)
class SigmaBlock:
    """One block ``Lambda_c x Lambda_c`` of the singular set."""

    c: float
    """The bitangent slope."""

    minimizers: list[float]
    """The global minimizers of ``B_c``, ascending; the first and last bound the gap."""


@dataclass(kw_only=True)
class AnalysisReport:
    """Structure of the singular set of a domain-defining polynomial."""

    polynomial: str
    """Text form of ``b``."""

    degree: int
    n: int
    """Half the degree."""

    leading: float
    convex: bool
    inflection_points: list[float]
    convexity_intervals: list[Interval]
    """Closed intervals where ``b'' >= 0``; unbounded ends are serialized as ``null``."""

    envelope: EnvelopeTable
    gap_count: int
    gap_bound: int
    """The largest possible number of bitangent slopes, ``n - 1``."""

    gap_bound_holds: bool
    sigma_blocks: list[SigmaBlock] = field(default_factory=list)
    sigma_structure: str = ''
    """Human-readable description of the singular set."""

    created: float | None = None
    """UNIX timestamp, or ``None`` for reproducible output."""

    @staticmethod
    def from_polynomial(b: Polynomial, env: EnvelopeTable | None = None,
                        tie_tol: float = conf.TIE_TOL,
                        reproducible: bool = False) -> 'AnalysisReport':
        """Analyse ``b``.

        Args:
            b (Polynomial):
                A domain-defining polynomial.
            env (EnvelopeTable, optional):
                A precomputed envelope table; computed from ``b`` if not given.
            tie_tol (float):
                Tie tolerance for the minimizer sets.
            reproducible (bool):
                If true, leave ``created`` empty.
        """
        env = gap_intervals(b, tie_tol) if env is None else env
        n = b.degree // 2
        blocks = [_sigma_block(b, gap.c, gap.sigma, gap.lambda_, tie_tol) for gap in env.gaps]
        return __class__(
            polynomial=to_text(b),
            degree=b.degree,
            n=n,
            leading=b.leading,
            convex=is_convex(b),
            inflection_points=inflection_points(b),
            convexity_intervals=convexity_intervals(b),
            envelope=env,
            gap_count=len(env.gaps),
            gap_bound=n - 1,
            gap_bound_holds=len(env.gaps) <= n - 1,
            sigma_blocks=blocks,
            sigma_structure=_describe_sigma(blocks),
            created=None if reproducible else time.time()
        )


@dataclass(kw_only=True)
class RootsReport:
    """Roots and convexity data of an arbitrary nonzero polynomial."""
    polynomial: str
    degree: int
    real_roots: list[tuple[float, int]]
    complex_pairs: list[tuple[float, float, int]]
    convexity_intervals: list[Interval]
    inflection_points: list[float]
    created: float | None = None

    @staticmethod
    def from_polynomial(p: Polynomial, tol: float = conf.CLUSTER_TOL,
                        reproducible: bool = False) -> 'RootsReport':
        """Find the roots of ``p`` and the sign pattern of ``p''``."""
        roots = real_roots(p, tol)
        curved = p.degree >= 2
        return __class__(
            polynomial=to_text(p),
            degree=p.degree,
            real_roots=list(roots.real_roots),
            complex_pairs=list(roots.complex_pairs),
            convexity_intervals=convexity_intervals(p) if curved else [(-math.inf, math.inf)],
            inflection_points=inflection_points(p) if curved else [],
            created=None if reproducible else time.time()
        )


def _sigma_block(b: Polynomial, c: float, sigma: float, lambda_: float,
                 tie_tol: float) -> SigmaBlock:
    pad = 1e-6 * (1 + abs(sigma) + abs(lambda_))
    interior = [m for m in minimizer_set(b, c, tie_tol).minimizers
                if sigma + pad < m < lambda_ - pad]
    return SigmaBlock(c=c, minimizers=[sigma] + interior + [lambda_])


def _describe_sigma(blocks: list[SigmaBlock]) -> str:
    if not blocks:
        return ('b is convex: every x is a global minimizer of some B_eta, so the singular set '
                'is the boundary diagonal {x = r}.')
    gaps = ', '.join(f'[{blk.minimizers[0]!r}, {blk.minimizers[-1]!r})' for blk in blocks)
    parts = [f'{{x = r}} for x outside the gap intervals {gaps}']
    for blk in blocks:
        pts = ', '.join(repr(m) for m in blk.minimizers)
        parts.append(f'Lambda_c x Lambda_c with c = {blk.c!r}, Lambda_c = {{{pts}}}')
    return 'The singular set is the union of ' + '; '.join(parts) + '.'


# Sweeps

def _safe(fn: ty.Callable[[Node], dict], columns: list[str], node: Node) -> dict:
    """Evaluate one node; library errors become an ``error`` entry."""
    try:
        row = fn(node)
        row['error'] = ''
    except TubeKernelError as exc:
        logger.warning('sweep node %r failed: %s', node, exc.description)
        row = {col: np.nan for col in columns}
        row['error'] = f'{exc.name}: {exc.description}'
    return row


def _run(fn: ty.Callable[[Node], dict], nodes: list[Node], axes: list[str],
         columns: list[str], workers: int) -> pd.DataFrame:
    """Evaluate ``fn`` at every node, optionally in worker processes, keeping grid order."""
    task = partial(_safe, fn, columns)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, nodes))
    else:
        rows = [task(node) for node in nodes]
    df = pd.DataFrame(rows, columns=columns + ['error'])
    for i, axis in enumerate(axes):
        df.insert(i, axis, [node[i] if isinstance(node, tuple) else node for node in nodes])
    return df


def _lambda_node(b: Polynomial, tie_tol: float, eta: float) -> dict:
    ms = minimizer_set(b, eta, tie_tol)
    return {'sigma': ms.sigma, 'lambda': ms.lambda_, 'legendre': ms.legendre,
            'multiplicity': len(ms.minimizers)}


def lambda_sweep(b: Polynomial, etas, tie_tol: float = conf.TIE_TOL,
                 workers: int = 1) -> pd.DataFrame:
    """Tabulate ``sigma(eta)``, ``lambda(eta)``, ``b*(eta)`` and the number of global
    minimizers."""
    return _run(partial(_lambda_node, b, tie_tol), [float(e) for e in etas], ['eta'],
                ['sigma', 'lambda', 'legendre', 'multiplicity'], workers)


def _envelope_node(b: Polynomial, env: EnvelopeTable, u: float) -> dict:
    gap = env.gap_covering(u)
    return {'b': b(u), 'bstarstar': biconjugate(b, env, u),
            'in_gap': gap is not None and gap.sigma < u < gap.lambda_}


def envelope_sweep(b: Polynomial, env: EnvelopeTable, us, workers: int = 1) -> pd.DataFrame:
    """Tabulate ``b``, ``b**`` and whether ``u`` lies in an open gap interval."""
    return _run(partial(_envelope_node, b, env), [float(u) for u in us], ['u'],
                ['b', 'bstarstar', 'in_gap'], workers)


def product_nodes(xs, rs) -> list[tuple[float, float]]:
    """All pairs ``(x, r)``, ``x`` varying slowest."""
    return [(float(x), float(r)) for x in xs for r in rs]


def diagonal_nodes(xs) -> list[tuple[float, float]]:
    """Pairs ``(x, x)``."""
    return [(float(x), float(x)) for x in xs]


def midpoint_nodes(mids, half_width: float) -> list[tuple[float, float]]:
    """Pairs ``(m + w, m - w)`` with midpoint ``m`` and fixed half-width ``w``."""
    return [(float(m) + half_width, float(m) - half_width) for m in mids]


def _margin_node(b: Polynomial, env: EnvelopeTable, tol: float,
                 node: tuple[float, float]) -> dict:
    cls = classify_pair(b, env, KernelQuery(x=node[0], r=node[1]), tol)
    return {'margin': cls.margin, 'in_sigma': cls.in_sigma}


def margin_sweep(b: Polynomial, env: EnvelopeTable, nodes: list[tuple[float, float]],
                 tol: float = conf.CLASS_TOL, workers: int = 1) -> pd.DataFrame:
    """Tabulate the convergence margin and singular-set membership of boundary pairs."""
    return _run(partial(_margin_node, b, env, tol), nodes, ['x', 'r'],
                ['margin', 'in_sigma'], workers)


def _nvalue_node(b: Polynomial, tol: float, panels: int, node: tuple[float, float]) -> dict:
    res = N_value(b, node[0], node[1], tol, panels)
    return {'log_N': res.log_N, 'I': res.I.value, 'err': res.I.abs_error_estimate,
            'converged': res.I.converged}


def nvalue_sweep(b: Polynomial, nodes: list[tuple[float, float]], tol: float = conf.QUAD_TOL,
                 panels: int = conf.PANEL_BUDGET, workers: int = 1) -> pd.DataFrame:
    """Tabulate ``log N(eta, tau)`` at ``(eta, tau)`` nodes."""
    return _run(partial(_nvalue_node, b, tol, panels), nodes, ['eta', 'tau'],
                ['log_N', 'I', 'err', 'converged'], workers)


def _kernel_node(b: Polynomial, env: EnvelopeTable, delta: float, tol: float, budget: Budget,
                 class_tol: float, x: float) -> dict:
    ev = abs_kernel(b, env, KernelQuery(x=x, r=x, h=delta), tol, budget, class_tol)
    return {'margin': ev.margin, 'value': np.nan if ev.value is None else ev.value,
            'err': ev.error_estimate, 'status': ev.status}


def kernel_sweep(b: Polynomial, env: EnvelopeTable, xs, delta: float = 0.0,
                 tol: float = conf.KERNEL_TOL, budget: Budget | None = None,
                 workers: int = 1, class_tol: float = conf.CLASS_TOL) -> pd.DataFrame:
    """Tabulate the absolute kernel integral along the diagonal ``x = r`` at height ``delta``."""
    return _run(partial(_kernel_node, b, env, delta, tol, budget or Budget(), class_tol),
                [float(x) for x in xs], ['x'], ['margin', 'value', 'err', 'status'], workers)
