"""Command-line interface.

Run ``python -m tubekernel --help`` for the list of subcommands.  Results are written as JSON
(CSV for ``sweep`` and ``probe``) to standard output or to ``--output``.  Failures are written to
standard error as a compact JSON object ``{"code", "name", "description"}``; the exit code is 2
for invalid input and 3 for numerical non-convergence.

Option values are resolved in the order: command line, the ``TUBEKERNEL_TOL`` environment
variable (``--tol`` only), the ``--config`` file, built-in defaults.
"""
import functools
import json
import logging
import sys
import time
import typing as ty
from dataclasses import dataclass

import click
import dacite
import pandas as pd
import pydantic as pyd

from . import conf
from .config import RunConfig, parse_grid, read_config_file
from .errors import DomainValidationError, NonConvergenceError, TubeKernelError
from .kernel import abs_kernel, divergence_probe, kernel
from .legendre import EnvelopeTable, asymptotic_ratios, gap_intervals, minimizer_set
from .quadrature import N_value
from .report import (AnalysisReport, RootsReport, diagonal_nodes, envelope_sweep,
                     kernel_sweep, lambda_sweep, margin_sweep, midpoint_nodes, nvalue_sweep,
                     product_nodes)
from .singular import KernelQuery, classify_pair
from .util import jsonable, serialiser

logger = logging.getLogger(__name__)

TABULAR_SUBCOMMANDS = frozenset({'sweep', 'probe'})

GROUP_PARAMS = {'output': 'output', 'format': 'output_format'}
"""Config-file keys applied to the command group."""

SHARED_PARAMS = {'poly': 'poly', 'tie_tol': 'tie_tol', 'panels': 'budget',
                 'eta_cap': 'eta_cap', 'tau_nodes': 'tau_nodes'}
"""Config-file keys applied to every subcommand that has the matching option."""

TOL_KEYS = {'margin': 'class_tol', 'classify': 'class_tol', 'nvalue': 'quad_tol',
            'kernel': 'kernel_tol', 'probe': 'kernel_tol'}
"""Config-file key that sets ``--tol`` of a subcommand, besides the generic ``tol``."""

TOLERANCE_KEYS = ('tie_tol', 'quad_tol', 'class_tol', 'kernel_tol')

CONFIG_TOLERANCES = 'tubekernel.tolerances'
"""``ctx.meta`` key of the tolerances read from a config file."""


@dataclass(frozen=True, kw_only=True)
class CliSettings:
    """Options of the command group, shared by all subcommands."""
    reproducible: bool = False
    output: str | None = None
    output_format: ty.Literal['json', 'csv'] | None = None


def _fail(payload: dict, code: int) -> ty.NoReturn:
    click.echo(json.dumps(payload, separators=(',', ':'), default=serialiser), err=True)
    click.get_current_context().exit(code)


def _validation_payload(exc: pyd.ValidationError) -> dict:
    msgs = []
    for err in exc.errors(include_url=False):
        loc = '.'.join(str(part) for part in err['loc'])
        msgs.append(f"{loc}: {err['msg']}" if loc else err['msg'])
    return {'code': 2, 'name': 'ValidationError', 'description': '; '.join(msgs)}


def handle_errors(fn):
    """Report library and validation errors as JSON on stderr and exit with their code."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TubeKernelError as exc:
            _fail(exc.to_dict(), exc.code)
        except pyd.ValidationError as exc:
            _fail(_validation_payload(exc), 2)
    return wrapper


def _load_config(ctx: click.Context, _param, value: str | None):
    """Turn a ``--config`` file into the group's ``default_map``."""
    if value is None:
        return value
    try:
        values = read_config_file(value)
    except TubeKernelError as exc:
        _fail(exc.to_dict(), exc.code)
    ctx.meta[CONFIG_TOLERANCES] = {k: values[k] for k in TOLERANCE_KEYS if k in values}
    default_map = {target: values[key] for key, target in GROUP_PARAMS.items() if key in values}
    for name, cmd in ctx.command.commands.items():
        params = {p.name for p in cmd.params}
        sub = {}
        if 'tol' in values and 'tol' in params:
            sub['tol'] = values['tol']
        for key, val in values.items():
            target = SHARED_PARAMS.get(key) or ('tol' if TOL_KEYS.get(name) == key else None)
            if target in params:
                sub[target] = val
        default_map[name] = sub
    ctx.default_map = {**(ctx.default_map or {}), **default_map}
    return value


def _run_config(ctx: click.Context, subcommand: str, poly: str, budget: int | None = None,
                **kwargs) -> RunConfig:
    """Validate the resolved options of a subcommand."""
    settings: CliSettings = ctx.obj
    tolerances = dict(ctx.meta.get(CONFIG_TOLERANCES, {}))
    tolerances.update({k: v for k, v in kwargs.items() if v is not None and k in TOLERANCE_KEYS})
    budgets = {k: v for k, v in kwargs.items() if v is not None and k in ('eta_cap', 'tau_nodes')}
    if budget is not None:
        budgets['panels'] = budget
    fmt = settings.output_format or ('csv' if subcommand in TABULAR_SUBCOMMANDS else 'json')
    if fmt == 'csv' and subcommand not in TABULAR_SUBCOMMANDS:
        raise DomainValidationError(f'CSV output is not available for {subcommand!r}.')
    cfg = RunConfig(polynomial=poly, subcommand=subcommand, tolerances=tolerances,
                    budgets=budgets, output={'format': fmt, 'path': settings.output},
                    reproducible=settings.reproducible)
    logger.debug('%s: %r', subcommand, cfg)
    return cfg


def _write(cfg: RunConfig, text: str):
    if cfg.output.path is None:
        click.echo(text, nl=False)
    else:
        with open(cfg.output.path, 'w', encoding='utf-8') as file:
            file.write(text)


def _emit_json(cfg: RunConfig, payload: dict):
    payload = dict(jsonable(payload))
    if cfg.reproducible:
        payload.pop('created', None)
    elif payload.get('created') is None:
        payload['created'] = time.time()
    _write(cfg, json.dumps(payload, default=serialiser, allow_nan=False, indent=2) + '\n')


def _emit_table(cfg: RunConfig, df: pd.DataFrame, extra: dict | None = None):
    if cfg.output.format == 'csv':
        _write(cfg, df.to_csv(index=False, float_format=conf.FLOAT_FORMAT, lineterminator='\n'))
    else:
        _emit_json(cfg, {**(extra or {}), 'rows': df.to_dict(orient='records')})


def _envelope(cfg: RunConfig, path: str | None) -> EnvelopeTable:
    """Load a cached envelope table (``envelope`` or ``analyze`` output), or compute one."""
    if path is None:
        return gap_intervals(cfg.polynomial, cfg.tolerances.tie_tol)
    try:
        with open(path, encoding='utf-8') as file:
            data = json.load(file)
        return EnvelopeTable.from_dict(data.get('envelope', data))
    except (OSError, ValueError, AttributeError, dacite.DaciteError) as exc:
        raise DomainValidationError(f'Cannot read envelope table {path!r}: {exc}') from exc


def _query(**kwargs) -> KernelQuery:
    derivs = kwargs.pop('derivs', None) or (0, 0, 0, 0)
    return KernelQuery(**kwargs, **dict(zip(('i1', 'j1', 'i2', 'j2'), derivs)))


# Option groups

def poly_option(fn):
    return click.option('--poly', required=True,
                        help='Polynomial as comma-separated ascending coefficients.')(fn)


def tol_option(default: float | None, what: str):
    return click.option('--tol', type=float, default=default, envvar=conf.TOL_ENV_VAR,
                        show_default=True, help=f'Tolerance of the {what}.')


def tie_tol_option(fn):
    return click.option('--tie-tol', type=float, default=conf.TIE_TOL, show_default=True,
                        help='Relative tie tolerance for global minima.')(fn)


def envelope_option(fn):
    return click.option('--envelope', 'envelope_path', type=click.Path(dir_okay=False),
                        default=None, help='Cached envelope table from `envelope`.')(fn)


def budget_options(fn):
    for opt in reversed([
            click.option('--budget', type=int, default=conf.PANEL_BUDGET, show_default=True,
                         help='Adaptive subintervals per quadrature.'),
            click.option('--eta-cap', type=int, default=conf.ETA_CAP, show_default=True,
                         help='Largest outer truncation radius.'),
            click.option('--tau-nodes', type=int, default=conf.TAU_NODE_BUDGET,
                         show_default=True, help='Largest inner grid size.')]):
        fn = opt(fn)
    return fn


def point_options(fn):
    """Boundary coordinates ``(x, y, t, h)`` and ``(r, s, u, k)`` of the two points."""
    for name in reversed(('x', 'y', 't', 'h', 'r', 's', 'u', 'k')):
        fn = click.option(f'--{name}', type=float, default=0.0, show_default=True)(fn)
    return fn


@click.group()
@click.option('--config', type=click.Path(exists=True, dir_okay=False), is_eager=True,
              expose_value=False, callback=_load_config, help='A key=value config file.')
@click.option('-v', '--verbose', count=True, help='-v for INFO, -vv for DEBUG logging.')
@click.option('--reproducible', is_flag=True, help='Omit the `created` timestamp.')
@click.option('--output', type=click.Path(dir_okay=False), default=None,
              help='Write results to this file instead of standard output.')
@click.option('--format', 'output_format', type=click.Choice(['json', 'csv']), default=None,
              help='Output format (default: CSV for sweep and probe, else JSON).')
@click.pass_context
def main(ctx: click.Context, verbose: int, reproducible: bool, output: str | None,
         output_format: str | None):
    """Singularities of the Szego kernel of polynomial tube domains."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    ctx.obj = CliSettings(reproducible=reproducible, output=output, output_format=output_format)


@main.command()
@poly_option
@tol_option(conf.CLUSTER_TOL, 'root clustering')
@click.pass_context
@handle_errors
def roots(ctx, poly, tol):
    """Real roots, complex pairs and convexity intervals of any nonzero polynomial."""
    cfg = _run_config(ctx, 'roots', poly)
    _emit_json(cfg, RootsReport.from_polynomial(cfg.polynomial, tol, cfg.reproducible))


@main.command()
@poly_option
@tie_tol_option
@envelope_option
@click.pass_context
@handle_errors
def analyze(ctx, poly, tie_tol, envelope_path):
    """Convexity, envelope table and singular-set structure of a domain."""
    cfg = _run_config(ctx, 'analyze', poly, tie_tol=tie_tol)
    env = _envelope(cfg, envelope_path)
    _emit_json(cfg, AnalysisReport.from_polynomial(cfg.polynomial, env, cfg.tolerances.tie_tol,
                                                   cfg.reproducible))


@main.command()
@poly_option
@tie_tol_option
@click.pass_context
@handle_errors
def envelope(ctx, poly, tie_tol):
    """Bitangent slopes and gap intervals; the output can be passed back with --envelope."""
    cfg = _run_config(ctx, 'envelope', poly, tie_tol=tie_tol)
    _emit_json(cfg, gap_intervals(cfg.polynomial, cfg.tolerances.tie_tol))


@main.command('lambda')
@poly_option
@click.option('--eta', type=float, required=True, help='The slope.')
@click.option('--asymptotics', is_flag=True, help='Also report the large-|eta| ratios.')
@tie_tol_option
@click.pass_context
@handle_errors
def lambda_(ctx, poly, eta, asymptotics, tie_tol):
    """Global minimizers of B_eta and the Legendre transform."""
    cfg = _run_config(ctx, 'lambda', poly, tie_tol=tie_tol)
    ms = minimizer_set(cfg.polynomial, eta, cfg.tolerances.tie_tol)
    payload = {**jsonable(ms), 'legendre': ms.legendre}
    if asymptotics:
        payload['asymptotics'] = asymptotic_ratios(cfg.polynomial, eta)
    _emit_json(cfg, payload)


def _classification(ctx, subcommand, poly, tol, tie_tol, envelope_path, point):
    cfg = _run_config(ctx, subcommand, poly, class_tol=tol, tie_tol=tie_tol)
    env = _envelope(cfg, envelope_path)
    return cfg, classify_pair(cfg.polynomial, env, _query(**point), cfg.tolerances.class_tol)


@main.command()
@poly_option
@point_options
@tol_option(conf.CLASS_TOL, 'classification')
@tie_tol_option
@envelope_option
@click.pass_context
@handle_errors
def margin(ctx, poly, tol, tie_tol, envelope_path, **point):
    """Convergence margin of a point pair."""
    cfg, cls = _classification(ctx, 'margin', poly, tol, tie_tol, envelope_path, point)
    _emit_json(cfg, {'margin': cls.margin, 'in_sigma': cls.in_sigma,
                     'on_diagonal': cls.on_diagonal, 'location': cls.location})


@main.command()
@poly_option
@point_options
@tol_option(conf.CLASS_TOL, 'classification')
@tie_tol_option
@envelope_option
@click.pass_context
@handle_errors
def classify(ctx, poly, tol, tie_tol, envelope_path, **point):
    """Singular-set membership of a point pair, with the branch it belongs to."""
    cfg, cls = _classification(ctx, 'classify', poly, tol, tie_tol, envelope_path, point)
    _emit_json(cfg, cls)


@main.command()
@poly_option
@click.option('--eta', type=float, required=True)
@click.option('--tau', type=float, required=True)
@tol_option(conf.QUAD_TOL, 'Laplace integral')
@click.option('--budget', type=int, default=conf.PANEL_BUDGET, show_default=True,
              help='Adaptive subintervals.')
@click.pass_context
@handle_errors
def nvalue(ctx, poly, eta, tau, tol, budget):
    """log N(eta, tau) through the recentred Laplace integral I(eta, tau)."""
    cfg = _run_config(ctx, 'nvalue', poly, budget=budget, quad_tol=tol)
    res = N_value(cfg.polynomial, eta, tau, cfg.tolerances.quad_tol, cfg.budgets.panels)
    _emit_json(cfg, {'log_N': res.log_N, 'I': res.I.value, 'err': res.I.abs_error_estimate,
                     'converged': res.I.converged, 'legendre': res.legendre,
                     'truncation_radius': res.I.truncation_radius, 'panels': res.I.panels})


@main.command('kernel')
@poly_option
@point_options
@click.option('--derivs', type=int, nargs=4, default=(0, 0, 0, 0), show_default=True,
              help='Derivative orders i1 j1 i2 j2.')
@click.option('--abs', 'absolute', is_flag=True, help='Evaluate the absolute-value integral.')
@tol_option(conf.KERNEL_TOL, 'kernel integral')
@budget_options
@tie_tol_option
@envelope_option
@click.pass_context
@handle_errors
def kernel_(ctx, poly, derivs, absolute, tol, budget, eta_cap, tau_nodes, tie_tol,
            envelope_path, **point):
    """The kernel, or its absolute-value majorant, at a point pair."""
    cfg = _run_config(ctx, 'kernel', poly, budget=budget, eta_cap=eta_cap, tau_nodes=tau_nodes,
                      kernel_tol=tol, tie_tol=tie_tol)
    env = _envelope(cfg, envelope_path)
    q = _query(derivs=derivs, **point)
    b, tol, budget = cfg.polynomial, cfg.tolerances.kernel_tol, cfg.budgets.to_budget()
    class_tol = cfg.tolerances.class_tol
    if absolute:
        ev = abs_kernel(b, env, q, tol, budget, class_tol)
    else:
        ev = kernel(b, env, q, tol, budget, class_tol, strict=False)
    _emit_json(cfg, {'status': ev.status, 'value': ev.value, 'err': ev.error_estimate,
                     'kind': ev.kind, 'margin': ev.margin, 'eta_truncation': ev.eta_truncation,
                     's': ev.s, 'm': ev.m})
    if ev.status == 'budget_exceeded':
        raise NonConvergenceError(
            f'Kernel integral did not reach tolerance {tol!r} within the budget '
            f'(error estimate {ev.error_estimate!r}).')


@main.command()
@poly_option
@click.option('--x', type=float, required=True)
@click.option('--r', type=float, required=True)
@click.option('--delta0', type=float, default=0.1, show_default=True)
@click.option('--halvings', type=int, default=4, show_default=True)
@tol_option(conf.PROBE_TOL, 'kernel integrals')
@budget_options
@tie_tol_option
@envelope_option
@click.pass_context
@handle_errors
def probe(ctx, poly, x, r, delta0, halvings, tol, budget, eta_cap, tau_nodes, tie_tol,
          envelope_path):
    """Absolute kernel values at a boundary pair as the height is halved."""
    cfg = _run_config(ctx, 'probe', poly, budget=budget, eta_cap=eta_cap, tau_nodes=tau_nodes,
                      kernel_tol=tol, tie_tol=tie_tol)
    env = _envelope(cfg, envelope_path)
    res = divergence_probe(cfg.polynomial, env, x, r, delta0, halvings,
                           cfg.tolerances.kernel_tol, cfg.budgets.to_budget(),
                           cfg.tolerances.class_tol)
    _emit_table(cfg, res.to_frame(), {'in_sigma': res.in_sigma, 'complete': res.complete,
                                      'diverging': res.diverging})
    if not res.complete:
        raise NonConvergenceError(
            f'Probe stopped after {len(res.values)} of {halvings + 1} entries: '
            f'budget exhausted at delta={res.deltas[-1]!r}.')


@main.command()
@poly_option
@click.option('--quantity', required=True,
              type=click.Choice(['lambda', 'envelope', 'margin', 'nvalue', 'kernel']))
@click.option('--grid', required=True, help='Main axis as start:stop:count.')
@click.option('--r-grid', default=None, help='Second axis of a margin product sweep.')
@click.option('--mode', type=click.Choice(['product', 'diagonal', 'midpoint']), default=None,
              help='Margin sweep nodes (default: product with --r-grid, else diagonal).')
@click.option('--half-width', type=float, default=0.0, show_default=True,
              help='Half-width for midpoint margin sweeps.')
@click.option('--eta', type=float, default=None, help='Fixed slope of a tau-axis nvalue sweep.')
@click.option('--tau', type=float, default=None, help='Fixed tau of an eta-axis nvalue sweep.')
@click.option('--delta', type=float, default=0.0, show_default=True,
              help='Height of kernel sweeps.')
@tol_option(None, 'swept quantity')
@budget_options
@tie_tol_option
@envelope_option
@click.option('--workers', type=int, default=1, show_default=True,
              help='Evaluate grid nodes in this many processes.')
@click.pass_context
@handle_errors
def sweep(ctx, poly, quantity, grid, r_grid, mode, half_width, eta, tau, delta, tol, budget,
          eta_cap, tau_nodes, tie_tol, envelope_path, workers):
    """Tabulate a quantity over a grid, one row per node."""
    tols = {'margin': 'class_tol', 'nvalue': 'quad_tol', 'kernel': 'kernel_tol'}
    extra = {tols[quantity]: tol} if quantity in tols else {}
    cfg = _run_config(ctx, 'sweep', poly, budget=budget, eta_cap=eta_cap, tau_nodes=tau_nodes,
                      tie_tol=tie_tol, **extra)
    if workers < 1:
        raise DomainValidationError(f'workers must be positive, got {workers}.')
    b, tl = cfg.polynomial, cfg.tolerances
    axis = parse_grid(grid)
    if quantity == 'lambda':
        df = lambda_sweep(b, axis, tl.tie_tol, workers)
    elif quantity == 'envelope':
        df = envelope_sweep(b, _envelope(cfg, envelope_path), axis, workers)
    elif quantity == 'margin':
        mode = mode or ('product' if r_grid else 'diagonal')
        if mode == 'product':
            if r_grid is None:
                raise DomainValidationError('A product margin sweep needs --r-grid.')
            nodes = product_nodes(axis, parse_grid(r_grid))
        elif mode == 'diagonal':
            nodes = diagonal_nodes(axis)
        else:
            nodes = midpoint_nodes(axis, half_width)
        df = margin_sweep(b, _envelope(cfg, envelope_path), nodes, tl.class_tol, workers)
    elif quantity == 'nvalue':
        if (eta is None) == (tau is None):
            raise DomainValidationError('An nvalue sweep needs exactly one of --eta and --tau.')
        nodes = ([(float(e), tau) for e in axis] if tau is not None
                 else [(eta, float(t)) for t in axis])
        df = nvalue_sweep(b, nodes, tl.quad_tol, cfg.budgets.panels, workers)
    else:
        df = kernel_sweep(b, _envelope(cfg, envelope_path), axis, delta, tl.kernel_tol,
                          cfg.budgets.to_budget(), workers, tl.class_tol)
    _emit_table(cfg, df)
