"""Run configuration for the command-line interface.

The settings are defined using Pydantic.  Each subcommand builds a :py:class:`RunConfig` from its
resolved options, so the checks here apply whether a value came from a flag, a ``--config`` file
or the ``TUBEKERNEL_TOL`` environment variable.

Config files are plain ``key=value`` lines::

    # double well
    poly = 0,0,-1,0,0.25
    tolerances.kernel_tol = 1e-5
    panels = 800

Blank lines and ``#`` comments are ignored; a dotted key is reduced to its last component.
"""
import math
import typing as ty

import numpy as np
import pydantic as pyd

from . import conf
from .errors import DomainValidationError
from .kernel import Budget
from .polynomial import Polynomial, from_text, validate_domain

Subcommand = ty.Literal['roots', 'analyze', 'envelope', 'lambda', 'margin', 'classify', 'nvalue',
                        'kernel', 'probe', 'sweep']

RAW_SUBCOMMANDS = frozenset({'roots'})
"""Subcommands that accept any nonzero polynomial, not only domain-defining ones."""

CONFIG_KEYS = frozenset({'poly', 'tol', 'tie_tol', 'quad_tol', 'class_tol', 'kernel_tol',
                         'panels', 'eta_cap', 'tau_nodes', 'format', 'output'})
"""Keys accepted in a ``--config`` file."""


class Tolerances(pyd.BaseModel):
    """Tolerances of the numerical stages."""

    tie_tol: pyd.PositiveFloat = conf.TIE_TOL
    """Relative tolerance for ties between global minimum values."""

    quad_tol: pyd.PositiveFloat = conf.QUAD_TOL
    """Tolerance of the Laplace-type integrals."""

    class_tol: pyd.PositiveFloat = conf.CLASS_TOL
    """Tolerance of the singular-set classification."""

    kernel_tol: pyd.PositiveFloat = conf.KERNEL_TOL
    """Relative tolerance of kernel evaluations."""


class Budgets(pyd.BaseModel):
    """Work limits of the adaptive integrators."""

    panels: pyd.PositiveInt = conf.PANEL_BUDGET
    """Adaptive subintervals per quadrature."""

    eta_cap: pyd.PositiveInt = conf.ETA_CAP
    """Largest outer truncation radius for kernel integrals."""

    tau_nodes: pyd.PositiveInt = conf.TAU_NODE_BUDGET
    """Largest inner grid size for kernel integrals."""

    def to_budget(self) -> Budget:
        """Convert to the budget record used by :py:mod:`tubekernel.kernel`."""
        return Budget(panels=self.panels, eta_cap=float(self.eta_cap), tau_nodes=self.tau_nodes)


class OutputSpec(pyd.BaseModel):
    """Where and how results are written."""

    format: ty.Literal['json', 'csv'] = 'json'
    """Output format; CSV is only available for tabular subcommands."""

    path: str | None = None
    """Destination file, or ``None`` for standard output."""


class RunConfig(pyd.BaseModel):
    """Validated settings of one CLI invocation."""

    polynomial: Polynomial
    """The polynomial, given as comma-separated ascending coefficients."""

    subcommand: Subcommand

    tolerances: Tolerances = Tolerances()
    budgets: Budgets = Budgets()
    output: OutputSpec = OutputSpec()

    reproducible: bool = False
    """Suppress the ``created`` timestamp so that identical runs give identical output."""

    @pyd.field_validator('polynomial', mode='before')
    @classmethod
    def _parse_text(cls, value):
        """Accept the text format."""
        if isinstance(value, str):
            return from_text(value)
        return value

    @pyd.model_validator(mode='after')
    def _check_domain(self) -> 'RunConfig':
        """Domain-defining polynomials must have even degree at least 4 and positive leading
        coefficient."""
        if self.subcommand in RAW_SUBCOMMANDS:
            assert not self.polynomial.is_zero, 'The zero polynomial is not allowed.'
        else:
            validate_domain(self.polynomial)
        return self


def read_config_file(path: str) -> dict[str, str]:
    """Read a ``key=value`` config file.

    Args:
        path (str):
            The file to read.

    Returns:
        dict[str, str]: The raw values, keyed by flat key names.

    Raises:
        DomainValidationError: on malformed lines or unknown keys.
    """
    ret = {}
    with open(path, encoding='utf-8') as file:
        for lineno, line in enumerate(file, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise DomainValidationError(f'{path}:{lineno}: expected key=value, got {line!r}.')
            key, value = (s.strip() for s in line.split('=', 1))
            key = key.rsplit('.', 1)[-1]
            if key not in CONFIG_KEYS:
                raise DomainValidationError(f'{path}:{lineno}: unknown key {key!r}.')
            ret[key] = value
    return ret


def parse_grid(text: str) -> np.ndarray:
    """Parse a grid spec ``start:stop:count`` into evenly spaced nodes.

    Raises:
        DomainValidationError: if the spec is malformed, ``count < 1``, a number is not finite,
            or ``count == 1`` with ``start != stop``.
    """
    parts = text.split(':')
    if len(parts) != 3:
        raise DomainValidationError(f'Grid must be start:stop:count, got {text!r}.')
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise DomainValidationError(f'Grid must be start:stop:count, got {text!r}.') from exc
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise DomainValidationError(f'Grid bounds must be finite, got {text!r}.')
    if count < 1:
        raise DomainValidationError(f'Grid count must be positive, got {count}.')
    if count == 1 and start != stop:
        raise DomainValidationError(f'A one-node grid needs start == stop, got {text!r}.')
    return np.linspace(start, stop, count)
