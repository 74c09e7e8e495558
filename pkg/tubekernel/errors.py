"""Exceptions raised by the tubekernel package.

Every exception carries an exit ``code`` for the command-line interface and can be rendered as
a compact JSON object with the same ``code``/``name``/``description`` triple used for all error
output.
"""
import json
from typing import Any


class TubeKernelError(Exception):
    """Base class for all errors raised by this package."""

    code: int = 1
    """Process exit code used by the command-line interface."""

    def __init__(self, description: str) -> None:
        super().__init__(description)
        self.description = description

    @property
    def name(self) -> str:
        """Name of the error class, as reported in JSON error objects."""
        return type(self).__name__

    def to_dict(self) -> dict[str, Any]:
        """Return the error as a JSON-compatible dict."""
        return {
            'code': self.code,
            'name': self.name,
            'description': self.description,
        }

    def to_json(self) -> str:
        """Return the error as a compact JSON string."""
        return json.dumps(self.to_dict(), separators=(',', ':'))


class DomainValidationError(TubeKernelError):
    """Invalid input: malformed polynomial, parameter outside its domain, bad grid, etc."""
    code = 2


class NegativePolynomialError(DomainValidationError):
    """A polynomial expected to be nonnegative (with an even-order zero at the origin) is not.

    Args:
        description (str):
            Human-readable explanation.
        witness (float | None):
            A point at which the polynomial was found to be negative, if any.
        value (float | None):
            The polynomial value at ``witness``.
    """

    def __init__(self, description: str, witness: float | None = None,
                 value: float | None = None) -> None:
        super().__init__(description)
        self.witness = witness
        self.value = value

    def to_dict(self) -> dict[str, Any]:
        ret = super().to_dict()
        if self.witness is not None:
            ret['witness'] = self.witness
            ret['value'] = self.value
        return ret


class NonConvergenceError(TubeKernelError):
    """A numerical procedure did not reach the requested accuracy within its budget."""
    code = 3


class InconsistentClassificationError(NonConvergenceError):
    """The convergence margin and the minimizer-set membership test disagree.

    This indicates an inaccurate envelope table rather than a user error.
    """
