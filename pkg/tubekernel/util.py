"""Utility functions for converting results to JSON-compatible data."""
import dataclasses
import math
from typing import Any

import numpy as np


def is_dataclass_instance(obj) -> bool:
    """Returns whether the object is a dataclass instance."""
    return dataclasses.is_dataclass(obj) and not isinstance(obj, type)


def field_key(name: str) -> str:
    """Map a dataclass field name to its output key.

    A trailing underscore, used to avoid clashing with Python keywords (``lambda_``),
    is dropped.
    """
    return name[:-1] if name.endswith('_') else name


def dc_dict(dataclass_inst) -> dict[str, Any]:
    """Convert a dataclass instance to a dict, recursing into nested dataclasses and lists.

    Properties are not included; only dataclass fields.
    """
    def _fn(obj):
        if is_dataclass_instance(obj):
            return dc_dict(obj)
        if isinstance(obj, (list, tuple)):
            return [_fn(o) for o in obj]
        return obj
    return {field_key(field.name): _fn(getattr(dataclass_inst, field.name))
            for field in dataclasses.fields(dataclass_inst)}


def finite_or_none(x: float) -> float | None:
    """Return ``x`` as a float, or ``None`` if it is infinite or NaN (JSON has no such values)."""
    x = float(x)
    return x if math.isfinite(x) else None


def jsonable(obj: Any) -> Any:
    """Recursively replace non-finite floats by ``None`` and convert numpy containers, so that
    :py:func:`json.dumps` can be called with ``allow_nan=False``."""
    if is_dataclass_instance(obj):
        return jsonable(dc_dict(obj))
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return finite_or_none(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [finite_or_none(obj.real), finite_or_none(obj.imag)]
    return obj


def serialiser(obj: Any) -> Any:
    """Serialiser for :py:func:`json.dump` or :py:func:`json.dumps`."""
    if is_dataclass_instance(obj):
        return jsonable(obj)
    if isinstance(obj, (np.ndarray, np.generic, complex)):
        return jsonable(obj)
    # Neither built-in or our serialiser understand this data type
    raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')
