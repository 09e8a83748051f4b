"""Input validation helpers shared by the library and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

SUM_TOL = 1e-9
RENORM_TOL = 1e-6


def check_table(mass, name="table", *, renormalize=False, axis=None):
    """Validate a probability table, returning a float copy.

    With ``axis`` given, every slice along those trailing axes must sum to one
    (a conditional kernel); otherwise the whole table must. Deviations up to
    ``RENORM_TOL`` are renormalized when ``renormalize`` is set.
    """
    arr = np.array(mass, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite entries")
    if np.any(arr < 0):
        raise ValidationError(f"{name}: negative entries")
    sums = arr.sum(axis=axis, keepdims=True) if axis is not None else arr.sum()
    dev = np.max(np.abs(sums - 1.0))
    if dev <= SUM_TOL:
        return arr
    if dev <= RENORM_TOL + 1e-12:
        if renormalize:
            return arr / sums
        raise ValidationError(
            f"{name}: sums deviate from 1 by {dev:.3g} (renormalization is off)"
        )
    raise ValidationError(f"{name}: sums deviate from 1 by {dev:.3g}")


def check_names(names, *, where="variables"):
    names = tuple(names)
    for n in names:
        if not isinstance(n, str) or not n:
            raise ValidationError(f"{where}: variable names must be non-empty strings")
    if len(set(names)) != len(names):
        raise ValidationError(f"{where}: duplicate variable names {names}")
    return names


def as_name_tuple(spec):
    """Accept a single name, a whitespace-separated string or any iterable."""
    if spec is None:
        return ()
    if isinstance(spec, str):
        return tuple(spec.split())
    return tuple(spec)


def check_cardinality(value, name):
    if int(value) != value or value < 1:
        raise ValidationError(f"{name}: cardinality must be a positive integer, got {value!r}")
    return int(value)
