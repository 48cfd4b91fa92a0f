"""Input validation helpers shared by the model modules."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when a model or operation receives inadmissible input."""


def as_float_vector(x, name, *, positive=False, length=None):
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValidationError(f"{name} must be nonempty")
    if length is not None and arr.size != length:
        raise ValidationError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    if positive and np.any(arr <= 0):
        raise ValidationError(f"{name} must be strictly positive")
    return arr


def check_probability_vector(p, name="p", atol=1e-12):
    """Return ``p`` as a float array after checking positivity and unit sum."""
    arr = as_float_vector(p, name, positive=True)
    if abs(arr.sum() - 1.0) > atol:
        raise ValidationError(f"{name} must sum to 1 (sum={arr.sum():.15g})")
    return arr


def check_positive_scalar(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {x}")
    return x


def check_int(x, name, *, minimum=None, even=False):
    if isinstance(x, bool) or int(x) != x:
        raise ValidationError(f"{name} must be an integer, got {x!r}")
    x = int(x)
    if minimum is not None and x < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {x}")
    if even and x % 2:
        raise ValidationError(f"{name} must be even, got {x}")
    return x


def check_stochastic_matrix(M, atol=1e-12):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("M must be a square matrix")
    if np.any(M < 0):
        raise ValidationError("M must have nonnegative entries")
    if np.max(np.abs(M.sum(axis=1) - 1.0)) > atol:
        raise ValidationError("rows of M must sum to 1")
    return M
