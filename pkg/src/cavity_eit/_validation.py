"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import ParameterError


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ParameterError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ParameterError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_finite(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ParameterError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


def check_frequency_grid(omega, name="omega", allow_scalar=True):
    """Return ``omega`` as a 1-D float array, rejecting empty or non-finite input.

    Scalars are promoted to shape ``(1,)`` when ``allow_scalar`` is true.
    """
    arr = np.asarray(omega, dtype=float)
    if arr.ndim == 0:
        if not allow_scalar:
            raise ParameterError(f"{name} must be one-dimensional")
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ParameterError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def check_positions(positions, min_count=1):
    """Validate an ``(N, 3)`` array of atom positions."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ParameterError(f"positions must have shape (N, 3), got {pos.shape}")
    if pos.shape[0] < min_count:
        raise ParameterError(f"need at least {min_count} positions, got {pos.shape[0]}")
    if not np.all(np.isfinite(pos)):
        raise ParameterError("positions contain non-finite values")
    return pos


def check_sector(sector):
    if sector not in ("symmetric", "q_nonzero"):
        raise ParameterError(f"sector must be 'symmetric' or 'q_nonzero', got {sector!r}")
    return sector
