"""Log-log power-law fits used to read off perturbative orders."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError


@dataclass(frozen=True)
class PowerLaw:
    exponent: float
    prefactor: float
    max_residual: float
    curvature: float


def fit_power_law(x, y):
    """Least-squares fit of ``log|y| = log(prefactor) + exponent * log(x)``.

    ``max_residual`` is the largest absolute residual in natural-log units;
    ``curvature`` is the quadratic coefficient of a second fit in ``log x``
    (zero for an exact power law).
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("x and y must be 1-D arrays of equal length")
    if x.size < 3:
        raise ParameterError("need at least 3 points for a power-law fit")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    centered = lx - lx.mean()
    curvature = np.polyfit(centered, ly, 2)[0]
    return PowerLaw(float(slope), float(np.exp(intercept)), float(np.max(np.abs(resid))), float(curvature))
