"""Transmitted-light spectrum up to fourth order in the feeding rate.

The spectrum splits into delta-function lines at the probe frequency,
kept as scalar weights at orders alpha^2 and alpha^4, and a fourth-order
inelastic spectral density sampled on a frequency grid.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from ._validation import check_frequency_grid
from .exceptions import CavityEITError, ParameterError
from .greens import resolvent
from .model import CAVITY, RYDBERG, effective_matrix_symmetric, polariton_energies
from .tmatrix import compute_tmatrix

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class SpectrumResult:
    """Elastic line weights and inelastic density on a frequency grid."""

    elastic_weight_2: float
    elastic_weight_4: float
    omega: np.ndarray
    inelastic: np.ndarray
    t0: complex
    units: str = "gamma_e"

    @property
    def grid(self):
        step = float(self.omega[1] - self.omega[0]) if self.omega.size > 1 else 0.0
        return {
            "min": float(self.omega[0]),
            "max": float(self.omega[-1]),
            "step": step,
            "points": int(self.omega.size),
            "units": self.units,
        }

    def pairs(self):
        return list(zip(self.omega.tolist(), self.inelastic.tolist()))


def _g0(params):
    return resolvent(effective_matrix_symmetric(params).matrix, 0.0)


def mean_amp_order1(params):
    """Coefficient of ``sqrt(2 pi) delta(w)`` in ``<a(w)>`` at order alpha."""
    return complex(params.alpha * _g0(params)[CAVITY, CAVITY])


def mean_amp_order3(params, t0):
    """Coefficient of ``sqrt(2 pi) delta(w)`` in ``<a(w)>`` at order alpha^3."""
    g = _g0(params)
    g_sa = g[RYDBERG, CAVITY]
    g_as = g[CAVITY, RYDBERG]
    return complex(params.alpha**3 * g_sa**2 * complex(t0) * abs(g_as) ** 2)


def elastic_weights(params, t0):
    """Weights of ``delta(w)`` in the detected spectrum at orders 2 and 4.

    The order-4 line is the interference of the first- and third-order mean
    fields and may be negative.
    """
    a1 = mean_amp_order1(params)
    a3 = mean_amp_order3(params, t0)
    w2 = 4.0 * np.pi * params.gamma_c_d * abs(a1) ** 2
    w4 = 4.0 * params.gamma_c_d * 2.0 * np.pi * (np.conj(a1) * a3).real
    return float(w2), float(w4)


def inelastic_density(params, t0, omega):
    """Fourth-order inelastic spectral density ``S_i(w)``.

    ``-4 gamma_c_d alpha^4 |G_as(w)|^2 |T0|^2 |G_sa(0)|^4 Im G_ss(-w)``;
    non-negative because ``Im G_ss <= 0`` on the real axis.
    """
    scalar = np.ndim(omega) == 0
    w = check_frequency_grid(omega)
    m = effective_matrix_symmetric(params).matrix
    g_pos = resolvent(m, w)
    g_neg = resolvent(m, -w)
    g0 = resolvent(m, 0.0)
    prefactor = 4.0 * params.gamma_c_d * params.alpha**4 * abs(complex(t0)) ** 2
    prefactor *= abs(g0[RYDBERG, CAVITY]) ** 4
    density = -prefactor * np.abs(g_pos[:, CAVITY, RYDBERG]) ** 2 * g_neg[:, RYDBERG, RYDBERG].imag
    return float(density[0]) if scalar else density


def compute_spectrum(params, omega, tmatrix=None, tmatrix_method="closed_form"):
    """Full order-4 spectrum for ``params`` on the grid ``omega``."""
    w = check_frequency_grid(omega)
    if tmatrix is None:
        tmatrix = compute_tmatrix(params, method=tmatrix_method)
    w2, w4 = elastic_weights(params, tmatrix.t0)
    return SpectrumResult(w2, w4, w, inelastic_density(params, tmatrix.t0, w), complex(tmatrix.t0))


def log_density(density):
    return np.log10(np.maximum(density, LOG_FLOOR))


@dataclass
class SpectrumMap:
    """Inelastic density over a ``(omega_cf, omega)`` grid.

    ``density[i, j]`` belongs to ``omega_cf[i]`` and ``omega[j]``;
    ``overlays[i]`` holds ``(-e3, -e2, -e1, e1, e2, e3)`` sorted ascending.
    Columns whose T-matrix evaluation failed are NaN and listed in
    ``errors``.
    """

    omega: np.ndarray
    omega_cf: np.ndarray
    density: np.ndarray
    overlays: np.ndarray
    t0: np.ndarray
    valid: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def log10_density(self):
        out = np.full_like(self.density, np.nan)
        out[self.valid] = log_density(self.density[self.valid])
        return out


def _map_column(args):
    params, omega, omega_cf, tmatrix_method = args
    p = params.replace(omega_cf=float(omega_cf))
    energies = polariton_energies(p)
    overlay = np.sort(np.concatenate([energies, -energies]))
    try:
        tm = compute_tmatrix(p, method=tmatrix_method)
        return inelastic_density(p, tm.t0, omega), overlay, complex(tm.t0), None
    except CavityEITError as exc:
        return np.full(omega.shape, np.nan), overlay, complex(np.nan, np.nan), f"{type(exc).__name__}: {exc}"


def spectrum_map(params, omega, omega_cf, workers=1, tmatrix_method="closed_form"):
    """Inelastic density map with polariton overlay curves.

    Each ``omega_cf`` column recomputes ``T0``.  Columns are evaluated in
    parallel when ``workers > 1``; assembly follows grid order.
    """
    w = check_frequency_grid(omega)
    cf = check_frequency_grid(omega_cf, name="omega_cf")
    if np.any(cf <= 0):
        raise ParameterError("omega_cf grid must be strictly positive")
    jobs = [(params, w, x, tmatrix_method) for x in cf]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(_map_column, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        columns = [_map_column(job) for job in jobs]
    density = np.array([c[0] for c in columns])
    overlays = np.array([c[1] for c in columns])
    t0s = np.array([c[2] for c in columns])
    errors = {i: c[3] for i, c in enumerate(columns) if c[3] is not None}
    valid = np.ones(density.shape, dtype=bool)
    for i in errors:
        logger.warning("omega_cf=%g column invalid: %s", cf[i], errors[i])
        valid[i] = False
    return SpectrumMap(w, cf, density, overlays, t0s, valid, errors)


def find_ridges(omega, density, rel_prominence=0.01):
    """Interior local maxima of one column whose prominence exceeds ``rel_prominence * max``.

    Returns ``(positions, prominences)``.
    """
    density = np.asarray(density, dtype=float)
    top = np.max(density)
    if not np.isfinite(top) or top <= 0:
        return np.array([]), np.array([])
    peaks, props = find_peaks(density, prominence=rel_prominence * top)
    return np.asarray(omega)[peaks], props["prominences"]


def ridge_offsets(spec_map, targets, rel_prominence=0.01):
    """Distance from every ridge to the nearest target, per column.

    ``targets`` is an ``(n_cf, k)`` array.  Returns a list of arrays, one
    per column (empty for invalid columns).
    """
    out = []
    for i in range(spec_map.omega_cf.size):
        if not spec_map.valid[i].all():
            out.append(np.array([]))
            continue
        ridges, _ = find_ridges(spec_map.omega, spec_map.density[i], rel_prominence)
        t = np.asarray(targets[i])
        out.append(np.array([np.min(np.abs(t - r)) for r in ridges]))
    return out

