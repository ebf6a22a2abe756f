"""scikit-learn style front ends.

``fit`` resolves parameters and computes everything that does not depend on
the query frequencies; ``predict`` evaluates spectra on frequency samples
``X`` (1-D or a single column).  ``get_params``/``set_params``/``clone``
come from :class:`sklearn.base.BaseEstimator`, so the estimators can be
swept with the usual tooling.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_frequency_grid
from .model import SystemParams, polariton_energies
from .oracle import build_model, emission_spectrum, steady_state
from .scaling import fit_power_law
from .spectrum import compute_spectrum, elastic_weights, inelastic_density, spectrum_map
from .tmatrix import compute_tmatrix


def _frequencies(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single frequency column, got shape {X.shape}")
        X = X[:, 0]
    return check_frequency_grid(X, name="X")


class _PhysicalParamsMixin:
    def _system_params(self):
        names = SystemParams.field_names()
        return SystemParams(**{k: v for k, v in self.get_params(deep=False).items() if k in names})


class CavityEITSpectrum(_PhysicalParamsMixin, BaseEstimator):
    """Analytic fourth-order transmission spectrum.

    Constructor arguments mirror :class:`~cavity_eit.model.SystemParams`
    plus ``tmatrix_method``.

    Attributes
    ----------
    params_ : SystemParams
    tmatrix_ : TMatrixResult
    elastic_weight_2_, elastic_weight_4_ : float
    polariton_energies_ : ndarray of shape (3,)
    """

    def __init__(self, gamma_e=1.0, gamma_r=0.15, gamma_c_f=0.01, gamma_c_d=0.3,
                 cooperativity=5.0, omega_cf=2.0, delta_c=0.0, delta_e=0.0, delta_r=0.0,
                 alpha=0.01, c6=5.0e4, volume=1.0e6, n_atoms=4000,
                 tmatrix_method="closed_form"):
        self.gamma_e = gamma_e
        self.gamma_r = gamma_r
        self.gamma_c_f = gamma_c_f
        self.gamma_c_d = gamma_c_d
        self.cooperativity = cooperativity
        self.omega_cf = omega_cf
        self.delta_c = delta_c
        self.delta_e = delta_e
        self.delta_r = delta_r
        self.alpha = alpha
        self.c6 = c6
        self.volume = volume
        self.n_atoms = n_atoms
        self.tmatrix_method = tmatrix_method

    def fit(self, X=None, y=None):
        self.params_ = self._system_params()
        self.tmatrix_ = compute_tmatrix(self.params_, method=self.tmatrix_method)
        self.elastic_weight_2_, self.elastic_weight_4_ = elastic_weights(self.params_, self.tmatrix_.t0)
        self.polariton_energies_ = polariton_energies(self.params_)
        return self

    def predict(self, X):
        """Inelastic spectral density at the frequencies in ``X``."""
        check_is_fitted(self, "tmatrix_")
        return inelastic_density(self.params_, self.tmatrix_.t0, _frequencies(X))

    def transform(self, X):
        """``log10`` of the inelastic density as a single column."""
        density = self.predict(X)
        return np.log10(np.maximum(density, 1e-300))[:, None]

    def spectrum(self, X):
        check_is_fitted(self, "tmatrix_")
        return compute_spectrum(self.params_, _frequencies(X), tmatrix=self.tmatrix_)

    def map(self, omega, omega_cf, workers=1):
        """Density map over ``(omega_cf, omega)``; see :func:`spectrum_map`."""
        return spectrum_map(self._system_params(), omega, omega_cf, workers=workers,
                            tmatrix_method=self.tmatrix_method)


class FockSpaceOracle(_PhysicalParamsMixin, BaseEstimator):
    """Truncated Fock-space reference model for a few atoms.

    ``positions`` defaults to two atoms on the x axis separated by
    ``separation``.

    Attributes
    ----------
    model_ : FockModel
    steady_state_ : SteadyState
    mean_field_ : complex
        ``<a>`` in the steady state.
    photon_number_ : float
        ``<a^dag a>`` in the steady state.
    """

    def __init__(self, gamma_e=1.0, gamma_r=0.15, gamma_c_f=0.01, gamma_c_d=0.3,
                 cooperativity=5.0, omega_cf=2.0, delta_c=0.0, delta_e=0.0, delta_r=0.0,
                 alpha=1e-3, c6=5.0, volume=1.0e6, n_atoms=2, positions=None,
                 separation=1.0, n_max=2, spectrum_method="resolvent"):
        self.gamma_e = gamma_e
        self.gamma_r = gamma_r
        self.gamma_c_f = gamma_c_f
        self.gamma_c_d = gamma_c_d
        self.cooperativity = cooperativity
        self.omega_cf = omega_cf
        self.delta_c = delta_c
        self.delta_e = delta_e
        self.delta_r = delta_r
        self.alpha = alpha
        self.c6 = c6
        self.volume = volume
        self.n_atoms = n_atoms
        self.positions = positions
        self.separation = separation
        self.n_max = n_max
        self.spectrum_method = spectrum_method

    def _positions(self):
        if self.positions is not None:
            return np.asarray(self.positions, dtype=float)
        return line_positions(self.n_atoms, self.separation)

    def fit(self, X=None, y=None):
        params = self._system_params()
        self.model_ = build_model(params, self._positions(), n_max=self.n_max)
        self.steady_state_ = steady_state(self.model_)
        self.mean_field_ = self.steady_state_.mean_field()
        self.photon_number_ = self.steady_state_.photon_number()
        return self

    def spectrum(self, X, **kwargs):
        check_is_fitted(self, "steady_state_")
        return emission_spectrum(self.model_, self.steady_state_, _frequencies(X),
                                 method=self.spectrum_method, **kwargs)

    def predict(self, X):
        """Oracle inelastic density at the frequencies in ``X``."""
        return self.spectrum(X).density


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``y = prefactor * x**exponent`` in log-log space."""

    def fit(self, X, y):
        x = _frequencies(X)
        law = fit_power_law(x, np.asarray(y, dtype=float))
        self.exponent_ = law.exponent
        self.prefactor_ = law.prefactor
        self.max_residual_ = law.max_residual
        self.curvature_ = law.curvature
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        return self.prefactor_ * _frequencies(X) ** self.exponent_


def line_positions(n_atoms, separation):
    """``n_atoms`` evenly spaced on the x axis."""
    pos = np.zeros((int(n_atoms), 3))
    pos[:, 0] = separation * np.arange(int(n_atoms))
    return pos
