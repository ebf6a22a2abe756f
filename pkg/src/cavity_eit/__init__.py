"""Transmission spectra of a cavity Rydberg-EIT medium at weak feeding.

The analytic side (``model``, ``greens``, ``tmatrix``, ``spectrum``)
evaluates elastic and inelastic spectra to fourth order in the feeding
rate.  ``oracle`` solves the driven-dissipative master equation of a few
atoms in a truncated Fock space and serves as an independent reference.
All frequencies are in units of ``gamma_e``.
"""

__version__ = "0.1.0"

from .estimators import CavityEITSpectrum, FockSpaceOracle, PowerLawRegressor
from .exceptions import (
    BasisSizeError,
    CavityEITError,
    ConfigError,
    ConvergenceError,
    DegenerateSteadyStateError,
    NonPerturbativeError,
    ParameterError,
    ResonantResummationError,
    SingularResolventError,
)
from .greens import greens, greens_array, greens_time_domain_check, resolvent
from .model import SystemParams, effective_matrix, polariton_energies, to_mhz
from .oracle import alpha_scaling, build_model, emission_spectrum, steady_state
from .spectrum import compute_spectrum, elastic_weights, find_ridges, inelastic_density, spectrum_map
from .tmatrix import compute_tmatrix, loop_integral, t_tilde0_closed, t_tilde0_continuum

__all__ = [
    "BasisSizeError", "CavityEITError", "CavityEITSpectrum", "ConfigError", "ConvergenceError",
    "DegenerateSteadyStateError", "FockSpaceOracle", "NonPerturbativeError", "ParameterError",
    "PowerLawRegressor", "ResonantResummationError", "SingularResolventError", "SystemParams",
    "alpha_scaling", "build_model", "compute_spectrum", "compute_tmatrix", "effective_matrix",
    "elastic_weights", "emission_spectrum", "find_ridges", "greens", "greens_array",
    "greens_time_domain_check", "inelastic_density", "loop_integral", "polariton_energies",
    "resolvent", "spectrum_map", "steady_state", "t_tilde0_closed", "t_tilde0_continuum", "to_mhz",
]
