"""Physical parameters and effective single-excitation matrices.

All frequencies and rates are expressed in units of the intermediate-state
decay rate ``gamma_e``.  Basis order of the symmetric sector is fixed to
``(a, b, s)``: cavity mode, symmetric intermediate-state spinwave, symmetric
Rydberg spinwave.  The ``q != 0`` sector uses ``(b_q, c_q)``.
"""

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ._validation import check_finite, check_positive
from .exceptions import ParameterError

#: Intermediate-state decay rate in cyclic MHz (gamma_e = 2*pi x 3 MHz).
GAMMA_E_MHZ = 3.0

#: Index of each mode inside the symmetric-sector matrices.
CAVITY, BRIGHT, RYDBERG = 0, 1, 2


@dataclass(frozen=True)
class SystemParams:
    """Rates, detunings, coupling and geometry of the cavity Rydberg-EIT medium.

    Parameters
    ----------
    gamma_e, gamma_r : float
        Intermediate- and Rydberg-state decay rates.
    gamma_c_f, gamma_c_d : float
        Cavity decay through the feeding and detection mirrors.
    cooperativity : float
        ``C = g^2 N / (2 gamma_c gamma_e)``.
    omega_cf : float
        Control-field Rabi frequency.
    delta_c, delta_e, delta_r : float
        Cavity, single-photon and two-photon detunings.
    alpha : float
        Feeding rate ``sqrt(2 gamma_c_f I_in)``.
    c6 : float
        Van der Waals coefficient (frequency x length^6).
    volume : float
        Sample volume (length^3).
    n_atoms : int
        Atom number; only used by the discrete pair sum and the oracle.
    """

    gamma_e: float = 1.0
    gamma_r: float = 0.15
    gamma_c_f: float = 0.01
    gamma_c_d: float = 0.3
    cooperativity: float = 5.0
    omega_cf: float = 2.0
    delta_c: float = 0.0
    delta_e: float = 0.0
    delta_r: float = 0.0
    alpha: float = 0.01
    c6: float = 5.0e4
    volume: float = 1.0e6
    n_atoms: int = 4000

    def __post_init__(self):
        for name in ("gamma_e", "gamma_r", "gamma_c_f", "gamma_c_d", "volume"):
            check_positive(getattr(self, name), name)
        for name in ("cooperativity", "omega_cf", "alpha"):
            check_positive(getattr(self, name), name, strict=False)
        for name in ("delta_c", "delta_e", "delta_r", "c6"):
            check_finite(getattr(self, name), name)
        if not self.gamma_c_d > self.gamma_c_f:
            raise ParameterError(
                "gamma_c_d must exceed gamma_c_f "
                f"(got gamma_c_d={self.gamma_c_d}, gamma_c_f={self.gamma_c_f})"
            )
        if isinstance(self.n_atoms, bool) or int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ParameterError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        # normalise numeric types so equality and serialization are stable
        for f in fields(self):
            value = getattr(self, f.name)
            object.__setattr__(self, f.name, int(value) if f.name == "n_atoms" else float(value))

    @property
    def gamma_c(self):
        """Total cavity decay rate ``gamma_c_f + gamma_c_d``."""
        return self.gamma_c_f + self.gamma_c_d

    @property
    def g_sqrt_n(self):
        """Collective coupling ``g sqrt(N) = sqrt(2 C gamma_c gamma_e)``."""
        return float(np.sqrt(2.0 * self.cooperativity * self.gamma_c * self.gamma_e))

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class EffectiveMatrix:
    """Non-Hermitian generator ``M_eff = M - i diag(decay)``.

    ``coherent`` is the real symmetric part ``M``; ``decay`` the per-mode
    damping rates.
    """

    coherent: np.ndarray
    decay: np.ndarray

    @property
    def dimension(self):
        return self.coherent.shape[0]

    @property
    def matrix(self):
        return self.coherent - 1j * np.diag(self.decay)


def effective_matrix_symmetric(params):
    """3x3 effective matrix of the symmetric sector in basis ``(a, b, s)``."""
    g = params.g_sqrt_n
    half = params.omega_cf / 2.0
    coherent = np.array(
        [
            [-params.delta_c, g, 0.0],
            [g, -params.delta_e, half],
            [0.0, half, -params.delta_r],
        ]
    )
    decay = np.array([params.gamma_c, params.gamma_e, params.gamma_r])
    return EffectiveMatrix(coherent, decay)


def effective_matrix_q(params):
    """2x2 effective matrix of a ``q != 0`` spinwave pair, basis ``(b_q, c_q)``.

    Finite-momentum spinwaves do not couple to the cavity mode.
    """
    half = params.omega_cf / 2.0
    coherent = np.array([[-params.delta_e, half], [half, -params.delta_r]])
    decay = np.array([params.gamma_e, params.gamma_r])
    return EffectiveMatrix(coherent, decay)


def effective_matrix(params, sector="symmetric"):
    if sector == "symmetric":
        return effective_matrix_symmetric(params)
    if sector == "q_nonzero":
        return effective_matrix_q(params)
    raise ParameterError(f"sector must be 'symmetric' or 'q_nonzero', got {sector!r}")


def polariton_energies(params):
    """Sorted eigenvalues of the coherent 3x3 matrix (decay excluded)."""
    return np.linalg.eigvalsh(effective_matrix_symmetric(params).coherent)


def to_mhz(value):
    """Convert a frequency from gamma_e units to cyclic MHz."""
    return np.asarray(value) * GAMMA_E_MHZ
