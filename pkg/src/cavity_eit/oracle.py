"""Brute-force reference model: driven-dissipative bosons in a truncated Fock space.

Modes are ordered ``(a, b_1..b_N, c_1..c_N)``.  The basis holds every
occupation vector with total excitation number ``<= n_max``, enumerated in
lexicographic order.

Numerics are carried out on the rescaled density matrix

    rho_tilde[j, k] = rho[j, k] / alpha**(n_j + n_k)

where ``n_j`` is the excitation number of basis state ``j``.  The drive
``alpha (a + a^dag)`` and the quantum jumps change ``n`` by one, so after
rescaling every element is O(1) at weak drive and no precision is lost to
the tiny magnitudes of multi-photon coherences.  The rescaled generator
stays finite as ``alpha -> 0``.
"""

import itertools
import logging
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad, simpson
from scipy.linalg import svdvals
from scipy.sparse.linalg import expm_multiply, splu

from ._validation import check_frequency_grid, check_positions
from .exceptions import (
    BasisSizeError,
    ConvergenceError,
    DegenerateSteadyStateError,
    NonPerturbativeError,
    ParameterError,
)
from .model import CAVITY, effective_matrix_symmetric
from .greens import resolvent
from .scaling import fit_power_law

logger = logging.getLogger(__name__)

MAX_BASIS = 20_000
_DENSE_NULLSPACE_LIMIT = 2500


def _occupations(n_modes, budget):
    """Occupation vectors with sum ``<= budget`` in lexicographic order."""
    if n_modes == 0:
        yield ()
        return
    for k in range(budget + 1):
        for rest in _occupations(n_modes - 1, budget - k):
            yield (k,) + rest


class FockBasis:
    """Occupation-number basis with total excitation ``<= n_max``."""

    def __init__(self, n_modes, n_max):
        if n_modes < 1 or n_max < 1:
            raise ParameterError("need n_modes >= 1 and n_max >= 1")
        self.n_modes = int(n_modes)
        self.n_max = int(n_max)
        self.states = list(_occupations(self.n_modes, self.n_max))
        self._index = {occ: i for i, occ in enumerate(self.states)}
        self.excitations = np.array([sum(occ) for occ in self.states])

    @staticmethod
    def size_for(n_modes, n_max):
        return comb(n_modes + n_max, n_max)

    def __len__(self):
        return len(self.states)

    def index(self, occupation):
        return self._index[tuple(occupation)]

    def occupation(self, index):
        return self.states[index]

    def lowering(self, mode):
        """Sparse annihilation operator of ``mode`` (CSR)."""
        rows, cols, vals = [], [], []
        for j, occ in enumerate(self.states):
            n = occ[mode]
            if n:
                lowered = occ[:mode] + (n - 1,) + occ[mode + 1:]
                rows.append(self._index[lowered])
                cols.append(j)
                vals.append(np.sqrt(n))
        d = len(self.states)
        return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


@dataclass
class FockModel:
    """Assembled operators of the truncated bosonic model.

    ``hamiltonian`` is the excitation-conserving part (free evolution,
    linear couplings and dipole-dipole terms); the feeding term is kept
    separate as ``alpha (a + a^dag)`` with ``a = lowering[0]``.
    ``jumps`` lists ``(L, gamma)`` pairs for Lindblad operators
    ``sqrt(2 gamma) L``.
    """

    params: object
    positions: np.ndarray
    n_max: int
    basis: FockBasis
    hamiltonian: sp.csr_matrix
    lowering: list
    jumps: list

    @property
    def n_atoms(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return len(self.basis)

    @property
    def cavity(self):
        return self.lowering[CAVITY]

    @property
    def alpha(self):
        return self.params.alpha

    def with_alpha(self, alpha):
        """Same operators, different feeding rate (the drive is not baked in)."""
        return FockModel(
            self.params.replace(alpha=float(alpha)), self.positions, self.n_max,
            self.basis, self.hamiltonian, self.lowering, self.jumps,
        )

    def full_hamiltonian(self):
        a = self.cavity
        return self.hamiltonian + self.alpha * (a + a.T)


def build_model(params, positions, n_max=2, max_basis=MAX_BASIS):
    """Assemble the truncated Fock-space model for the atoms at ``positions``.

    The per-atom coupling is ``g sqrt(N) / sqrt(N)`` with ``N = len(positions)``
    so the collective coupling equals ``params.g_sqrt_n``.
    """
    pos = check_positions(positions)
    n_atoms = pos.shape[0]
    n_modes = 1 + 2 * n_atoms
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    size = FockBasis.size_for(n_modes, n_max)
    if size > max_basis:
        raise BasisSizeError(f"basis size {size} exceeds limit {max_basis}")
    basis = FockBasis(n_modes, n_max)
    low = [basis.lowering(k) for k in range(n_modes)]
    a = low[0]
    b = low[1:1 + n_atoms]
    c = low[1 + n_atoms:]

    g = params.g_sqrt_n / np.sqrt(n_atoms)
    half = params.omega_cf / 2.0
    h = -params.delta_c * (a.T @ a)
    for bn, cn in zip(b, c):
        h = h - params.delta_e * (bn.T @ bn) - params.delta_r * (cn.T @ cn)
        hop = g * (a.T @ bn) + half * (cn.T @ bn)
        h = h + hop + hop.T
    for m, n in itertools.combinations(range(n_atoms), 2):
        if params.c6 == 0:
            break
        r = np.linalg.norm(pos[m] - pos[n])
        if r == 0:
            raise ParameterError("coincident atom positions")
        kappa = params.c6 / r**6
        h = h + kappa * (c[m].T @ c[n].T @ c[m] @ c[n])
    jumps = [(a, params.gamma_c)]
    jumps += [(bn, params.gamma_e) for bn in b]
    jumps += [(cn, params.gamma_r) for cn in c]
    return FockModel(params, pos, int(n_max), basis, sp.csr_matrix(h), low, jumps)


# -- superoperators (column-stacking: vec(A X B) = (B^T kron A) vec(X)) --------


def _left(op, d):
    return sp.kron(sp.identity(d, format="csr"), op, format="csr")


def _right(op, d):
    return sp.kron(op.T, sp.identity(d, format="csr"), format="csr")


def liouvillian(model, scaled=True):
    """Sparse Lindblad generator acting on ``vec(rho)`` (or ``vec(rho_tilde)``)."""
    d = model.dim
    alpha = model.alpha
    a = model.cavity
    ad = sp.csr_matrix(a.T)
    h = model.hamiltonian
    if scaled:
        c_a_left, c_ad_left, c_a_right, c_ad_right, jump = alpha**2, 1.0, 1.0, alpha**2, alpha**2
    else:
        c_a_left = c_ad_left = c_a_right = c_ad_right = alpha
        jump = 1.0
    gen = -1j * (_left(h, d) - _right(h, d))
    gen = gen - 1j * (
        c_a_left * _left(a, d) + c_ad_left * _left(ad, d)
        - c_a_right * _right(a, d) - c_ad_right * _right(ad, d)
    )
    for op, rate in model.jumps:
        opd_op = op.T @ op
        gen = gen + 2.0 * rate * jump * sp.kron(op, op, format="csr")
        gen = gen - rate * (_left(opd_op, d) + _right(opd_op, d))
    return sp.csr_matrix(gen)


def _vec(x):
    return np.asarray(x).reshape(-1, order="F")


def _unvec(v, d):
    return np.asarray(v).reshape((d, d), order="F")


@dataclass
class SteadyState:
    """Steady state stored in rescaled form; ``rho`` gives the physical matrix."""

    model: FockModel
    rho_scaled: np.ndarray
    residual: float

    @property
    def alpha(self):
        return self.model.alpha

    @property
    def rho(self):
        w = self.alpha ** self.model.basis.excitations.astype(float)
        return w[:, None] * self.rho_scaled * w[None, :]

    def scaled_trace(self, op, x=None, power=None):
        """``Tr[op X] / alpha**power`` with ``X`` in rescaled form.

        ``power`` defaults to the smallest ``n_j + n_k`` touched by ``op``.
        """
        x = self.rho_scaled if x is None else x
        return _scaled_trace(self.model, op, x, power)

    def mean_field_scaled(self):
        """``<a> / alpha``."""
        return complex(self.scaled_trace(self.model.cavity, power=1))

    def photon_number_scaled(self):
        """``<a^dag a> / alpha^2``."""
        a = self.model.cavity
        return float(self.scaled_trace(a.T @ a, power=2).real)

    def mean_field(self):
        return self.alpha * self.mean_field_scaled()

    def photon_number(self):
        return self.alpha**2 * self.photon_number_scaled()

    def trace(self):
        return complex(self.scaled_trace(sp.identity(self.model.dim, format="csr"), power=0))


def _scaled_trace(model, op, x, power=None):
    op = sp.coo_matrix(op)
    n = model.basis.excitations
    powers = n[op.col] + n[op.row]
    if power is None:
        power = int(powers.min()) if powers.size else 0
    factors = model.alpha ** (powers - power).astype(float)
    # Tr[op X] = sum_{k,j} op[k, j] X[j, k]
    return np.sum(op.data * factors * x[op.col, op.row])


def steady_state(model):
    """Solve ``L(rho) = 0`` with unit trace.

    The trace condition replaces the vacuum-population equation; for small
    models the null space is also checked to be one-dimensional.
    """
    d = model.dim
    gen = liouvillian(model, scaled=True).tolil()
    weights = model.alpha ** (2 * model.basis.excitations.astype(float))
    diag_idx = np.arange(d) * (d + 1)
    if d * d <= _DENSE_NULLSPACE_LIMIT:
        sv = svdvals(gen.toarray())
        scale = max(sv[0], 1.0)
        if sv[-2] < 1e-10 * scale:
            raise DegenerateSteadyStateError(
                f"Liouvillian null space is degenerate (singular values {sv[-1]:.2e}, {sv[-2]:.2e})"
            )
    original = liouvillian(model, scaled=True)
    gen[0, :] = 0.0
    gen[0, diag_idx] = weights
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    try:
        vec = splu(sp.csc_matrix(gen)).solve(rhs)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"steady-state system is singular: {exc}") from exc
    residual = float(np.max(np.abs(original @ vec)))
    rho_t = _unvec(vec, d)
    rho_t = 0.5 * (rho_t + rho_t.conj().T)
    if residual > 1e-10:
        raise ConvergenceError(f"steady-state residual {residual:.3e} exceeds 1e-10", achieved=residual)
    return SteadyState(model, rho_t, residual)


def evolve(model, rho0, times, tol=1e-10):
    """Propagate a physical density matrix and check trace and Hermiticity.

    Returns an array of shape ``(len(times), d, d)``.
    """
    d = model.dim
    gen = liouvillian(model, scaled=False)
    times = np.asarray(times, dtype=float)
    out = np.empty((times.size, d, d), dtype=complex)
    for i, t in enumerate(times):
        out[i] = _unvec(expm_multiply(gen * t, _vec(rho0).astype(complex)), d)
    tr0 = np.trace(rho0)
    drift = max(np.max(np.abs(np.trace(out, axis1=1, axis2=2) - tr0)),
                np.max(np.abs(out - out.conj().transpose(0, 2, 1))))
    if drift > tol:
        raise ConvergenceError(f"propagation broke trace/Hermiticity by {drift:.2e}", achieved=drift)
    return out


# -- emission spectrum -------------------------------------------------------------


@dataclass
class TwoTimeSpectrum:
    """Oracle emission spectrum in the detection channel.

    ``density`` is the inelastic part on ``omega``; ``elastic_weight`` the
    coefficient of ``delta(omega)``; ``total_power`` the detected photon
    flux ``2 gamma_c_d <a^dag a>``.
    """

    omega: np.ndarray
    density: np.ndarray
    elastic_weight: float
    total_power: float
    connected_power: float
    max_imag: float


class _Regression:
    """Connected regression vectors and the contractions that close them."""

    def __init__(self, ss):
        model = ss.model
        d = model.dim
        a = model.cavity
        ad = sp.csr_matrix(a.T)
        rho = ss.rho_scaled
        a1 = ss.mean_field_scaled()
        self.ss = ss
        self.d = d
        self.gen = sp.csc_matrix(liouvillian(model, scaled=True))
        # forward  C(t)  = <a^dag(t) a(0)>, backward C(-t) = <a^dag(0) a(t)>
        self.x_fwd = _vec(a @ rho - a1 * rho)
        self.x_bwd = _vec(rho @ ad.toarray() - np.conj(a1) * rho)
        self.close_fwd = ad
        self.close_bwd = a
        self.prefactor = 2.0 * model.params.gamma_c_d * model.alpha**2
        self.kernel = _vec(rho).astype(complex)
        trace_row = np.zeros(d * d, dtype=complex)
        trace_row[np.arange(d) * (d + 1)] = model.alpha ** (2 * model.basis.excitations.astype(float))
        n = d * d
        self.bordered = sp.bmat(
            [[-self.gen, sp.csc_matrix(self.kernel[:, None])], [sp.csr_matrix(trace_row[None, :]), None]],
            format="csc",
        )
        self.border_eye = sp.diags(np.append(np.ones(n), 0.0), format="csc")

    def contract(self, op, vec):
        return _scaled_trace(self.ss.model, op, _unvec(vec, self.d), power=1)

    def laplace(self, omega):
        """``(S_fwd, S_bwd)`` half-line transforms at ``omega``, without prefactor.

        The generator is singular (the steady state spans its kernel), so the
        solve is bordered by the steady state and the weighted-trace
        functional; this projects out the kernel exactly, including at
        ``omega = 0``.
        """
        fwd = self._solve(1j * omega, self.x_fwd)
        bwd = self._solve(-1j * omega, self.x_bwd)
        return self.contract(self.close_fwd, fwd), self.contract(self.close_bwd, bwd)

    def _solve(self, shift, rhs):
        n = self.d * self.d
        sol = splu(sp.csc_matrix(self.bordered + shift * self.border_eye)).solve(np.append(rhs, 0.0))
        return sol[:n]

    def connected_zero(self):
        return complex(self.contract(self.close_fwd, self.x_fwd))


def _density_resolvent(reg, omega):
    vals = np.empty(omega.size, dtype=complex)
    for i, w in enumerate(omega):
        f, b = reg.laplace(w)
        vals[i] = f + b
    return reg.prefactor * vals


def _density_propagate(reg, omega, horizon, dt):
    n = int(np.ceil(horizon / dt))
    n += n % 2  # Simpson needs an even number of intervals
    times = np.linspace(0.0, horizon, n + 1)
    fwd = expm_multiply(reg.gen, reg.x_fwd, start=0.0, stop=horizon, num=n + 1, endpoint=True)
    bwd = expm_multiply(reg.gen, reg.x_bwd, start=0.0, stop=horizon, num=n + 1, endpoint=True)
    c_fwd = np.array([reg.contract(reg.close_fwd, v) for v in fwd])
    c_bwd = np.array([reg.contract(reg.close_bwd, v) for v in bwd])
    phase = np.exp(-1j * np.outer(omega, times))
    vals = simpson(phase * c_fwd, x=times, axis=1) + simpson(np.conj(phase) * c_bwd, x=times, axis=1)
    return reg.prefactor * vals


def emission_spectrum(model, ss, omega, method="resolvent", horizon=None, dt=0.01,
                      horizon_rtol=1e-3, power_quadrature=False):
    """Emission spectrum from the quantum regression theorem.

    ``S(w) = 2 gamma_c_d * integral dt exp(-i w t) <a^dag(t) a(0)>``.  The
    constant part ``|<a>|^2`` of the correlation gives the elastic weight;
    the connected remainder is transformed into the inelastic density.

    Parameters
    ----------
    method : {'resolvent', 'propagate'}
        ``'resolvent'`` evaluates the half-line Laplace transforms exactly by
        sparse solves.  ``'propagate'`` samples the correlation up to
        ``horizon`` (default ``12 / gamma_min``) and integrates it with
        Simpson's rule, repeating at ``1.5 * horizon`` as a convergence check.
    power_quadrature : bool
        Also integrate the inelastic density over all frequencies
        numerically (for the Parseval check); otherwise the connected power
        is taken from the equal-time correlation.
    """
    w = check_frequency_grid(omega)
    reg = _Regression(ss)
    params = model.params
    if method == "resolvent":
        vals = _density_resolvent(reg, w)
    elif method == "propagate":
        gamma_min = min(params.gamma_c, params.gamma_e, params.gamma_r)
        horizon = 12.0 / gamma_min if horizon is None else float(horizon)
        vals = _density_propagate(reg, w, horizon, dt)
        longer = _density_propagate(reg, w, 1.5 * horizon, dt)
        scale = max(np.max(np.abs(longer)), np.finfo(float).tiny)
        drift = float(np.max(np.abs(longer - vals)) / scale)
        if drift > horizon_rtol:
            raise ConvergenceError(
                f"propagation horizon {horizon:g} not converged (relative change {drift:.2e})",
                achieved=drift,
            )
        vals = longer
    else:
        raise ParameterError(f"unknown spectrum method {method!r}")
    a1 = ss.mean_field_scaled()
    elastic = 4.0 * np.pi * params.gamma_c_d * params.alpha**2 * abs(a1) ** 2
    # imaginary residue measured against the overall spectral scale
    scale = max(np.max(np.abs(vals.real)), elastic, np.finfo(float).tiny)
    max_imag = float(np.max(np.abs(vals.imag)) / scale)
    if max_imag > 1e-10:
        raise ConvergenceError(f"spectrum has relative imaginary part {max_imag:.2e}", achieved=max_imag)
    if power_quadrature:
        connected = integrated_inelastic_power(reg)
    else:
        connected = 2.0 * params.gamma_c_d * params.alpha**2 * reg.connected_zero().real
    return TwoTimeSpectrum(
        omega=w,
        density=vals.real,
        elastic_weight=float(elastic),
        total_power=float(elastic / (2.0 * np.pi) + connected),
        connected_power=float(connected),
        max_imag=max_imag,
    )


def integrated_inelastic_power(reg):
    """``(1/2pi) * integral dw S_inel(w)`` by adaptive quadrature over the real line."""

    def density(w):
        f, b = reg.laplace(w)
        return (reg.prefactor * (f + b)).real

    total, _ = quad(density, -np.inf, np.inf, epsabs=0.0, epsrel=1e-10, limit=500)
    return total / (2.0 * np.pi)


# -- order extraction ---------------------------------------------------------------


def third_order_deviation(ss):
    """``|<a> - alpha G_aa[0]|``, the part of the mean field beyond linear response."""
    g_aa = resolvent(effective_matrix_symmetric(ss.model.params).matrix, 0.0)[CAVITY, CAVITY]
    return float(ss.alpha * abs(ss.mean_field_scaled() - g_aa))


def connected_photon_number(ss):
    """``|<a^dag a> - |<a>|^2|`` evaluated without catastrophic cancellation."""
    reg = _Regression(ss)
    return float(abs(ss.alpha**2 * reg.connected_zero()))


def _observable(name):
    if callable(name):
        return name
    if name == "elastic_weight":
        return lambda ss: 4.0 * np.pi * ss.model.params.gamma_c_d * abs(ss.mean_field()) ** 2
    if name == "third_order":
        return third_order_deviation
    if name == "connected":
        return connected_photon_number
    if name == "inelastic_power":
        return lambda ss: integrated_inelastic_power(_Regression(ss))
    raise ParameterError(f"unknown observable {name!r}")


@dataclass(frozen=True)
class ScalingResult:
    exponent: float
    prefactor: float
    max_residual: float
    curvature: float
    alphas: np.ndarray
    values: np.ndarray


def alpha_scaling(model_family, observable, alphas, max_photons=1e-3, curvature_tol=0.02):
    """Fit ``observable ~ prefactor * alpha**exponent`` on weak-drive steady states.

    Parameters
    ----------
    model_family : FockModel or callable
        A model whose drive is replaced by each ``alpha``, or a callable
        ``alpha -> FockModel``.
    observable : str or callable
        ``'elastic_weight'``, ``'third_order'``, ``'connected'``,
        ``'inelastic_power'``, or ``f(SteadyState) -> float``.
    alphas : sequence of float
        At least four values spanning at least one decade.
    """
    alphas = np.sort(np.asarray(alphas, dtype=float))
    if alphas.size < 4:
        raise ParameterError("need at least 4 alpha values")
    if np.any(alphas <= 0) or alphas[-1] / alphas[0] < 10.0 * (1 - 1e-12):
        raise ParameterError("alpha values must be positive and span at least one decade")
    make = model_family.with_alpha if isinstance(model_family, FockModel) else model_family
    fn = _observable(observable)
    values = []
    for alpha in alphas:
        ss = steady_state(make(alpha))
        if ss.photon_number() >= max_photons:
            raise NonPerturbativeError(
                f"<a^dag a> = {ss.photon_number():.2e} at alpha={alpha:g} is not perturbative"
            )
        values.append(fn(ss))
    values = np.asarray(values, dtype=float)
    fit = fit_power_law(alphas, values)
    if abs(fit.curvature) * np.log(alphas[-1] / alphas[0]) ** 2 / 4.0 > curvature_tol:
        raise NonPerturbativeError(
            f"log-log curvature {fit.curvature:.3e} indicates a non-perturbative regime"
        )
    return ScalingResult(fit.exponent, fit.prefactor, fit.max_residual, fit.curvature, alphas, values)
