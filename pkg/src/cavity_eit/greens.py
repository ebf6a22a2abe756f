"""Frequency-domain Green's functions of the unperturbed (linear EIT) system.

Fourier convention, used throughout the package::

    x(omega) = (2 pi)^(-1/2) * integral dt exp(i omega t) x(t)

For a stable linear system driven by vacuum noise the time-ordered
correlator ``<T x0(t) y0^dag(0)>`` equals ``[exp(-i M_eff t)]_xy`` for
``t > 0`` and vanishes for ``t < 0``.  Applying ``-i * integral dt e^{i omega t}``
to it gives ``(omega I - M_eff)^-1``, so every Green's function needed here
is an element of a resolvent.  :func:`greens_time_domain_check` evaluates
that time integral directly as a regression oracle.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._validation import check_sector
from .exceptions import ConvergenceError, ParameterError, SingularResolventError
from .model import effective_matrix

_SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class ResolventMatrix:
    """Green's-function matrix ``G[omega]`` of one sector."""

    omega: float
    matrix: np.ndarray
    sector: str = "symmetric"

    def __getitem__(self, index):
        return self.matrix[index]


def _inv2(a):
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    adj = np.empty_like(a)
    adj[..., 0, 0] = a[..., 1, 1]
    adj[..., 1, 1] = a[..., 0, 0]
    adj[..., 0, 1] = -a[..., 0, 1]
    adj[..., 1, 0] = -a[..., 1, 0]
    return adj, det


def _inv3(a):
    adj = np.empty_like(a)
    adj[..., 0, 0] = a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1]
    adj[..., 0, 1] = a[..., 0, 2] * a[..., 2, 1] - a[..., 0, 1] * a[..., 2, 2]
    adj[..., 0, 2] = a[..., 0, 1] * a[..., 1, 2] - a[..., 0, 2] * a[..., 1, 1]
    adj[..., 1, 0] = a[..., 1, 2] * a[..., 2, 0] - a[..., 1, 0] * a[..., 2, 2]
    adj[..., 1, 1] = a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
    adj[..., 1, 2] = a[..., 0, 2] * a[..., 1, 0] - a[..., 0, 0] * a[..., 1, 2]
    adj[..., 2, 0] = a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]
    adj[..., 2, 1] = a[..., 0, 1] * a[..., 2, 0] - a[..., 0, 0] * a[..., 2, 1]
    adj[..., 2, 2] = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    det = (
        a[..., 0, 0] * adj[..., 0, 0]
        + a[..., 0, 1] * adj[..., 1, 0]
        + a[..., 0, 2] * adj[..., 2, 0]
    )
    return adj, det


def resolvent(m_eff, omega, method="cofactor"):
    """Evaluate ``(omega I - m_eff)^-1`` for one or many frequencies.

    Parameters
    ----------
    m_eff : (n, n) complex ndarray
        Effective generator, ``n`` in {2, 3} for the cofactor path.
    omega : float or ndarray
        Real frequencies; the result has shape ``omega.shape + (n, n)``.
    method : {'cofactor', 'lu'}
        Closed-form adjugate (fast) or LAPACK solve (validation path).
    """
    m_eff = np.asarray(m_eff, dtype=complex)
    n = m_eff.shape[0]
    w = np.asarray(omega, dtype=float)
    a = w[..., None, None] * np.eye(n) - m_eff
    if method == "lu":
        try:
            return np.linalg.solve(a, np.broadcast_to(np.eye(n, dtype=complex), a.shape))
        except np.linalg.LinAlgError as exc:
            raise SingularResolventError(f"resolvent is singular: {exc}") from exc
    if method != "cofactor":
        raise ParameterError(f"unknown resolvent method {method!r}")
    if n == 2:
        adj, det = _inv2(a)
    elif n == 3:
        adj, det = _inv3(a)
    else:
        raise ParameterError("cofactor inversion only supports 2x2 and 3x3 matrices")
    scale = np.max(np.abs(a), axis=(-2, -1)) ** n
    if np.any(np.abs(det) <= _SINGULAR_RTOL * scale):
        raise SingularResolventError(
            "omega I - M_eff is singular: a decay rate is zero and omega hits a real eigenvalue"
        )
    return adj / det[..., None, None]


def greens(params, omega, sector="symmetric", method="cofactor"):
    """Green's-function matrix of ``sector`` at real frequency ``omega``.

    Returns a :class:`ResolventMatrix`; basis order is ``(a, b, s)`` for the
    symmetric sector and ``(b_q, c_q)`` for ``q_nonzero``.
    """
    check_sector(sector)
    omega = float(omega)
    if not np.isfinite(omega):
        raise ParameterError("omega must be finite")
    m = effective_matrix(params, sector).matrix
    return ResolventMatrix(omega, resolvent(m, omega, method=method), sector)


def greens_array(params, omega, sector="symmetric"):
    """Vectorised :func:`greens` returning a bare ``(len(omega), n, n)`` array."""
    check_sector(sector)
    return resolvent(effective_matrix(params, sector).matrix, omega)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def greens_time_domain_check(params, omega, sector="symmetric", cutoff_tol=1e-10):
    """Time-domain oracle for :func:`greens`.

    Propagates ``dv/dt = -i M_eff v`` from every basis vector with the exact
    exponential propagator and evaluates ``-i * integral_0^T exp(i omega t) v(t) dt``
    by composite Gauss-Legendre quadrature.  ``T`` is chosen so that
    ``exp(-gamma_min T) < cutoff_tol``.
    """
    check_sector(sector)
    eff = effective_matrix(params, sector)
    gamma_min = float(np.min(eff.decay))
    if gamma_min <= 0:
        raise ParameterError("time-domain check needs strictly positive decay rates")
    m = eff.matrix
    n = eff.dimension
    horizon = np.log(1.0 / cutoff_tol) / gamma_min
    # panel width keeps the phase advance per panel below ~2 rad
    fastest = abs(omega) + np.max(np.abs(np.linalg.eigvals(m)))
    width = min(2.0 / max(fastest, 1e-12), horizon)
    n_panels = int(np.ceil(horizon / width))
    width = horizon / n_panels

    tau = 0.5 * width * (_GL_NODES + 1.0)
    node_props = np.array([expm(-1j * m * t) for t in tau])  # (k, n, n)
    node_phase = np.exp(1j * omega * tau)
    panel_kernel = 0.5 * width * np.einsum("k,k,kij->ij", _GL_WEIGHTS, node_phase, node_props)
    step = expm(-1j * m * width)
    step_phase = np.exp(1j * omega * width)

    acc = np.zeros((n, n), dtype=complex)
    state = np.eye(n, dtype=complex)
    phase = 1.0 + 0.0j
    for _ in range(n_panels):
        acc += phase * (panel_kernel @ state)
        state = step @ state
        phase *= step_phase
    residual = float(np.max(np.abs(state)))
    if residual > 10 * cutoff_tol:
        raise ConvergenceError(
            f"propagation horizon too short: |v(T)| = {residual:.3e}", achieved=residual
        )
    return ResolventMatrix(float(omega), -1j * acc, sector)
