"""Two-spinwave loop integrals and the resummed dipole-dipole T-matrix.

The loop integral of a sector is ``S = (1/2pi) * integral dw G_ss[-w] G_ss[w]``
where ``G_ss`` is the Rydberg-spinwave diagonal element of that sector's
resolvent.  ``S`` (finite momentum) and ``S0`` (symmetric, cavity-coupled)
enter the closed resummation

    T0 = Tt0 / (1 - i (S0 - S) Tt0)

with ``Tt0`` the cavity-free two-body amplitude, evaluated either as a
pair sum over atom positions or in the continuum limit.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.spatial.distance import pdist

from ._validation import check_positions, check_sector
from .exceptions import ConvergenceError, ParameterError, ResonantResummationError
from .model import RYDBERG, effective_matrix

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9
BRANCH_RTOL = 1e-3

_SPINWAVE_INDEX = {"symmetric": RYDBERG, "q_nonzero": 1}


@dataclass(frozen=True)
class TMatrixResult:
    """Loop integrals and T-matrix amplitudes for one parameter set.

    ``branch`` is the sign multiplying the principal square root in the
    closed form (``None`` when the closed form was not used).
    ``t_tilde0_stderr`` is the seed-to-seed standard error of the discrete
    estimator.
    """

    S: complex
    S0: complex
    t_tilde0: complex
    t0: complex
    method: str
    branch: int = None
    blockade_ratio: float = None
    t_tilde0_stderr: float = None

    def to_dict(self):
        out = {}
        for key in ("S", "S0", "t_tilde0", "t0"):
            value = complex(getattr(self, key))
            out[key] = {"re": value.real, "im": value.imag}
        out["method"] = self.method
        out["branch"] = self.branch
        out["blockade_ratio"] = self.blockade_ratio
        out["t_tilde0_stderr"] = self.t_tilde0_stderr
        return out


# -- loop integrals -----------------------------------------------------------


def _spinwave_poles(m_eff, index):
    """Eigenvalues and residues of ``G_ss(w) = sum_k A_k / (w - lambda_k)``."""
    lam, right = np.linalg.eig(m_eff)
    left = np.linalg.inv(right)
    return lam, right[index, :] * left[:, index]


def _loop_residues(m_eff, index):
    lam, res = _spinwave_poles(m_eff, index)
    gaps = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(len(lam), 1)]
    if gaps.size and gaps.min() < DEGENERACY_TOL:
        return None
    # closing in the upper half plane picks the poles of G(-w) at w = -lambda_j
    return complex(1j * np.sum(res[:, None] * res[None, :] / (lam[:, None] + lam[None, :])))


def _loop_quadrature(m_eff, index, tail_tol=1e-10):
    n = m_eff.shape[0]
    eye = np.eye(n)

    def g_ss(w):
        return np.linalg.solve(w * eye - m_eff, eye[:, index])[index]

    def integrand(w):
        return g_ss(-w) * g_ss(w)

    m1 = m_eff[index, index]
    m2 = (m_eff @ m_eff)[index, index]
    radius = max(np.linalg.norm(m_eff, 2), 1.0)
    # remainder after the 1/w^2 and 1/w^4 terms is below 8 R^4 / w^6 for w > 2R
    cutoff = max(4.0 * radius, (16.0 * radius**4 / (5.0 * tail_tol)) ** 0.2)
    tail = 2.0 * (-1.0 / cutoff + (m1 * m1 - 2.0 * m2) / (3.0 * cutoff**3))

    lam = np.linalg.eigvals(m_eff)
    marks = sorted({0.0, *np.abs(lam.real), 2.0 * radius, 10.0 * radius, cutoff})
    marks = [x for x in marks if x <= cutoff]
    total = 0.0 + 0.0j
    for lo, hi in zip(marks[:-1], marks[1:]):
        if hi - lo <= 0:
            continue
        val, _ = quad(
            integrand, lo, hi, complex_func=True, epsabs=1e-14, epsrel=1e-11, limit=400
        )
        total += val
    # integrand is even in w
    return complex((2.0 * total + tail) / (2.0 * np.pi))


def loop_integral(params, sector="q_nonzero", method="residues"):
    """Loop integral ``S`` of ``sector``.

    Parameters
    ----------
    params : SystemParams
    sector : {'q_nonzero', 'symmetric'}
        ``'q_nonzero'`` gives ``S``, ``'symmetric'`` gives ``S0``.
    method : {'residues', 'quadrature'}
        Contour closure over the eigen-decomposition, or adaptive quadrature
        with an analytic tail correction.  The residue path falls back to
        quadrature when two eigenvalues are closer than ``DEGENERACY_TOL``.
    """
    check_sector(sector)
    eff = effective_matrix(params, sector)
    if np.any(eff.decay <= 0):
        raise ParameterError("loop integral needs strictly positive decay rates")
    index = _SPINWAVE_INDEX[sector]
    m = eff.matrix
    if method == "residues":
        value = _loop_residues(m, index)
        if value is not None:
            return value
        logger.info("degenerate eigenvalues in %s sector; falling back to quadrature", sector)
        return _loop_quadrature(m, index)
    if method == "quadrature":
        return _loop_quadrature(m, index)
    raise ParameterError(f"unknown loop-integral method {method!r}")


# -- cavity-free two-body amplitude -------------------------------------------


def blockade_radius(params, S):
    """Distance where ``|kappa(r) S| = 1``; a convention, see README."""
    return (abs(params.c6) * abs(S)) ** (1.0 / 6.0)


def blockade_volume_ratio(params, S):
    """``v_b / V`` with ``v_b = 4 pi r_b^3 / 3``."""
    return 4.0 * np.pi / 3.0 * blockade_radius(params, S) ** 3 / params.volume


def t_tilde0_continuum(params, S):
    """``(1/V) * integral d^3r kappa / (1 - i kappa S)`` evaluated by quadrature."""
    if params.c6 == 0:
        return 0.0 + 0.0j
    S = complex(S)
    if S == 0:
        raise ParameterError("loop integral S = 0: no dissipation in the loop")
    r_b = blockade_radius(params, S)
    sign = np.sign(params.c6)
    abs_s = abs(S)

    # in x = r / r_b the pair kernel is sign / (|S| x^6 - i sign S), finite at x = 0
    def integrand(x):
        return x * x * sign / (abs_s * x**6 - 1j * sign * S)

    # the real part of the denominator vanishes at x^6 = Re(i sign S) / |S| when that is positive
    knee = (1j * sign * S).real / abs_s
    marks = sorted({0.0, 1.0, *([knee ** (1.0 / 6.0)] if 0.0 < knee < 1.0 else [])})
    total = 0.0 + 0.0j
    for lo, hi in (*zip(marks[:-1], marks[1:]), (1.0, 10.0), (10.0, np.inf)):
        val, err = quad(integrand, lo, hi, complex_func=True, epsabs=0.0, epsrel=1e-10, limit=400)
        total += val
    return complex(4.0 * np.pi * r_b**3 * total / params.volume)


def _closed_form_principal(params, S):
    return 2.0 * np.pi**2 / (3.0 * params.volume) * np.sqrt(1j * params.c6 / complex(S))


def t_tilde0_closed(params, S, branch=None):
    """Continuum two-body amplitude ``branch * (2 pi^2 / 3V) sqrt(i C6 / S)``.

    With ``branch=None`` the sign is chosen by comparison with
    :func:`t_tilde0_continuum`, and agreement within ``BRANCH_RTOL`` is
    enforced.  Returns ``(value, branch)``.
    """
    if params.c6 == 0:
        return 0.0 + 0.0j, None
    if complex(S) == 0:
        raise ParameterError("loop integral S = 0: no dissipation in the loop")
    principal = _closed_form_principal(params, S)
    if branch is not None:
        if branch not in (1, -1):
            raise ParameterError("branch must be +1 or -1")
        return complex(branch * principal), branch
    reference = t_tilde0_continuum(params, S)
    mismatch = {b: abs(b * principal - reference) for b in (1, -1)}
    branch = min(mismatch, key=mismatch.get)
    rel = mismatch[branch] / abs(reference)
    if rel > BRANCH_RTOL:
        raise ConvergenceError(
            f"closed form disagrees with continuum integral on both branches (rel {rel:.2e})",
            achieved=rel,
        )
    return complex(branch * principal), branch


def t_tilde0_discrete(positions, params, S):
    """Pair sum ``(1/N^2) sum_{m != n} kappa_mn / (1 - i kappa_mn S)``."""
    pos = check_positions(positions, min_count=2)
    n = pos.shape[0]
    if params.c6 == 0:
        return 0.0 + 0.0j
    r = pdist(pos)
    if np.any(r == 0):
        raise ParameterError("coincident atom positions")
    S = complex(S)
    total = 0.0 + 0.0j
    chunk = 1 << 20
    for start in range(0, r.size, chunk):
        r6 = r[start:start + chunk] ** 6
        # kappa / (1 - i kappa S) written to stay finite as kappa -> inf
        total += np.sum(1.0 / (r6 / params.c6 - 1j * S))
    return complex(2.0 * total / n**2)


def sample_positions_cube(n_atoms, volume, seed):
    """``n_atoms`` positions uniform in a cube of the given volume."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, volume ** (1.0 / 3.0), size=(n_atoms, 3))


def _discrete_for_seed(args):
    params, S, n_atoms, seed = args
    return t_tilde0_discrete(sample_positions_cube(n_atoms, params.volume, seed), params, S)


def t_tilde0_monte_carlo(params, S, n_atoms=None, seeds=tuple(range(8)), workers=1):
    """Seed-averaged discrete estimator on uniform cube samples.

    Returns ``(mean, stderr, values)``.  Per-seed results are reduced in
    seed order so the mean does not depend on ``workers``.
    """
    n_atoms = params.n_atoms if n_atoms is None else int(n_atoms)
    seeds = list(seeds)
    if not seeds:
        raise ParameterError("need at least one seed")
    jobs = [(params, complex(S), n_atoms, s) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_discrete_for_seed, jobs))
    else:
        values = [_discrete_for_seed(job) for job in jobs]
    values = np.array(values)
    mean = complex(np.sum(values) / len(values))
    stderr = 0.0
    if len(values) > 1:
        stderr = float(np.sqrt(np.sum(np.abs(values - mean) ** 2) / (len(values) - 1) / len(values)))
    return mean, stderr, values


# -- resummation ---------------------------------------------------------------


def t0(t_tilde0, S0, S):
    """Symmetric-channel amplitude ``Tt0 / (1 - i (S0 - S) Tt0)``."""
    t_tilde0 = complex(t_tilde0)
    if t_tilde0 == 0:
        return 0.0 + 0.0j
    shift = 1j * (complex(S0) - complex(S)) * t_tilde0
    denom = 1.0 - shift
    if abs(denom) <= 1e-14 * max(1.0, abs(shift)):
        raise ResonantResummationError("T-matrix denominator 1 - i(S0 - S) Tt0 vanishes")
    return t_tilde0 / denom


def compute_tmatrix(params, method="closed_form", positions=None, seeds=tuple(range(8)),
                    n_atoms=None, workers=1, loop_method="residues"):
    """Evaluate ``S``, ``S0``, ``Tt0`` and ``T0`` for ``params``.

    ``method`` selects how ``Tt0`` is obtained: ``'closed_form'`` (branch
    fixed against the continuum integral), ``'continuum_integral'``, or
    ``'discrete_sum'`` (explicit ``positions`` or seed-averaged uniform cube
    samples).
    """
    S = loop_integral(params, "q_nonzero", loop_method)
    S0 = loop_integral(params, "symmetric", loop_method)
    branch = None
    stderr = None
    if method == "closed_form":
        tt, branch = t_tilde0_closed(params, S)
    elif method == "continuum_integral":
        tt = t_tilde0_continuum(params, S)
    elif method == "discrete_sum":
        if positions is not None:
            tt = t_tilde0_discrete(positions, params, S)
        else:
            tt, stderr, _ = t_tilde0_monte_carlo(params, S, n_atoms=n_atoms, seeds=seeds, workers=workers)
    else:
        raise ParameterError(f"unknown T-matrix method {method!r}")
    ratio = float(blockade_volume_ratio(params, S)) if params.c6 != 0 else 0.0
    return TMatrixResult(
        S=S, S0=S0, t_tilde0=complex(tt), t0=t0(tt, S0, S), method=method,
        branch=branch, blockade_ratio=ratio, t_tilde0_stderr=stderr,
    )
