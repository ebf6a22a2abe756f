import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_eit import SingularResolventError, SystemParams, greens, greens_array, greens_time_domain_check
from cavity_eit.greens import resolvent
from cavity_eit.model import effective_matrix

# continued fraction at resonance and omega = 0:
# G_aa = 1 / (i gamma_c + g^2 N / (i gamma_e + (Omega/2)^2 / (i gamma_r)))
G_AA_0 = -1.39987827145465611685940353013j


def test_frozen_cavity_element(defaults):
    g = greens(defaults, 0.0)
    assert g[0, 0] == pytest.approx(G_AA_0, rel=1e-14)
    # the bare cavity and spinwave elements are reciprocal
    assert g[0, 2] == pytest.approx(g[2, 0], rel=1e-14)


def test_lu_and_cofactor_agree(defaults):
    w = np.linspace(-7, 7, 57)
    m = effective_matrix(defaults).matrix
    np.testing.assert_allclose(resolvent(m, w, "lu"), resolvent(m, w), rtol=1e-12, atol=1e-14)


def test_array_matches_scalar(defaults):
    w = np.array([-1.3, 0.0, 2.2])
    arr = greens_array(defaults, w, "q_nonzero")
    for k, x in enumerate(w):
        np.testing.assert_allclose(arr[k], greens(defaults, x, "q_nonzero").matrix, rtol=1e-15)


def test_time_domain_oracle(defaults):
    for w in (-3.0, 0.0, 0.7, 2.0248):
        direct = greens(defaults, w).matrix
        oracle = greens_time_domain_check(defaults, w).matrix
        np.testing.assert_allclose(oracle, direct, atol=1e-8)


def test_singular_without_decay():
    m = np.diag([1.0, 2.0]).astype(complex)
    with pytest.raises(SingularResolventError):
        resolvent(m, 1.0)


def test_decay_limit_recovers_free_cavity():
    # without coupling G_aa = 1 / (omega + delta_c + i gamma_c)
    p = SystemParams(cooperativity=0.0, delta_c=0.4)
    w = 1.1
    assert greens(p, w)[0, 0] == pytest.approx(1.0 / (w + 0.4 + 0.31j), rel=1e-15)


rates = st.floats(0.02, 3.0)
shifts = st.floats(-5.0, 5.0)


@settings(max_examples=60, deadline=None)
@given(gr=rates, gcd=st.floats(0.05, 3.0), coop=st.floats(0, 20), om=st.floats(0, 8),
       dc=shifts, de=shifts, dr=shifts, w=st.floats(-20, 20))
def test_resolvent_identity(gr, gcd, coop, om, dc, de, dr, w):
    p = SystemParams(gamma_r=gr, gamma_c_d=gcd, cooperativity=coop, omega_cf=om,
                     delta_c=dc, delta_e=de, delta_r=dr)
    m = effective_matrix(p).matrix
    g = resolvent(m, w)
    assert np.max(np.abs((w * np.eye(3) - m) @ g - np.eye(3))) < 1e-12
    # passivity: the anti-Hermitian part of G is negative semidefinite
    assert np.all(np.linalg.eigvalsh((g - g.conj().T) / 2j) <= 1e-12)
