import numpy as np
import pytest
import scipy.sparse as sp

from cavity_eit import (BasisSizeError, NonPerturbativeError, ParameterError, SystemParams, alpha_scaling, build_model,
                        emission_spectrum, greens, polariton_energies, steady_state)
from cavity_eit.oracle import FockBasis, _vec, connected_photon_number, evolve, liouvillian
from cavity_eit.spectrum import find_ridges

PAIR = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def test_basis_enumeration():
    basis = FockBasis(3, 2)
    assert len(basis) == FockBasis.size_for(3, 2) == 10
    assert basis.occupation(0) == (0, 0, 0)
    assert basis.states == sorted(basis.states)
    a = basis.lowering(0).toarray()
    assert a[basis.index((1, 0, 0)), basis.index((2, 0, 0))] == pytest.approx(np.sqrt(2))
    assert a[basis.index((0, 1, 0)), basis.index((1, 1, 0))] == 1.0
    assert np.count_nonzero(a) == 4


def test_basis_limit():
    with pytest.raises(BasisSizeError):
        build_model(SystemParams(), np.zeros((1, 3)) + np.arange(6)[:, None], n_max=4, max_basis=1000)
    with pytest.raises(ParameterError):
        build_model(SystemParams(), PAIR, n_max=0)


def test_single_atom_coherent_response():
    # without interactions the steady state is coherent with <a> = alpha G_aa[0]
    p = SystemParams(alpha=1e-4, c6=0.0, n_atoms=1)
    ss = steady_state(build_model(p, np.zeros((1, 3))))
    assert ss.mean_field_scaled() == pytest.approx(greens(p, 0.0)[0, 0], rel=1e-7)
    assert ss.trace() == pytest.approx(1.0, abs=1e-14)


def test_scaled_solution_solves_physical_equation():
    p = SystemParams(alpha=0.05, c6=5.0, n_atoms=2)
    model = build_model(p, PAIR)
    ss = steady_state(model)
    residual = liouvillian(model, scaled=False) @ _vec(ss.rho)
    assert np.max(np.abs(residual)) < 1e-12
    assert np.trace(ss.rho) == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(ss.rho, ss.rho.conj().T, atol=1e-15)
    assert np.min(np.linalg.eigvalsh(ss.rho)) > -1e-12


def test_relaxation_from_vacuum_reaches_steady_state():
    p = SystemParams(alpha=0.05, c6=0.0, n_atoms=1)
    model = build_model(p, np.zeros((1, 3)))
    rho0 = np.zeros((model.dim, model.dim), dtype=complex)
    rho0[0, 0] = 1.0
    late = evolve(model, rho0, [300.0])[0]
    np.testing.assert_allclose(late, steady_state(model).rho, atol=1e-10)


@pytest.fixture(scope="module")
def interacting():
    p = SystemParams(alpha=1e-3, c6=5.0, n_atoms=2)
    model = build_model(p, PAIR)
    return model, steady_state(model)


def test_resolvent_and_propagation_agree(interacting):
    model, ss = interacting
    w = np.linspace(-3, 3, 13)
    a = emission_spectrum(model, ss, w)
    b = emission_spectrum(model, ss, w, method="propagate", dt=0.01)
    np.testing.assert_allclose(b.density, a.density, rtol=0, atol=2e-3 * a.density.max())


def test_power_bookkeeping(interacting):
    model, ss = interacting
    p = model.params
    emitted = emission_spectrum(model, ss, np.array([0.0]), power_quadrature=True)
    assert emitted.elastic_weight == pytest.approx(4 * np.pi * p.gamma_c_d * abs(ss.mean_field()) ** 2, rel=1e-12)
    # detected flux 2 gamma_c_d <a^dag a> splits into elastic and connected parts
    assert emitted.total_power == pytest.approx(2 * p.gamma_c_d * ss.photon_number(), rel=1e-8)
    # Parseval: integrating the density reproduces the equal-time connected correlation
    assert emitted.connected_power == pytest.approx(
        2 * p.gamma_c_d * connected_photon_number(ss), rel=1e-8)
    assert emitted.max_imag < 1e-10


def test_inelastic_density_non_negative(interacting):
    model, ss = interacting
    d = emission_spectrum(model, ss, np.linspace(-6, 6, 121)).density
    assert d.min() >= -1e-12 * d.max()


def test_resonant_peaks_sit_at_polariton_energies(interacting):
    model, ss = interacting
    w = np.linspace(-6, 6, 481)
    d = emission_spectrum(model, ss, w).density
    e = polariton_energies(model.params)
    pos, _ = find_ridges(w, d, 0.01)
    assert pos.size >= 1
    for x in pos:
        assert np.min(np.abs(e - x)) < 0.2


def test_truncation_residual_shrinks_with_n_max():
    # in the linear model every connected correlation is a truncation artefact
    p = SystemParams(alpha=1e-3, c6=0.0, n_atoms=2)
    ratios = []
    for n_max in (2, 3):
        model = build_model(p, PAIR, n_max=n_max)
        ss = steady_state(model)
        ratios.append(connected_photon_number(ss) / abs(ss.mean_field()) ** 2)
    assert ratios[1] < 1e-3 * ratios[0]
    assert ratios[1] < 1e-12


def test_alpha_scaling_validation(interacting):
    model, _ = interacting
    with pytest.raises(ParameterError):
        alpha_scaling(model, "elastic_weight", [1e-3, 2e-3, 3e-3])
    with pytest.raises(ParameterError):
        alpha_scaling(model, "elastic_weight", [1e-3, 2e-3, 3e-3, 4e-3])
    with pytest.raises(ParameterError):
        alpha_scaling(model, "bogus", np.logspace(-3, -2, 4))


def test_alpha_scaling_on_elastic_weight(interacting):
    model, _ = interacting
    fit = alpha_scaling(model, "elastic_weight", np.logspace(-3, -2, 4))
    assert fit.exponent == pytest.approx(2.0, abs=0.01)


def test_unknown_spectrum_method(interacting):
    model, ss = interacting
    with pytest.raises(ParameterError):
        emission_spectrum(model, ss, [0.0], method="fft")


@pytest.mark.parametrize("n_atoms,n_max,size", [(1, 1, 4), (2, 2, 21), (3, 2, 36)])
def test_basis_counts(n_atoms, n_max, size):
    model = build_model(SystemParams(n_atoms=n_atoms), PAIR[:1] + np.arange(n_atoms)[:, None], n_max=n_max)
    assert model.dim == size
    for j in range(model.dim):
        assert model.basis.index(model.basis.occupation(j)) == j


def test_hamiltonian_hermitian_and_liouvillian_stable(interacting):
    model, _ = interacting
    h = model.full_hamiltonian().toarray()
    assert np.max(np.abs(h - h.conj().T)) < 1e-13
    eig = np.linalg.eigvals(liouvillian(model, scaled=False).toarray())
    assert eig.real.max() < 1e-10
    assert np.min(np.abs(eig)) < 1e-10


def test_zero_drive_gives_vacuum():
    p = SystemParams(alpha=0.0, c6=5.0, n_atoms=2)
    ss = steady_state(build_model(p, PAIR))
    expected = np.zeros((21, 21))
    expected[0, 0] = 1.0
    np.testing.assert_allclose(ss.rho, expected, atol=1e-15)


def test_strong_drive_is_flagged(interacting):
    model, _ = interacting
    with pytest.raises(NonPerturbativeError):
        alpha_scaling(model, "elastic_weight", np.logspace(-2, 0, 4))
