import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiq.model import (ConvergenceError, DomainError, ModelParams, Variant, build_hamiltonian,
                         jc_energies, oracle_spectrum, parity_expectation, parity_of_state,
                         sector_chains, sector_spectrum)


def parity_operator(n_max):
    n = np.repeat(np.arange(n_max + 1), 2)
    sz = np.tile([1.0, -1.0], n_max + 1)
    return np.diag(-sz * (-1.0) ** n)


@pytest.mark.parametrize("kwargs", [
    dict(variant="rabi", delta=0.4, g=-0.1),
    dict(variant="rabi", delta=-0.4, g=0.1),
    dict(variant="rabi", delta=0.4, g=0.1, omega=0.0),
    dict(variant="rabi", delta=0.4, g=0.1, epsilon=0.2),
    dict(variant="rabi", delta=0.4, g=float("nan")),
    dict(variant="anisotropic", delta=0.4, g=0.1, lam=-0.5),
    dict(variant="twophoton", delta=1.0, g=0.5),
])
def test_params_reject_invalid(kwargs):
    with pytest.raises(DomainError):
        ModelParams(**kwargs)


def test_reduced_scales_by_omega():
    p = ModelParams.asymmetric(0.6, 0.8, 0.4, omega=2.0).reduced()
    assert (p.g, p.delta, p.epsilon, p.omega) == (0.3, 0.4, 0.2, 1.0)


def test_has_parity():
    assert ModelParams.rabi(0.3, 0.4).has_parity()
    assert ModelParams.asymmetric(0.3, 0.4, 0.0).has_parity()
    assert not ModelParams.asymmetric(0.3, 0.4, 0.1).has_parity()
    assert not ModelParams.two_photon(0.3, 0.4).has_parity()


def test_hamiltonian_small_cutoff_rejected():
    with pytest.raises(DomainError):
        build_hamiltonian(ModelParams.rabi(0.1, 0.4), 1)


@settings(max_examples=30, deadline=None)
@given(g=st.floats(0, 2), d=st.floats(0, 2), lam=st.floats(0, 2))
def test_hamiltonian_symmetric_and_parity_conserving(g, d, lam):
    h = build_hamiltonian(ModelParams.anisotropic(g, d, lam), 12).matrix
    P = parity_operator(12)
    assert np.allclose(h, h.T)
    assert np.allclose(h @ P, P @ h, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(g=st.floats(0.01, 1.5), d=st.floats(0, 1.5))
def test_chains_reproduce_dense_spectrum(g, d):
    p = ModelParams.rabi(g, d)
    h = build_hamiltonian(p, 20).matrix
    chains = sector_chains(p, 20)
    e = []
    for ch in chains.values():
        t = np.diag(ch.diag) + np.diag(ch.offdiag, 1) + np.diag(ch.offdiag, -1)
        e.extend(np.linalg.eigvalsh(t))
    assert np.allclose(np.sort(e), np.linalg.eigvalsh(h), atol=1e-10)


def test_g_zero_spectrum_is_bare():
    o = oracle_spectrum(ModelParams.rabi(0.0, 0.4), 6)
    assert np.allclose(o.energies, [-0.4, 0.4, 0.6, 1.4, 1.6, 2.4])
    assert o.converged


def test_oracle_parities_match_vectors():
    o = oracle_spectrum(ModelParams.rabi(0.7, 0.4), 8)
    for e, par, v in zip(o.energies, o.parities, o.vectors):
        assert parity_of_state(v) == par


def test_oracle_units():
    a = oracle_spectrum(ModelParams.rabi(0.5, 0.4), 6, vectors=False).energies
    b = oracle_spectrum(ModelParams.rabi(1.0, 0.8, omega=2.0), 6, vectors=False).energies
    assert np.allclose(2 * a, b, atol=1e-9)


def test_delta_zero_displaced_ladder():
    g = 0.7
    o = oracle_spectrum(ModelParams.rabi(g, 0.0), 8, vectors=False)
    want = np.repeat(np.arange(4) - g * g, 2)
    assert np.allclose(o.energies, want, atol=1e-10)


def test_oracle_requires_positive_k():
    with pytest.raises(DomainError):
        oracle_spectrum(ModelParams.rabi(0.5, 0.4), 0)


def test_oracle_strict_nonconvergence():
    with pytest.raises(ConvergenceError):
        oracle_spectrum(ModelParams.rabi(0.5, 0.4), 4, tol=1e-30)


def test_sector_spectrum_union_is_full():
    p = ModelParams.rabi(0.6, 0.5)
    full = oracle_spectrum(p, 10, vectors=False).energies
    both = np.sort(np.concatenate([sector_spectrum(p, 1, 10), sector_spectrum(p, -1, 10)]))[:10]
    assert np.allclose(both, full, atol=1e-10)


def test_sector_spectrum_unknown_sector():
    with pytest.raises(DomainError):
        sector_spectrum(ModelParams.rabi(0.6, 0.5), 2, 5)


def test_two_photon_classes():
    o = oracle_spectrum(ModelParams.two_photon(0.2, 1.0), 8, vectors=False)
    assert set(o.sectors) <= {1, -1, 1j, -1j}
    assert o.parities == (None,) * 8


def test_jc_energies_at_zero_coupling():
    e = jc_energies(ModelParams.rabi(0.0, 0.5), 5)
    assert np.allclose(e, [-0.5, 0.5, 0.5, 1.5, 1.5])


def test_jc_energies_match_lam_zero_oracle():
    p = ModelParams.anisotropic(0.4, 0.3, 0.0)
    o = oracle_spectrum(p, 9, vectors=False).energies
    assert np.allclose(jc_energies(ModelParams.rabi(0.4, 0.3), 9), o, atol=1e-10)


def test_parity_expectation_of_basis_states():
    v = np.zeros(6)
    v[0] = 1.0                      # |up, 0>
    assert parity_expectation(v) == -1.0
    v = np.zeros(6)
    v[2] = v[1] = math.sqrt(0.5)   # |up,1> + |down,0>
    assert parity_of_state(v) == 1
    v[0] = 1.0
    assert parity_of_state(v / np.linalg.norm(v)) is None


def test_variant_values():
    assert [v.value for v in Variant] == ["rabi", "asymmetric", "anisotropic", "twophoton"]
