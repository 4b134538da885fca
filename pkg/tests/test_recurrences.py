import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiq.model import DomainError, ModelParams, PoleProximityError, oracle_spectrum
from rabiq.recurrences import (aniso_g, aniso_poles, aniso_values, asym_g, asym_poles, asym_values,
                               bogoliubov_params, bogoliubov_values, braak_g, braak_values,
                               constraint_polynomial, k_coeffs, rabi_sums, twophoton_g,
                               twophoton_values)
from rabiq.spectrum import RootScanConfig, scan_roots


def test_k_coeffs_start():
    p = ModelParams.rabi(0.5, 0.4)
    x = 0.3
    K = k_coeffs(x, p, 4).coefficients
    om0 = (4 * 0.25 - x - 0.16 / (0 - x)) / (2 * 0.5)
    assert K[0] == 1.0
    assert math.isclose(K[1], om0, rel_tol=1e-14)


def test_k_coeffs_pole_guard():
    with pytest.raises(PoleProximityError):
        k_coeffs(2.0 + 1e-9, ModelParams.rabi(0.5, 0.4), 5)


def test_braak_g_pole_guard_and_convergence():
    p = ModelParams.rabi(0.6, 0.5)
    with pytest.raises(PoleProximityError):
        braak_g(1 + 1e-8, 1, p)
    r = braak_g(0.5, "+", p)
    assert r.converged and r.tail_bound < 1e-12


def test_braak_g_sign_validation():
    with pytest.raises(DomainError):
        braak_g(0.5, 2, ModelParams.rabi(0.6, 0.5))


def test_braak_g_wrong_variant():
    with pytest.raises(DomainError):
        braak_g(0.5, 1, ModelParams.two_photon(0.2, 0.5))


def test_braak_zeros_are_oracle_levels():
    g, d = 0.7, 0.4
    o = oracle_spectrum(ModelParams.rabi(g, d), 4, vectors=False).energies
    for e in o:
        x = e + g * g
        v = braak_values(x, 1, g, d)[0] * braak_values(x, -1, g, d)[0]
        scale = abs(braak_values(x + 1e-3, 1, g, d)[0] * braak_values(x + 1e-3, -1, g, d)[0])
        assert abs(v[0]) < 1e-8 * max(scale, 1.0)


@settings(max_examples=25, deadline=None)
@given(g=st.floats(0.05, 1.2), d=st.floats(0.05, 1.2), x=st.floats(-1.5, 4.5))
def test_asymmetric_reduces_to_product_at_zero_bias(g, d, x):
    if abs(x - round(x)) < 1e-3:
        x += 0.01
    a = asym_values(x, g, d, 0.0)[0][0]
    b = -braak_values(x, 1, g, d)[0][0] * braak_values(x, -1, g, d)[0][0]
    assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=25, deadline=None)
@given(g=st.floats(0.05, 1.2), d=st.floats(0.05, 1.2), x=st.floats(-1.5, 4.5))
def test_anisotropic_at_unit_lam_is_proportional_to_rabi(g, d, x):
    if abs(x - round(x)) < 1e-3:
        x += 0.01
    a = aniso_values(x, 1, g, d, 1.0)[0][0]
    b = braak_values(x, 1, g, d)[0][0]
    assert math.isclose(a, -2 * b, rel_tol=1e-9, abs_tol=1e-12)


def test_asym_poles_double_at_half_bias():
    p = asym_poles(0.5, 3)
    vals, counts = np.unique(p, return_counts=True)
    assert dict(zip(vals.tolist(), counts.tolist()))[1.5] == 2
    assert np.array_equal(asym_poles(0.0, 3), np.arange(5.0))


def test_aniso_poles_exclude_integers():
    p = aniso_poles(0.6, 0.5, 0.5, 3)
    assert np.all(np.abs(p - np.round(p)) > 1e-3)
    assert np.allclose(np.diff(p), 1.0)


def test_aniso_g_only_at_origin():
    with pytest.raises(DomainError):
        aniso_g(0.5, 1, ModelParams.anisotropic(0.3, 0.4, 0.5), z=0.1)


def test_asym_g_evaluates():
    r = asym_g(0.3, ModelParams.asymmetric(0.5, 0.4, 0.2))
    assert r.converged and math.isfinite(r.value)


def test_constraint_polynomial_judd_example():
    # Delta^2 + 4 g^2 = 1 puts the n = 1 level on its pole
    res, _ = constraint_polynomial(1, 0.4, 0.6)
    assert abs(res) < 1e-15
    res, _ = constraint_polynomial(1, 0.3, 0.6)
    assert abs(res) > 1e-3


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 12), g=st.floats(0.01, 2.0), d=st.floats(0.0, 3.0))
def test_constraint_polynomial_is_normalized(n, g, d):
    res, _ = constraint_polynomial(n, g, d)
    assert abs(res) <= 1.0 + 1e-12


def test_constraint_polynomial_negative_n():
    with pytest.raises(DomainError):
        constraint_polynomial(-1, 0.3, 0.4)


def test_bogoliubov_params_identity():
    u, nu, beta = bogoliubov_params(0.3)
    assert math.isclose(u * u - nu * nu, 1.0, rel_tol=1e-14)
    assert math.isclose(beta, 1 / math.sqrt(1 - 0.36), rel_tol=1e-14)
    with pytest.raises(DomainError):
        bogoliubov_params(0.5)


def test_two_photon_condition_changes_sign_at_levels():
    g, d = 0.25, 1.0
    o = oracle_spectrum(ModelParams.two_photon(g, d), 6, vectors=False)
    for e, c in zip(o.energies, o.sectors):
        lo = twophoton_values(e - 1e-6, c, g, d)[0]
        hi = twophoton_values(e + 1e-6, c, g, d)[0]
        assert lo * hi < 0


def test_two_photon_condition_needs_coupling():
    with pytest.raises(DomainError):
        twophoton_g(0.3, 1, ModelParams.two_photon(0.0, 1.0))
    with pytest.raises(DomainError):
        twophoton_values(0.3, 2, 0.2, 1.0)


def test_bogoliubov_condition_converges():
    v, terms, tail, ok = bogoliubov_values(np.array([0.3, 1.3]), "e", 1, 0.25, 1.0)
    assert ok.all() and np.all(np.isfinite(v))


def test_bias_sign_does_not_change_zeros():
    g, d, e = 0.5, 0.4, 0.3
    cfg = RootScanConfig(-1.5, 4.0)
    z = [scan_roots(lambda x, s=s: asym_values(x, g, d, s * e)[0], cfg, asym_poles(e, 5.0)).roots
         for s in (1, -1)]
    assert len(z[0]) == len(z[1]) > 4
    assert np.max(np.abs(np.array(z[0]) - np.array(z[1]))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(g=st.floats(0.05, 1.2), d=st.floats(0.05, 1.2))
def test_sign_pattern_stable_under_series_tolerance(g, d):
    x = np.linspace(-1.0, 4.0, 101) + 0.0137
    for s in (1, -1):
        a = np.sign(braak_values(x, s, g, d, tol=1e-12)[0])
        b = np.sign(braak_values(x, s, g, d, tol=1e-14)[0])
        assert np.array_equal(a, b)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@settings(max_examples=50, deadline=None)
@given(g=st.floats(0.05, 1.5), d=st.floats(0.0, 1.5), x=st.floats(-2.0, 8.0),
       shift=st.sampled_from([0.0, 0.2, -0.5]))
def test_scalar_series_matches_vectorized(g, d, x, shift):
    vec = rabi_sums(np.array([x, x + 0.1]), g, d, shift)
    one = rabi_sums(x, g, d, shift)
    for i in (0, 1, 3, 4):
        assert np.array_equal(vec[i][:1], one[i], equal_nan=(i != 4))
