import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiq.dynamics import (Method, QuantumState, coherent_initial, displacement_matrix,
                            fock_initial, p_deep_strong, p_revival_delta0, p_rwa, propagate,
                            revival_peaks, time_grid)
from rabiq.model import ConvergenceError, DomainError, ModelParams


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-4, 4))
def test_coherent_state_normalized(alpha):
    s = coherent_initial(alpha)
    assert abs(s.norm() - 1) < 1e-12
    assert s.photon_number() == pytest.approx(alpha * alpha, abs=1e-9)


def test_coherent_state_tail_guard():
    with pytest.raises(DomainError):
        coherent_initial(3.0, n_max=10)
    with pytest.raises(DomainError):
        coherent_initial(1.0, level="left")


def test_state_vector_round_trip():
    s = coherent_initial(1.5, "down")
    v = s.vector(s.n_max + 3)
    back = QuantumState.from_vector(v)
    assert np.allclose(back.down[: s.n_max + 1], s.down)
    assert back.inversion() == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        s.vector(2)


def test_fock_state_parity():
    # |up, n> has parity -(-1)^n, |down, n> parity (-1)^n
    assert fock_initial(2, "up").parity_weight(-1) == 1.0
    assert fock_initial(3, "down").parity_weight(-1) == 1.0


def test_time_grid():
    t = time_grid(10.0)
    assert t.size == 2048 and t[0] == 0 and t[-1] == 10
    with pytest.raises(DomainError):
        time_grid(0.0)


def test_norm_and_parity_confinement():
    s = fock_initial(0, "down", n_max=2)
    tr = propagate(s, ModelParams.rabi(0.8, 0.4), np.linspace(0, 30, 200), keep_states=True)
    assert tr.norm_drift < 1e-10
    assert min(x.parity_weight(1) for x in tr.states) > 1 - 1e-10


def test_spectral_matches_ode():
    s = coherent_initial(1.5)
    p = ModelParams.rabi(0.4, 0.5)
    t = np.linspace(0, 20, 41)
    a = propagate(s, p, t, "spectral", keep_states=True)
    b = propagate(s, p, t, "ode", n_max=a.info["n_max"], keep_states=True)
    for x, y in zip(a.states, b.states):
        assert abs(np.vdot(x.vector(), y.vector())) > 1 - 1e-8


def test_leakage_raises():
    with pytest.raises(ConvergenceError):
        propagate(fock_initial(0, "down"), ModelParams.rabi(2.0, 0.0), np.linspace(0, 3, 10),
                  n_max=6)


def test_unknown_method():
    with pytest.raises(DomainError):
        propagate(fock_initial(0), ModelParams.rabi(0.2, 0.5), [0.0, 1.0], method="euler")


def test_delta_zero_closed_form():
    t = np.linspace(0, 4 * math.pi, 801)
    tr = propagate(fock_initial(0, "down"), ModelParams.rabi(2.0, 0.0), t)
    ref = p_revival_delta0(2.0, t)
    assert np.max(np.abs(tr.revival - ref.revival)) < 1e-6
    assert np.max(np.abs(tr.inversion - ref.inversion)) < 1e-6


def test_rwa_closed_form():
    s = coherent_initial(2.0)
    p = ModelParams.rabi(0.05, 0.5)
    t = np.linspace(0, 100, 11)
    tr = p_rwa(s, p, t)
    assert tr.inversion[0] == pytest.approx(1.0)
    assert tr.method is Method.CLOSED_RWA
    one = p_rwa(fock_initial(3, n_max=5), p, t).inversion
    assert np.allclose(one, np.cos(2 * math.sqrt(4) * 0.05 * t))


def test_rwa_preconditions():
    with pytest.raises(DomainError):
        p_rwa(coherent_initial(1.0), ModelParams.rabi(0.05, 0.4), [0.0])
    with pytest.raises(DomainError):
        p_rwa(coherent_initial(1.0, "down"), ModelParams.rabi(0.05, 0.5), [0.0])


def test_displacement_matrix_orthogonal():
    D = displacement_matrix(0.8, 60)
    blk = (D @ D.T)[:20, :20]
    assert np.allclose(blk, np.eye(20), atol=1e-12)
    # the sum carries a (-1)^n sign: D(0) = diag((-1)^n), continuous in x
    sign = np.diag((-1.0) ** np.arange(6))
    assert np.allclose(displacement_matrix(0.0, 5), sign)
    assert np.allclose(displacement_matrix(1e-7, 5), sign, atol=1e-6)


def test_deep_strong_formula_runs():
    tr = p_deep_strong(ModelParams.rabi(2.0, 0.5), math.sqrt(10), np.linspace(0, 10, 5))
    assert np.all(np.isfinite(tr.inversion))
    assert tr.info["n_cut"] > 10


def test_revival_peaks():
    t = np.linspace(0, 5 * math.pi, 5001)
    sig = np.exp(-np.minimum(t % (2 * math.pi), 2 * math.pi - t % (2 * math.pi)) ** 2)
    pk = revival_peaks(t, sig, 2 * math.pi, 2)
    assert pk == pytest.approx([2 * math.pi, 4 * math.pi], abs=1e-3)
