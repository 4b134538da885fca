import numpy as np
import pytest

from rabiq.analysis import berry_phase, jc_photon_number, spacing_histogram
from rabiq.model import DomainError, ModelParams


def test_delta_zero_spacings_equal_omega():
    h = spacing_histogram(ModelParams.rabi(0.5, 0.0), 1, 60)
    assert np.max(np.abs(h.spacings - 1.0)) < 1e-10
    assert h.counts.sum() == 59


def test_histogram_accounts_for_every_spacing():
    h = spacing_histogram(ModelParams.rabi(0.3, 2.5), -1, 80)
    assert h.counts.sum() == 79
    assert np.allclose(np.diff(h.edges), 0.02)


def test_two_peak_structure():
    h = spacing_histogram(ModelParams.rabi(0.5, 1.5), 1, 501)
    assert h.peaks.size == 2 and h.peaks[0] < 1.0 < h.peaks[1]
    assert h.peak_widths.size == 2


def test_histogram_validation():
    with pytest.raises(DomainError):
        spacing_histogram(ModelParams.rabi(0.5, 1.5), 1, 10)
    with pytest.raises(DomainError):
        spacing_histogram(ModelParams.rabi(0.5, 1.5), 0, 60)
    with pytest.raises(DomainError):
        spacing_histogram(ModelParams.two_photon(0.2, 1.0), 1, 60)


@pytest.mark.parametrize("n", [0, 1, 3])
@pytest.mark.parametrize("parity", [1, -1])
def test_berry_bare_levels(n, parity):
    r = berry_phase(ModelParams.rabi(0.0, 0.4), n, [0.0], parity)
    assert r.gamma[0] == n


def test_berry_delta_zero_sweep():
    g = np.linspace(0, 1.0, 11)
    r = berry_phase(ModelParams.rabi(0.0, 0.0), 2, g, -1)
    assert np.max(np.abs(r.gamma - (2 + g ** 2))) < 1e-6
    assert r.truncation_delta < 1e-8
    assert r.min_overlap > 0.99


def test_berry_weak_coupling_follows_rotating_wave():
    # |up, 0> (parity -1) is the lower state of the N = 1 block for delta < 1/2;
    # counter-rotating corrections are of order (g / (omega + 2 delta))^2
    p = ModelParams.rabi(0.0, 0.3)
    r = berry_phase(p, 0, [0.0, 0.01], -1)
    want = jc_photon_number(p.with_g(0.01), 1, -1)
    assert want > 5e-4
    assert r.gamma[1] == pytest.approx(want, abs=1e-4)


def test_berry_validation():
    p = ModelParams.rabi(0.0, 0.4)
    with pytest.raises(DomainError):
        berry_phase(p, -1, [0.0])
    with pytest.raises(DomainError):
        berry_phase(p, 0, [0.5, 0.2])
    with pytest.raises(DomainError):
        berry_phase(ModelParams.two_photon(0.0, 0.4), 0, [0.0])


def test_jc_photon_number_limits():
    p = ModelParams.rabi(0.0, 0.3)
    assert jc_photon_number(p, 0, 1) == 0.0
    # resonant block: equal mixture of |up, N-1> and |down, N>
    q = ModelParams.rabi(0.2, 0.5)
    assert jc_photon_number(q, 3, 1) == pytest.approx(2.5)
    with pytest.raises(DomainError):
        jc_photon_number(q, 2, 0)
