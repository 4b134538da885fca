"""Level-spacing statistics within a parity chain and Berry phases of eigenstates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.signal import find_peaks
from scipy.stats import gaussian_kde

from .model import DomainError, ModelParams, Variant, sector_chains, sector_spectrum

__all__ = [
    "SpacingHistogram",
    "BerryPhaseResult",
    "spacing_histogram",
    "berry_phase",
    "jc_photon_number",
]

BIN_WIDTH = 0.02
HIST_RANGE = (0.0, 2.0)
MIN_LEVELS = 50
OVERLAP_MIN = 0.99
STEP_FLOOR = 1e-6


@dataclass
class SpacingHistogram:
    """Nearest-neighbour spacings ``E_{n+1} - E_n`` of one parity chain (units of omega).

    ``peaks`` holds the two most prominent maxima of a kernel density estimate
    of the spacings (ascending); ``peak_widths`` the standard deviation of the
    spacings on each side of the density minimum separating them.
    """

    spacings: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    levels_used: int
    parity: int
    peaks: np.ndarray = field(default_factory=lambda: np.empty(0))
    peak_widths: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass
class BerryPhaseResult:
    """``gamma_n / 2 pi = <a^dag a>`` of one tracked eigenstate along a coupling sweep."""

    n: int
    parity: int
    g: np.ndarray
    gamma: np.ndarray
    energy: np.ndarray
    min_overlap: float
    ambiguous: List[float]
    truncation_delta: float
    n_max: int


def _peaks(spacings: np.ndarray, bandwidth: float) -> Tuple[np.ndarray, np.ndarray]:
    s = spacings
    if s.size < 3 or np.ptp(s) < 1e-9:
        return np.array([float(np.mean(s))]) if s.size else np.empty(0), np.zeros(min(1, s.size))
    kde = gaussian_kde(s, bw_method=bandwidth / np.std(s))
    xs = np.linspace(s.min() - 3 * bandwidth, s.max() + 3 * bandwidth, 4001)
    d = kde(xs)
    idx, prop = find_peaks(d, prominence=0.02 * d.max())
    if idx.size == 0:
        return np.array([xs[np.argmax(d)]]), np.array([float(np.std(s))])
    top = np.sort(idx[np.argsort(prop["prominences"])[::-1][:2]])
    peaks = xs[top]
    if top.size < 2:
        return peaks, np.array([float(np.std(s))])
    cut = xs[top[0] + int(np.argmin(d[top[0]: top[1] + 1]))]
    widths = np.array([np.std(s[s <= cut]), np.std(s[s > cut])])
    return peaks, widths


def spacing_histogram(params: ModelParams, parity: int, k_levels: int,
                      bin_width: float = BIN_WIDTH, hist_range: Tuple[float, float] = HIST_RANGE,
                      bandwidth: Optional[float] = None) -> SpacingHistogram:
    """Histogram of nearest-neighbour spacings of the lowest ``k_levels`` of one chain.

    Levels come from the converged truncated diagonalization.  Bins of width
    ``bin_width`` cover ``hist_range`` and are extended upward if a spacing
    lies beyond it, so the counts always add up to ``k_levels - 1``.

    Raises
    ------
    DomainError
        If ``k_levels < 50`` or the model has no parity chains.
    ConvergenceError
        If the levels do not converge under truncation doubling.
    """
    if k_levels < MIN_LEVELS:
        raise DomainError(f"k_levels must be >= {MIN_LEVELS}, got {k_levels}")
    if parity not in (1, -1):
        raise DomainError("parity must be +1 or -1")
    if params.variant not in (Variant.RABI, Variant.ANISOTROPIC):
        raise DomainError("spacing statistics need a parity-conserving variant")
    if bin_width <= 0:
        raise DomainError("bin_width must be positive")
    e = sector_spectrum(params, parity, k_levels) / params.omega
    s = np.diff(e)
    lo, hi = hist_range
    top = max(hi, float(s.max()) + bin_width) if s.size else hi
    nb = int(math.ceil((top - lo) / bin_width - 1e-9))
    edges = lo + bin_width * np.arange(nb + 1)
    counts, _ = np.histogram(s, bins=edges)
    peaks, widths = _peaks(s, bandwidth if bandwidth is not None else 2 * bin_width)
    return SpacingHistogram(s, edges, counts, int(e.size), parity, peaks, widths)


def _chain_eig(params: ModelParams, parity: int, n_max: int, k: int):
    ch = sector_chains(params, n_max)[parity]
    w, v = eigh_tridiagonal(ch.diag, ch.offdiag, select="i", select_range=(0, min(k, ch.diag.size) - 1))
    photons = ch.index // 2
    return w, v.T, photons


def _cutoff(n: int, g_max: float) -> int:
    # one doubling beyond the energy cutoff so that <a^dag a> has converged too
    return 2 * max(4 * (n + 12), math.ceil(16 * g_max * g_max) + 32, n + 40)


def _track(params: ModelParams, n: int, parity: int, grid: np.ndarray, n_max: int):
    k = 2 * n + 12
    ch = sector_chains(params.with_g(0.0), n_max)[parity]
    site = int(np.nonzero(ch.index // 2 == n)[0][0])
    ref = np.zeros(ch.diag.size)
    ref[site] = 1.0
    gam, en = [], []
    amb: List[float] = []
    worst = 1.0
    g_now = 0.0
    for target in grid:
        step = target - g_now
        while g_now < target - 1e-15:
            g_try = min(target, g_now + step)
            w, v, photons = _chain_eig(params.with_g(g_try), parity, n_max, k)
            ov = np.abs(v @ ref)
            j = int(np.argmax(ov))
            if ov[j] < OVERLAP_MIN and step > STEP_FLOOR:
                step /= 2
                continue
            if ov[j] < OVERLAP_MIN:
                amb.append(float(g_try))
            worst = min(worst, float(ov[j]))
            ref = v[j] * np.sign(v[j] @ ref)
            g_now = g_try
            step = min(2 * step, target - g_now) if target > g_now else step
        w, v, photons = _chain_eig(params.with_g(target), parity, n_max, k)
        ov = np.abs(v @ ref)
        j = int(np.argmax(ov))
        if ov[j] < OVERLAP_MIN and (not amb or amb[-1] != float(target)):
            amb.append(float(target))
        worst = min(worst, float(ov[j]))
        ref = v[j] * np.sign(v[j] @ ref)
        gam.append(float(np.sum(photons * ref * ref)))
        en.append(float(w[j]))
    return np.array(gam), np.array(en), worst, amb


def berry_phase(params: ModelParams, n: int, g_grid: Sequence[float], parity: int = 1) -> BerryPhaseResult:
    """Berry phase ``gamma_n / 2 pi = <psi_n| a^dag a |psi_n>`` along a coupling sweep.

    The state is the eigenstate of the ``parity`` chain that reduces to the
    number state with ``n`` photons at ``g = 0``.  It is followed from ``g = 0``
    through the ascending ``g_grid`` by eigenvector overlap; steps are halved
    until consecutive overlaps exceed 0.99, down to 1e-6, after which the point
    is listed in ``ambiguous``.  The sweep is repeated with a doubled cutoff and
    the largest change is reported as ``truncation_delta``.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if parity not in (1, -1):
        raise DomainError("parity must be +1 or -1")
    if params.variant not in (Variant.RABI, Variant.ANISOTROPIC):
        raise DomainError("Berry phases are computed for parity-conserving variants")
    grid = np.asarray(g_grid, dtype=float) / params.omega
    if grid.ndim != 1 or grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise DomainError("g_grid must be a non-empty ascending sequence of g >= 0")
    p = params.reduced()
    N = _cutoff(n, float(grid.max()))
    gam, en, worst, amb = _track(p, n, parity, grid, N)
    gam2, _, _, _ = _track(p, n, parity, grid, 2 * N)
    return BerryPhaseResult(
        n=n, parity=parity, g=grid * params.omega, gamma=gam, energy=en * params.omega,
        min_overlap=worst, ambiguous=amb, truncation_delta=float(np.max(np.abs(gam2 - gam))),
        n_max=N,
    )


def jc_photon_number(params: ModelParams, N: int, branch: int) -> float:
    """``<a^dag a>`` of a rotating-wave eigenstate in the block ``{|up, N-1>, |down, N>}``.

    ``branch=-1`` is the lower and ``+1`` the upper state of the 2x2 block;
    ``N = 0`` is the isolated ground state ``|down, 0>``.
    """
    p = params.reduced()
    if N == 0:
        return 0.0
    if N < 0 or branch not in (1, -1):
        raise DomainError("need N >= 0 and branch in {+1, -1}")
    a = (N - 1) + p.delta
    d = N - p.delta
    b = p.g * math.sqrt(N)
    half = 0.5 * (a - d)
    r = math.hypot(half, b)
    # weight of |up, N-1> in the eigenvector with eigenvalue mid + branch*r
    w_up = 0.5 * (1 + branch * half / r) if r > 0 else (1.0 if (branch > 0) == (a > d) else 0.0)
    return N - w_up
