"""Analytic-versus-oracle verification suite.

Each ``check_*`` function evaluates one acceptance criterion and returns a
:class:`CheckResult` whose ``metrics`` are deterministic numbers (timings are
kept apart in ``elapsed``).  ``run_checks`` drives a selection of them; the
``verify`` subcommand prints the resulting table.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .analysis import berry_phase, spacing_histogram
from .dynamics import (coherent_initial, fock_initial, p_deep_strong, p_revival_delta0, p_rwa,
                       propagate, revival_peaks)
from .heun import HeunParams, k_condition, rabi_maps, truncation_check, weak_values, wronskian_values, z_grid
from .model import ModelParams, jc_energies, oracle_spectrum
from .recurrences import braak_values
from .spectrum import (RootScanConfig, asym_judd_count, asym_judd_points, judd_count, judd_points,
                       regular_spectrum, scan_roots, twophoton_exceptional)

__all__ = ["CheckResult", "CHECKS", "run_checks", "thread_count", "grid_values"]


@dataclass
class CheckResult:
    """Outcome of one criterion: pass flag, deterministic metrics, wall time."""

    id: int
    title: str
    passed: bool
    metrics: Dict[str, object] = field(default_factory=dict)
    notes: str = ""
    elapsed: float = 0.0


def thread_count() -> int:
    """Worker cap from ``RABIQ_THREADS`` (default 1)."""
    raw = os.environ.get("RABIQ_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _pmap(fn: Callable, items: Sequence) -> list:
    # results come back in input order whatever the worker count
    n = thread_count()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def grid_values() -> List[tuple]:
    """The ``(g, delta)`` test grid: ``g in {0.1..1.2}``, ``delta in {0.1..1.0}``."""
    gs = np.round(np.arange(1, 13) * 0.1, 10)
    ds = np.round(np.arange(1, 11) * 0.1, 10)
    return [(float(g), float(d)) for g in gs for d in ds]


def _match(a: Sequence[float], b: Sequence[float]) -> float:
    """Largest nearest-neighbour distance between two root sets (inf if counts differ)."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    if a.size != b.size:
        return math.inf
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def _roots(fn, lo: float, hi: float, poles: Sequence[float], step: float = 0.01) -> List[float]:
    cfg = RootScanConfig(lo, hi, scan_step=step, bisection_tol=1e-14)
    return scan_roots(fn, cfg, poles).roots


# 1 ---------------------------------------------------------------------------


def check_rabi_grid() -> CheckResult:
    t0 = time.perf_counter()

    def one(gd):
        g, d = gd
        p = ModelParams.rabi(g, d)
        e = np.array([l.energy for l in regular_spectrum(p, 10)])
        o = oracle_spectrum(p, 10, vectors=False).energies
        return float(np.max(np.abs(e - o)))

    errs = _pmap(one, grid_values())
    worst = max(errs)
    el = time.perf_counter() - t0
    return CheckResult(1, "Rabi oracle equivalence (12x10 grid, 10 levels)",
                       worst < 1e-7 and el < 60.0,
                       {"max_abs_dE": worst, "points": len(errs)},
                       "runtime bound 60 s", el)


# 2, 3 ------------------------------------------------------------------------

_G2, _D2 = 0.8, 0.7
_ERANGE = (-1.5, 3.0)


def _braak_roots(g: float, d: float, sign: int) -> List[float]:
    lo, hi = _ERANGE[0] + g * g, _ERANGE[1] + g * g
    poles = np.arange(0.0, hi + 1)
    return [x - g * g for x in _roots(lambda x: braak_values(x, sign, g, d)[0], lo, hi, poles)]


def check_condition_equivalence() -> CheckResult:
    t0 = time.perf_counter()
    g, d = _G2, _D2
    braak = {s: _braak_roots(g, d, s) for s in (1, -1)}
    lo, hi = _ERANGE[0] + g * g, _ERANGE[1] + g * g
    poles = np.arange(0.0, hi + 1)
    worst = 0.0
    metrics = {}
    for z in (0.0, 0.3 * g):
        for s in (1, -1):
            for j in range(4):
                # G^s_{3,4} pair with G_s, G^s_{1,2} with G_{-s}
                ref = braak[s] if j >= 2 else braak[-s]
                r = [x - g * g for x in _roots(
                    lambda x, j=j, s=s, z=z: weak_values(x - g * g, z, s, g, d)[0][j], lo, hi, poles)]
                m = _match(r, ref)
                metrics[f"z={z:.2f} G{'+' if s > 0 else '-'}{j + 1}"] = m
                worst = max(worst, m)
    metrics["max_mismatch"] = worst
    return CheckResult(2, "G^pm_{1..4} zeros coincide with Braak G_pm zeros",
                       worst < 1e-8, metrics, "", time.perf_counter() - t0)


def check_wronskian() -> CheckResult:
    t0 = time.perf_counter()
    g, d = _G2, _D2
    ref = sorted(_braak_roots(g, d, 1) + _braak_roots(g, d, -1))
    lo, hi = _ERANGE[0] + g * g, _ERANGE[1] + g * g
    poles = np.arange(0.0, hi + 1)
    worst = 0.0
    metrics = {}
    for z in (0.0, 0.3 * g):
        r = [x - g * g for x in _roots(
            lambda x, z=z: wronskian_values(x - g * g, z, "W1", g, d), lo, hi, poles)]
        m = _match(r, ref)
        metrics[f"z={z:.2f}"] = m
        worst = max(worst, m)
    metrics["max_mismatch"] = worst
    metrics["levels"] = len(ref)
    return CheckResult(3, "W1 zeros match Braak G zeros", worst < 1e-7, metrics, "",
                       time.perf_counter() - t0)


# 4, 5 ------------------------------------------------------------------------


def check_judd() -> CheckResult:
    t0 = time.perf_counter()
    worst_gap = worst_off = worst_res = 0.0
    counts_ok = True
    metrics = {}
    for d in (0.3, 0.6, 0.9):
        for n in (1, 2, 3):
            pts = judd_points(n, d)
            counts_ok &= len(pts) == judd_count(n, d)
            metrics[f"delta={d} n={n} count"] = len(pts)
            for j in pts:
                worst_gap = max(worst_gap, j.degeneracy_gap)
                worst_off = max(worst_off, j.level_offset)
                worst_res = max(worst_res, abs(j.residual))
    metrics.update(max_gap=worst_gap, max_offset=worst_off, max_residual=worst_res)
    ok = counts_ok and worst_gap < 1e-8 and worst_off < 1e-8 and worst_res < 1e-9
    return CheckResult(4, "Judd points: oracle gaps and n-k counts", ok, metrics, "",
                       time.perf_counter() - t0)


def check_judd_truncation() -> CheckResult:
    t0 = time.perf_counter()
    g, d = 0.4, 0.6
    E = 1 - g * g
    p = ModelParams.rabi(g, d)
    _, p2 = rabi_maps(E, g, d)
    tr = truncation_check(HeunParams(*[float(v) for v in p2]), 0)
    kmax = 0.0
    gmin = math.inf
    for z in z_grid(g):
        for s in (1, -1):
            kmax = max(kmax, abs(k_condition(E, z, s, p)))
            G, S = weak_values(E, z, s, g, d)
            gmin = min(gmin, float(np.min(np.abs(G) / S)))
    ok = tr.holds and kmax < 1e-10 and gmin > 1e-3
    return CheckResult(5, "Judd example: Heun truncation at order 0, K=0, G!=0", ok,
                       {"truncates": tr.holds, "truncation_residual": tr.residual,
                        "max_abs_K": kmax, "min_rel_G": gmin}, "", time.perf_counter() - t0)


# 6 ---------------------------------------------------------------------------


def check_asymmetric() -> CheckResult:
    t0 = time.perf_counter()
    metrics = {}
    d, e = 0.4, 0.5
    gap = off = 0.0
    pair = 0.0
    for n in (1, 2):
        up = asym_judd_points(n, d, e, "+")
        dn = asym_judd_points(n + 1, d, e, "-")
        pair = max(pair, _match([j.g_star for j in up], [j.g_star for j in dn]))
        for j in up + dn:
            gap = max(gap, j.degeneracy_gap)
            off = max(off, j.level_offset)
    metrics.update(half_pair_g_mismatch=pair, half_max_gap=gap, half_max_offset=off)
    counts_ok = True
    gap2 = 0.0
    for dd in (0.5, 0.8, 1.0, 1.5, 2.0, 2.5, 3.5):
        for fam in ("+", "-"):
            pts = asym_judd_points(3, dd, 0.2, fam)
            want = asym_judd_count(3, dd, 0.2, fam)
            metrics[f"N=3 eps=0.2 delta={dd} {fam}"] = f"{len(pts)}/{want}"
            counts_ok &= len(pts) == want
            # off half-integer bias the exceptional levels are not degenerate;
            # the oracle must still hold a level at the exceptional energy
            for j in pts:
                gap2 = max(gap2, j.level_offset)
    metrics["band_max_offset"] = gap2
    ok = pair < 1e-9 and gap < 1e-8 and off < 1e-8 and counts_ok and gap2 < 1e-8
    return CheckResult(6, "Biased model: eps=1/2 degeneracies, exceptional energies, bands", ok,
                       metrics, "", time.perf_counter() - t0)


# 7 ---------------------------------------------------------------------------

_ANISO_POINTS = ((0.3, 0.4), (0.6, 0.4), (0.9, 0.7))


def check_anisotropic() -> CheckResult:
    t0 = time.perf_counter()
    e1 = e0 = eh = 0.0
    for g, d in _ANISO_POINTS:
        a1 = [l.energy for l in regular_spectrum(ModelParams.anisotropic(g, d, 1.0), 10)]
        r = [l.energy for l in regular_spectrum(ModelParams.rabi(g, d), 10)]
        e1 = max(e1, _match(a1, r))
        a0 = [l.energy for l in regular_spectrum(ModelParams.anisotropic(g, d, 0.0), 10)]
        e0 = max(e0, _match(a0, jc_energies(ModelParams.rabi(g, d), 10)))
        ph = ModelParams.anisotropic(g, d, 0.5)
        ah = [l.energy for l in regular_spectrum(ph, 10)]
        eh = max(eh, _match(ah, oracle_spectrum(ph, 10, vectors=False).energies))
    ok = e1 < 1e-8 and e0 < 1e-10 and eh < 1e-7
    return CheckResult(7, "Anisotropic: lam=1 Rabi, lam=0 JC, lam=1/2 oracle", ok,
                       {"lam1_vs_rabi": e1, "lam0_vs_jc": e0, "lam_half_vs_oracle": eh}, "",
                       time.perf_counter() - t0)


# 8 ---------------------------------------------------------------------------


def twophoton_spacing_ratios(g: float, delta: float = 1.0) -> Dict[complex, float]:
    """Lowest spacing of each two-photon class over its collapse-law value ``2 sqrt(1 - 4g^2)``."""
    o = oracle_spectrum(ModelParams.two_photon(g, delta), 12, vectors=False)
    per: Dict[complex, list] = {}
    for e, c in zip(o.energies, o.sectors):
        per.setdefault(c, []).append(e)
    r = math.sqrt(1 - 4 * g * g)
    return {c: (v[1] - v[0]) / (2 * r) for c, v in per.items() if len(v) > 1}


def check_two_photon() -> CheckResult:
    t0 = time.perf_counter()
    pts = twophoton_exceptional(2, 1.0)
    g2 = pts[0].g_star ** 2 if pts else math.nan
    gap = pts[0].degeneracy_gap if pts else math.inf
    ratios = twophoton_spacing_ratios(0.45)
    dev = max(abs(v - 1) for v in ratios.values())
    p = ModelParams.two_photon(0.25, 1.0)
    o = oracle_spectrum(p, 12, vectors=False).energies
    ed = _match([l.energy for l in regular_spectrum(p, 12)], o)
    eb = _match([l.energy for l in regular_spectrum(p, 12, method="bogoliubov")], o)
    ok = len(pts) == 1 and abs(g2 - 0.125) < 1e-12 and gap < 1e-7 and dev < 0.02 \
        and ed < 1e-6 and eb < 1e-6
    metrics = {"N2_g_squared": g2, "N2_gap": gap, "spacing_ratio_max_dev_g0.45": dev,
               "G_roots_vs_oracle": ed, "bogoliubov_roots_vs_oracle": eb}
    for c, v in sorted(ratios.items(), key=lambda kv: (kv[0].real, kv[0].imag)):
        metrics[f"spacing_ratio C={c}"] = v
    return CheckResult(8, "Two-photon: N=2 point, collapse scaling, G roots", ok, metrics,
                       "spacing ratio = lowest in-class spacing / 2 sqrt(1-4g^2) at delta=1",
                       time.perf_counter() - t0)


# 9 ---------------------------------------------------------------------------


def check_dynamics() -> CheckResult:
    t0 = time.perf_counter()
    a = math.sqrt(10.0)
    s = coherent_initial(a)
    m = {}
    tr = propagate(s, ModelParams.rabi(0.2, 0.5), np.linspace(0, 50 / 0.2, 2048))
    m["norm_drift"] = tr.norm_drift
    tg = np.linspace(0, 4 * math.pi, 1601)
    tr0 = propagate(fock_initial(0, "down"), ModelParams.rabi(2.0, 0.0), tg)
    m["delta0_revival_dev"] = float(np.max(np.abs(tr0.revival - p_revival_delta0(2.0, tg).revival)))
    prw = ModelParams.rabi(0.02, 0.5)
    tg = np.linspace(0, 5 / 0.02, 8193)
    diff = propagate(s, prw, tg).inversion - p_rwa(s, prw, tg).inversion
    m["rwa_max_dev"] = float(np.max(np.abs(diff)))
    # informational: the counter-rotating ripple averaged over its period 2 pi/(omega + 2 delta)
    w = max(1, int(round(2 * math.pi / (1 + 2 * prw.delta) / (tg[1] - tg[0]))))
    m["rwa_ripple_averaged_max_dev"] = float(np.max(np.abs(np.convolve(diff, np.ones(w) / w, "valid"))))
    pds = ModelParams.rabi(2.0, 0.5)
    tg = np.linspace(0, 5 * math.pi, 4096)
    full = propagate(s, pds, tg)
    T = 2 * math.pi
    peaks = revival_peaks(tg, full.inversion, T, 2)
    m["deep_strong_peaks_over_2pi"] = [float(x) for x in peaks / T]
    pk_dev = float(max(abs(x / (k + 1) - T) / T for k, x in enumerate(peaks))) if peaks.size == 2 else math.inf
    m["deep_strong_peak_rel_dev"] = pk_dev
    closed = p_deep_strong(pds, a, tg)
    m["printed_formula_max_dev"] = float(np.max(np.abs(closed.inversion - full.inversion)))
    m["printed_formula_typo_flag"] = m["printed_formula_max_dev"] > 0.15
    ok = (m["norm_drift"] < 1e-10 and m["delta0_revival_dev"] < 1e-6 and m["rwa_max_dev"] < 0.05
          and pk_dev < 0.01)
    notes = "printed deep-strong formula deviates by > 0.15 (typo hypothesis)" \
        if m["printed_formula_max_dev"] > 0.15 else ""
    return CheckResult(9, "Dynamics: norm, delta=0 revival, RWA, deep-strong revivals", ok, m,
                       notes, time.perf_counter() - t0)


# 10 --------------------------------------------------------------------------


def check_berry() -> CheckResult:
    t0 = time.perf_counter()
    exact = True
    for n in range(5):
        for par in (1, -1):
            exact = exact and bool(berry_phase(ModelParams.rabi(0.0, 0.4), n, [0.0], par).gamma[0] == n)
    grid = np.linspace(0, 1.2, 25)
    dev = 0.0
    for n in range(4):
        for par in (1, -1):
            r = berry_phase(ModelParams.rabi(0.0, 0.0), n, grid, par)
            dev = max(dev, float(np.max(np.abs(r.gamma - (n + grid ** 2)))))
    stab = 0.0
    for n in range(4):
        r = berry_phase(ModelParams.rabi(0.0, 0.4), n, np.linspace(0, 1.0, 21), 1)
        stab = max(stab, r.truncation_delta)
    ok = exact and dev < 1e-6 and stab < 1e-8
    return CheckResult(10, "Berry phase: g=0 exact, delta=0 n+g^2, truncation stability", ok,
                       {"g0_exact": exact, "delta0_max_dev": dev, "truncation_delta": stab}, "",
                       time.perf_counter() - t0)


# 11 --------------------------------------------------------------------------


def check_statistics() -> CheckResult:
    t0 = time.perf_counter()
    flat = 0.0
    for par in (1, -1):
        h = spacing_histogram(ModelParams.rabi(0.5, 0.0), par, 100)
        flat = max(flat, float(np.max(np.abs(h.spacings - 1.0))))
    h = spacing_histogram(ModelParams.rabi(0.5, 1.5), 1, 501)
    two = h.peaks.size == 2 and h.peaks[0] < 1.0 < h.peaks[1]
    counts = set()
    adjacent = {"2,2": 0, "0,0": 0}

    def occupancy(gd):
        g, d = gd
        out, pairs = set(), {"2,2": 0, "0,0": 0}
        for s in (1, -1):
            r = scan_roots(lambda x, s=s: braak_values(x, s, g, d)[0],
                           RootScanConfig(-1.0, 5.0), np.arange(0.0, 6.0))
            # the unbounded first segment (-1, 0) is left out of the adjacency count,
            # and so is a pair whose shared pole carries an exceptional root
            seg = [(b, k) for a, b, k in r.interval_counts if a >= 0.0]
            out |= {k for _, _, k in r.interval_counts}
            for (b, u), (_, v) in zip(seg, seg[1:]):
                key = f"{u},{v}"
                if key in pairs and not any(abs(b - c) < 1e-9 for c in r.candidates):
                    pairs[key] += 1
        return out, pairs

    for occ, pairs in _pmap(occupancy, [(0.7, 0.4)] + grid_values()):
        counts |= occ
        for k, v in pairs.items():
            adjacent[k] += v
    ok = flat < 1e-10 and two and counts <= {0, 1, 2} and int(h.counts.sum()) == 500
    # the adjacency rules are stated as beliefs, so they are reported, not asserted
    return CheckResult(11, "Level statistics: delta=0 ladder, two peaks, interval occupancy", ok,
                       {"delta0_max_dev": flat, "peaks": [float(x) for x in h.peaks],
                        "histogram_total": int(h.counts.sum()), "interval_counts": sorted(counts),
                        "adjacent_double_intervals": adjacent["2,2"],
                        "adjacent_empty_intervals": adjacent["0,0"]},
                       "", time.perf_counter() - t0)


CHECKS: Dict[int, Callable[[], CheckResult]] = {
    1: check_rabi_grid,
    2: check_condition_equivalence,
    3: check_wronskian,
    4: check_judd,
    5: check_judd_truncation,
    6: check_asymmetric,
    7: check_anisotropic,
    8: check_two_photon,
    9: check_dynamics,
    10: check_berry,
    11: check_statistics,
}


def run_checks(ids: Optional[Sequence[int]] = None) -> List[CheckResult]:
    """Run the selected checks (all by default) in ascending order."""
    sel = sorted(CHECKS) if ids is None else sorted(set(ids))
    out = []
    for i in sel:
        if i not in CHECKS:
            raise KeyError(f"no check {i}")
        out.append(CHECKS[i]())
    return out
