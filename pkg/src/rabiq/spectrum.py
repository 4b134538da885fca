"""Root scanning, regular spectra, exceptional points and crossing counts.

Energies returned by the public functions are in physical units (multiples
of ``omega``); the spectral variable ``x`` is always dimensionless.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .heun import rabi_truncation_residual
from .model import (
    DomainError,
    ModelParams,
    RabiqError,
    Variant,
    oracle_spectrum,
)
from .recurrences import (
    POLE_GUARD,
    aniso_poles,
    aniso_shift,
    aniso_values,
    asym_poles,
    asym_values,
    bogoliubov_params,
    bogoliubov_values,
    braak_values,
    constraint_polynomial,
    twophoton_values,
)

__all__ = [
    "LevelKind",
    "SpectrumLevel",
    "JuddPoint",
    "RootScanConfig",
    "ScanResult",
    "SIGN_TO_PARITY",
    "scan_roots",
    "calibrate_parity",
    "regular_spectrum",
    "find_roots_1d",
    "judd_points",
    "judd_count",
    "asym_judd_points",
    "asym_judd_count",
    "kus_band",
    "twophoton_exceptional",
    "twophoton_relation",
]

# zeros of G_+ are parity -1 levels, zeros of G_- parity +1 (see calibrate_parity)
SIGN_TO_PARITY = {1: -1, -1: 1}


class LevelKind(str, enum.Enum):
    REGULAR = "regular"
    EXCEPTIONAL_DEGENERATE = "exceptional-degenerate"
    EXCEPTIONAL_NONDEGENERATE = "exceptional-nondegenerate"


@dataclass(frozen=True)
class SpectrumLevel:
    energy: float
    x: float
    parity: Optional[int]
    n: int
    kind: LevelKind = LevelKind.REGULAR
    sector: Optional[complex] = None


@dataclass(frozen=True)
class JuddPoint:
    """An exceptional point located by a constraint relation.

    ``degeneracy_gap`` is the oracle distance between the two levels nearest
    ``energy``; ``level_offset`` the distance from ``energy`` to the nearest
    oracle level.
    """

    n: int
    g_star: float
    delta: float
    omega: float
    energy: float
    residual: float
    degeneracy_gap: float
    level_offset: float
    family: str = "rabi"
    epsilon: float = 0.0


@dataclass(frozen=True)
class RootScanConfig:
    """Scan window and tolerances (spectral-variable units)."""

    x_min: float
    x_max: float
    scan_step: float = 0.05
    bisection_tol: float = 1e-13
    pole_guard: float = POLE_GUARD

    def __post_init__(self):
        if not self.scan_step < 0.25:
            raise DomainError("scan_step must be < 0.25 to resolve two roots per unit interval")
        if not self.bisection_tol <= 1e-10:
            raise DomainError("bisection_tol must be <= 1e-10")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")


@dataclass
class ScanResult:
    """Roots and bookkeeping of one scan.

    ``interval_counts`` lists ``(left, right, count)`` for each pole-free
    segment; ``candidates`` lists poles inside whose guard band a root is
    hiding (the condition has equal signs on both sides of the band);
    ``merged`` lists root pairs closer than 1e-9 that were merged.
    """

    roots: List[float] = field(default_factory=list)
    interval_counts: List[Tuple[float, float, int]] = field(default_factory=list)
    candidates: List[float] = field(default_factory=list)
    unscanned: List[Tuple[float, float]] = field(default_factory=list)
    merged: List[float] = field(default_factory=list)


def _segment_grid(a: float, b: float, step: float, guard: float, left_pole: bool,
                  right_pole: bool) -> np.ndarray:
    lo = a + guard if left_pole else a
    hi = b - guard if right_pole else b
    if hi <= lo:
        return np.array([])
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    pts = [np.linspace(lo, hi, n)]
    # geometric clustering towards poles, where roots can sit arbitrarily close
    depth = max(1, int(math.ceil(math.log10(max(0.5 * step / guard, 10.0)))))
    offs = guard * np.logspace(0, depth, 4 * depth + 1)
    offs = offs[offs < 0.5 * (hi - lo)]
    if left_pole:
        pts.append(a + offs)
    if right_pole:
        pts.append(b - offs)
    return np.unique(np.concatenate(pts))


def _scalar(fn):
    return lambda t: float(np.atleast_1d(fn(np.array([t])))[0])


def _segment_roots(fn, xs, vs, tol, res: ScanResult):
    f = _scalar(fn)
    roots = []
    ok = np.isfinite(vs)
    sg = np.sign(vs)
    roots.extend(float(x) for x in xs[ok & (sg == 0)])
    for i in range(len(xs) - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        # a sample that hits a root exactly is replaced by a point just beside it
        a, b, sa, sb = xs[i], xs[i + 1], sg[i], sg[i + 1]
        if sa == 0:
            a = a + 1e-10 * max(1.0, abs(a))
            sa = np.sign(f(a))
        if sb == 0:
            b = b - 1e-10 * max(1.0, abs(b))
            sb = np.sign(f(b))
        if b > a and sa * sb < 0:
            roots.append(brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps))
    # close pairs: a same-sign local minimum of |v| may hide two roots
    av = np.abs(vs)
    for i in range(1, len(xs) - 1):
        if not (ok[i - 1] and ok[i] and ok[i + 1]):
            continue
        if sg[i - 1] == sg[i] == sg[i + 1] != 0 and av[i] < av[i - 1] and av[i] < av[i + 1]:
            s = sg[i]
            m = minimize_scalar(lambda t: s * f(t), bounds=(xs[i - 1], xs[i + 1]),
                                method="bounded", options={"xatol": 1e-14})
            if m.fun < 0:
                roots.append(brentq(f, xs[i - 1], m.x, xtol=tol))
                roots.append(brentq(f, m.x, xs[i + 1], xtol=tol))
    return roots


def scan_roots(condition: Callable, config: RootScanConfig,
               poles: Sequence[float] = ()) -> ScanResult:
    """Bracket and polish every zero of ``condition`` in ``[x_min, x_max]``.

    ``condition`` maps an array of spectral values to an array of reals and
    must be continuous between consecutive ``poles``.  Each pole-free segment
    is sampled at ``scan_step`` plus geometric points approaching the poles
    down to ``pole_guard``; sign changes are polished with Brent's method and
    same-sign dips are probed for close root pairs.

    >>> r = scan_roots(lambda x: x - 1.5, RootScanConfig(0.0, 3.0))
    >>> round(r.roots[0], 12)
    1.5
    """
    c = config
    poles, mult = np.unique(np.round(np.asarray(
        [p for p in poles if c.x_min < p < c.x_max], dtype=float), 12), return_counts=True)
    edges = np.concatenate([[c.x_min], poles, [c.x_max]])
    res = ScanResult()
    for j in range(len(edges) - 1):
        a, b = float(edges[j]), float(edges[j + 1])
        xs = _segment_grid(a, b, c.scan_step, c.pole_guard, j > 0, j < len(edges) - 2)
        if xs.size < 2:
            res.interval_counts.append((a, b, 0))
            continue
        vs = np.asarray(condition(xs), dtype=float)
        if np.mean(~np.isfinite(vs)) > 0.5:
            res.unscanned.append((a, b))
            continue
        roots = sorted(_segment_roots(condition, xs, vs, c.bisection_tol, res))
        kept = []
        for r in roots:
            if kept and abs(r - kept[-1]) < 1e-9:
                res.merged.append(r)
                continue
            kept.append(r)
        res.roots.extend(kept)
        res.interval_counts.append((a, b, len(kept)))
    # poles whose guard band swallows a root: the condition times (x-p)^m
    # changes sign across the band
    for p, m in zip(poles, mult):
        lo, hi = p - c.pole_guard, p + c.pole_guard
        v = np.asarray(condition(np.array([lo, hi])), dtype=float)
        if np.all(np.isfinite(v)) and np.sign(v[0]) * (-1) ** int(m) != np.sign(v[1]):
            res.candidates.append(float(p))
    return res


def find_roots_1d(fn: Callable[[float], float], lo: float, hi: float, n: int = 2000,
                  xtol: float = 1e-15) -> List[float]:
    """Roots of a scalar function on ``[lo, hi]`` by sign changes on an ``n``-point
    grid plus same-sign dips (close pairs)."""
    xs = np.linspace(lo, hi, n)
    vs = np.array([fn(t) for t in xs])
    res = ScanResult()
    roots = _segment_roots(lambda a: np.array([fn(t) for t in np.atleast_1d(a)]), xs, vs, xtol, res)
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-12:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# regular spectrum


@functools.lru_cache(maxsize=None)
def calibrate_parity(delta: float = 0.4) -> Dict[int, int]:
    """Map each sign of the Rabi G-function to a parity, fixed against the oracle at g = 1e-4.

    The zero of ``G_sign`` nearest ``x = delta`` is located and the oracle
    level closest to it supplies the parity.
    """
    g = 1e-4
    p = ModelParams.rabi(g, delta)
    o = oracle_spectrum(p, 4)
    out = {}
    for s in (1, -1):
        cfg = RootScanConfig(-delta - 1, delta + 0.9)
        r = scan_roots(lambda x, s=s: braak_values(x, s, g, delta)[0], cfg, [0.0, 1.0])
        x0 = min(r.roots, key=lambda x: abs(x - delta))
        i = int(np.argmin(np.abs(o.energies - (x0 - g * g))))
        out[s] = o.parities[i]
    return out


def _chunks(start: float, width: float):
    # chunk edges sit at an irrational-looking offset so they avoid pole lattices
    a = start
    while True:
        b = math.floor(a + width) + 0.5 + 0.0137
        yield a, b
        a = b


def _collect(fns: Dict, x_start: float, k: int, step: float, guard: float, max_x: float = 1e4):
    """Scan each labelled ``(condition, poles_fn)`` chunk by chunk until ``k``
    roots lie below the frontier."""
    found = {lab: [] for lab in fns}
    cands = {lab: [] for lab in fns}
    for a, b in _chunks(x_start, 4.0):
        cfg = RootScanConfig(a, b, scan_step=step, pole_guard=guard)
        for lab, (fn, poles_fn) in fns.items():
            r = scan_roots(fn, cfg, poles_fn(b))
            found[lab].extend(r.roots)
            cands[lab].extend(r.candidates)
        total = sum(len(v) for v in found.values()) + sum(len(v) for v in cands.values())
        if total >= k or b > max_x:
            break
    return found, cands


def regular_spectrum(params: ModelParams, k: int, scan_step: float = 0.05,
                     pole_guard: float = POLE_GUARD, method: str = "default") -> List[SpectrumLevel]:
    """Lowest ``k`` levels from the zeros of the model's G-functions.

    Levels carry ``(parity, n)`` where ``n`` counts zeros of the same
    G-function from below.  Roots hidden inside a pole's guard band are
    returned at the pole, with kind ``exceptional-degenerate`` when the
    constraint polynomial vanishes there and ``exceptional-nondegenerate``
    otherwise.  For the two-photon model ``method="bogoliubov"`` selects the
    squeezed-basis G-function instead of the coefficient-level condition.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    p = params.reduced()
    w = params.omega
    g, D = p.g, p.delta
    levels: List[SpectrumLevel] = []

    if p.variant is Variant.RABI or (p.variant is Variant.ASYMMETRIC and p.epsilon == 0.0):
        ints = lambda b: np.arange(0.0, b + 1)
        fns = {s: ((lambda x, s=s: braak_values(x, s, g, D)[0]), ints) for s in (1, -1)}
        found, cands = _collect(fns, -D - 1.0, k, scan_step, pole_guard)
        for s in (1, -1):
            items = [(x, LevelKind.REGULAR) for x in found[s]]
            for c in cands[s]:
                n = int(round(c))
                res, _ = constraint_polynomial(n, g, D)
                kind = LevelKind.EXCEPTIONAL_DEGENERATE if abs(res) < 1e-6 else \
                    LevelKind.EXCEPTIONAL_NONDEGENERATE
                items.append((c, kind))
            items.sort()
            for n, (x, kind) in enumerate(items):
                levels.append(SpectrumLevel((x - g * g) * w, x, SIGN_TO_PARITY[s], n, kind, SIGN_TO_PARITY[s]))

    elif p.variant is Variant.ASYMMETRIC:
        e = p.epsilon
        fns = {0: ((lambda x: asym_values(x, g, D, e)[0]), lambda b: asym_poles(e, b))}
        found, cands = _collect(fns, -math.hypot(D, e) - 1.0, k, scan_step, pole_guard)
        items = [(x, LevelKind.REGULAR) for x in found[0]]
        items += [(c, LevelKind.EXCEPTIONAL_NONDEGENERATE) for c in cands[0]]
        items.sort()
        for n, (x, kind) in enumerate(items):
            levels.append(SpectrumLevel((x - g * g) * w, x, None, n, kind, None))

    elif p.variant is Variant.ANISOTROPIC:
        lam = p.lam
        sh = aniso_shift(g, D, lam)
        poles = lambda b: aniso_poles(g, D, lam, b)
        fns = {s: ((lambda x, s=s: aniso_values(x, s, g, D, lam)[0]), poles) for s in (1, -1)}
        # E >= -delta - g^2 max(1, lam)^2 bounds the spectrum from below
        x0 = -D - g * g * max(1.0, lam) ** 2 + sh - 1.0
        found, cands = _collect(fns, x0, k, scan_step, pole_guard)
        for s in (1, -1):
            items = sorted([(x, LevelKind.REGULAR) for x in found[s]] +
                           [(c, LevelKind.EXCEPTIONAL_NONDEGENERATE) for c in cands[s]])
            for n, (x, kind) in enumerate(items):
                levels.append(SpectrumLevel((x - sh) * w, x, SIGN_TO_PARITY[s], n, kind, SIGN_TO_PARITY[s]))

    elif p.variant is Variant.TWO_PHOTON:
        if g == 0:
            raise DomainError("two-photon G-functions need g > 0")
        if method == "bogoliubov":
            u, nu, beta = bogoliubov_params(g)
            spec = {-1: ("e", 1), 1: ("e", -1), -1j: ("o", 1), 1j: ("o", -1)}
            fns = {C: ((lambda x, par=par, s=s: bogoliubov_values(x, par, s, g, D)[0]),
                       (lambda b, par=par: np.arange(0.0 if par == "e" else 1.0, b + 2, 2.0)))
                   for C, (par, s) in spec.items()}
            to_e = lambda x: (x - nu * nu) / beta
            found, cands = _collect(fns, nu * nu + beta * (-D - 2.0), k, scan_step, pole_guard)
        else:
            fns = {C: ((lambda E, C=C: twophoton_values(E, C, g, D)), lambda b: [])
                   for C in (1, -1, 1j, -1j)}
            to_e = lambda x: x
            found, cands = _collect(fns, -D - 2.0, k, scan_step, pole_guard)
        for C in fns:
            xs = sorted(found[C] + cands[C])
            for n, x in enumerate(xs):
                levels.append(SpectrumLevel(to_e(x) * w, x, None, n, LevelKind.REGULAR, C))
    else:  # pragma: no cover
        raise DomainError(f"unsupported variant {p.variant}")

    levels.sort(key=lambda l: (l.energy, str(l.sector)))
    return levels[:k]


# ---------------------------------------------------------------------------
# exceptional points


def _nearest_pair(energies: np.ndarray, target: float) -> Tuple[float, float]:
    d = np.abs(energies - target)
    idx = np.argsort(d)[:2]
    a, b = energies[idx[0]], energies[idx[1]]
    return float(abs(a - b)), float(d[idx[0]])


def _oracle_check(params: ModelParams, energy: float, tol: float = 1e-12):
    k = int(max(8, math.ceil(2 * (energy / params.omega + params.g**2 / params.omega**2 + 4))))
    o = oracle_spectrum(params, k, tol=tol, vectors=False)
    return _nearest_pair(o.energies, energy)


def judd_count(n: int, delta: float) -> int:
    """Expected number of Judd points of level ``n`` for ``k < delta < k + 1``."""
    k = math.floor(delta)
    return max(0, n - k)


def judd_points(n: int, delta: float, g_range: Tuple[float, float] = None, omega: float = 1.0,
                verify: bool = True, samples: int = 3000) -> List[JuddPoint]:
    """Judd points of the Rabi model at ``E = n omega - g^2/omega``.

    Zeros in ``g`` of the constraint polynomial ``K_n(x = n)`` are located and
    cross-checked against the zeros of the Heun truncation residual; the two
    routes must agree to 1e-9.  With ``verify`` the oracle gap between the two
    levels nearest the Judd energy is attached.

    Raises
    ------
    RabiqError
        If the two routes disagree (an implementation fault).
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    D = delta / omega
    if n == 0:
        return []
    lo, hi = g_range if g_range is not None else (1e-4, math.sqrt(n) + 1.0)
    lo, hi = lo / omega, hi / omega
    gk = find_roots_1d(lambda g: constraint_polynomial(n, g, D)[0], lo, hi, samples)
    gh = find_roots_1d(lambda g: rabi_truncation_residual(n, g, D), lo, hi, samples)
    if len(gk) != len(gh) or any(abs(a - b) > 1e-9 for a, b in zip(gk, gh)):
        raise RabiqError(
            f"constraint-polynomial and Heun-truncation routes disagree for n={n}, delta={delta}: "
            f"{gk} vs {gh}"
        )
    out = []
    for g in gk:
        E = (n - g * g) * omega
        gap = off = math.nan
        if verify:
            gap, off = _oracle_check(ModelParams.rabi(g * omega, delta, omega), E)
        out.append(JuddPoint(n, g * omega, delta, omega, E, constraint_polynomial(n, g, D)[0],
                             gap, off))
    return out


def kus_band(k: int, epsilon: float) -> Tuple[float, float]:
    """``delta`` band ``(sqrt(k^2 + 2k eps), sqrt((k+1)^2 + 2(k+1) eps))`` of the biased model."""
    return (math.sqrt(k * k + 2 * k * epsilon), math.sqrt((k + 1) ** 2 + 2 * (k + 1) * epsilon))


def asym_judd_count(n: int, delta: float, epsilon: float, family: str = "+") -> int:
    """Expected number of exceptional points of level ``n`` in one biased family.

    The ``+`` family (``E = n - g^2 + eps``) follows the bands of
    :func:`kus_band`; the ``-`` family follows the same bands with ``eps -> -eps``.
    """
    e = epsilon if family == "+" else -epsilon
    k = 0
    while k < n and delta > kus_band(k, e)[1]:
        k += 1
    return max(0, n - k)


def asym_judd_points(n: int, delta: float, epsilon: float, family: str = "+",
                     g_range: Tuple[float, float] = None, omega: float = 1.0,
                     verify: bool = True, samples: int = 3000) -> List[JuddPoint]:
    """Exceptional points of the biased model at ``E = n omega - g^2/omega +/- eps``.

    ``family="+"`` uses the constraint ``K^-_n(x = n + eps) = 0`` and
    ``family="-"`` uses ``K^+_n(x = n - eps) = 0``.  At ``eps = 0`` both reduce
    to :func:`judd_points`.
    """
    if family not in ("+", "-"):
        raise DomainError("family must be '+' or '-'")
    D, e = delta / omega, epsilon / omega
    shift = -e if family == "+" else e
    if n == 0:
        return []
    lo, hi = g_range if g_range is not None else (1e-4, math.sqrt(n + abs(e)) + 1.0)
    lo, hi = lo / omega, hi / omega
    gk = find_roots_1d(lambda g: constraint_polynomial(n, g, D, shift)[0], lo, hi, samples)
    out = []
    for g in gk:
        E = (n - g * g - shift) * omega
        gap = off = math.nan
        if verify:
            gap, off = _oracle_check(ModelParams.asymmetric(g * omega, delta, epsilon, omega), E)
        out.append(JuddPoint(n, g * omega, delta, omega, E,
                             constraint_polynomial(n, g, D, shift)[0], gap, off,
                             family="asym" + family, epsilon=epsilon))
    return out


# two-photon relations ------------------------------------------------------


def twophoton_relation(N: int, g: float, delta: float, family: str = "first", branch: int = 1) -> float:
    """Parameter relation of the two-photon exceptional points (units of omega).

    ``family="first"``: ``E = -1/2 + (N + 1/2) sqrt(1 - 4g^2)``, ``N = 2, 3, 4``.
    ``family="second"``: ``E = -1/2 + N sqrt(1 - 4g^2)``, ``N = 2, 3``; for
    ``N = 3`` the ``branch`` (+1/-1) selects the upper or lower sign.
    """
    g2, d2 = g * g, delta * delta
    if family == "first":
        if N == 2:
            return g2 + d2 / 24 - 1 / 6
        if N == 3:
            return g2 + d2 / 40 - 1 / 10
        if N == 4:
            return g2 * g2 - 2 * g2 / 7 + d2 * d2 / 4480 - d2 / 224 + 17 * g2 * d2 / 560 + 1 / 70
    elif family == "second":
        if N == 2:
            return 256 * g2 * d2 - (4 * d2 - 9) * (1 - 4 * d2)
        if N == 3:
            s = 1 if branch > 0 else -1
            return 256 * g2 * delta - (5 - s * 2 * delta) * (2 * delta + s * 3) * (1 + s * 2 * delta)
    raise DomainError(f"no parameter relation for N={N} in family {family!r}")


def twophoton_exceptional(N: int, delta: float, omega: float = 1.0, family: str = "first",
                          branch: int = 1, verify: bool = True) -> List[JuddPoint]:
    """Two-photon exceptional points of order ``N`` at fixed ``delta``.

    Solves the parameter relation for ``g`` in ``(0, omega/2)`` and attaches the
    oracle gap between the two levels nearest the exceptional energy.  The
    second family requires ``delta/omega > 1/2``.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    D = delta / omega
    if family == "second" and not D > 0.5:
        return []
    f = lambda g: twophoton_relation(N, g, D, family, branch)
    gs = find_roots_1d(f, 1e-6, 0.5 - 1e-9, 4000)
    out = []
    for g in gs:
        root = math.sqrt(1 - 4 * g * g)
        E = (-0.5 + (N + 0.5 if family == "first" else N) * root) * omega
        gap = off = math.nan
        if verify:
            gap, off = _oracle_check(ModelParams.two_photon(g * omega, delta, omega), E)
        out.append(JuddPoint(N, g * omega, delta, omega, E, f(g), gap, off,
                             family=f"twophoton-{family}"))
    return out
