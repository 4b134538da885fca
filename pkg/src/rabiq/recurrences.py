"""Three-term-recurrence G-functions.

Every family here is a series ``sum_n t_n w_n(x)`` whose coefficients obey a
three-term recurrence in ``n``.  Coefficients are carried in the scaled form
``t_n = K_n g^n`` (or the analogous product with the overlap factor), which
stays finite as ``g -> 0`` and avoids overflow at large ``n``.

Spectral variables (all in units of omega):

* Rabi and asymmetric: ``x = E + g^2``, poles at ``x = n`` (``n -/+ eps``).
* Anisotropic: ``x = E + lam g^2 - Delta (1-lam)/(1+lam)``.
* Two-photon ``G_C``: the energy ``E`` itself (no poles).
* Two-photon Bogoliubov form: ``x = nu^2 + E beta``, poles at ``x = n``.

The internal kernels (``*_values``) are vectorized over the spectral
variable; the public single-point functions wrap them and attach the pole and
convergence diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import (
    ConvergenceError,
    DomainError,
    ModelParams,
    PoleProximityError,
    Variant,
)

__all__ = [
    "SERIES_TOL",
    "SERIES_CAP",
    "POLE_GUARD",
    "TWO_PHOTON_ORDER",
    "KSequence",
    "GEvaluation",
    "AsymKSequences",
    "TwoPhotonSeries",
    "TwoPhotonBogoliubov",
    "k_coeffs",
    "asym_k_coeffs",
    "rabi_sums",
    "braak_values",
    "braak_g",
    "asym_values",
    "asym_g",
    "asym_poles",
    "aniso_shift",
    "aniso_values",
    "aniso_g",
    "aniso_poles",
    "twophoton_series",
    "twophoton_values",
    "twophoton_g",
    "bogoliubov_params",
    "bogoliubov_values",
    "twophoton_bogoliubov_g",
    "constraint_polynomial",
]

SERIES_TOL = 1e-13
SERIES_CAP = 512
POLE_GUARD = 1e-6
TAIL_WINDOW = 5
TWO_PHOTON_ORDER = 256


@dataclass(frozen=True)
class KSequence:
    """Coefficients ``K_0 .. K_N`` at one spectral point."""

    coefficients: np.ndarray
    x: float
    pole_proximity: float


@dataclass(frozen=True)
class GEvaluation:
    """One evaluation of a G-function.

    ``tail_bound`` is the largest of the last five terms relative to the
    running scale of the sum; ``converged`` is false when the term cap was hit.
    """

    value: float
    terms_used: int
    tail_bound: float
    near_pole: bool
    converged: bool = True


@dataclass(frozen=True)
class AsymKSequences:
    """``K^+_n`` and ``K^-_n`` of the biased model at one ``x``."""

    plus: np.ndarray
    minus: np.ndarray
    x: float


@dataclass(frozen=True)
class TwoPhotonSeries:
    """Coefficient pair ``(Q_n, K_n)`` of one two-photon symmetry class."""

    Q: np.ndarray
    K: np.ndarray
    kappa: float
    symmetry_class: complex


@dataclass(frozen=True)
class TwoPhotonBogoliubov:
    """Squeezing parameters of the two-photon model and its ``f_n``/``L_n`` data."""

    u: float
    nu: float
    beta: float
    f: np.ndarray
    L_even: np.ndarray
    L_odd: np.ndarray


def _reduced(params: ModelParams, *variants: Variant) -> ModelParams:
    if variants and params.variant not in variants:
        names = ", ".join(v.value for v in variants)
        raise DomainError(f"operation needs a {names} model, got {params.variant.value}")
    return params.reduced()


def _check_poles(x: float, poles: np.ndarray, guard: float) -> float:
    if poles.size == 0:
        return math.inf
    d = np.abs(x - poles)
    i = int(np.argmin(d))
    if d[i] < guard:
        raise PoleProximityError(
            f"spectral variable {x!r} lies within {guard:g} of the pole at {poles[i]!r}",
            float(poles[i]),
        )
    return float(d[i])


class _Tail:
    """Vectorized tail monitor: converged once ``TAIL_WINDOW`` consecutive
    terms are below ``tol`` relative to the running scale."""

    def __init__(self, shape, tol):
        self.tol = tol
        self.scale = np.zeros(shape)
        self.window = np.full((TAIL_WINDOW,) + tuple(shape), np.inf)
        self.i = 0

    def update(self, term_mag, partial_mag, active):
        self.scale = np.where(active, np.maximum(self.scale, np.maximum(term_mag, partial_mag)),
                              self.scale)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(self.scale > 0, term_mag / self.scale, 0.0)
        rel = np.where(np.isfinite(rel) & ~np.isnan(self.scale), rel, np.inf)
        slot = self.i % TAIL_WINDOW
        self.window[slot] = np.where(active, rel, self.window[slot])
        self.i += 1
        return self.last < self.tol

    @property
    def last(self):
        return self.window.max(axis=0)


# --------------------------------------------------------------------------
# Rabi and asymmetric families


def rabi_sums(x, g: float, delta: float, shift: float = 0.0,
              tol: float = SERIES_TOL, cap: int = SERIES_CAP):
    """Sums ``R = sum t_n`` and ``Rbar = sum t_n / (x - n + shift)``.

    ``t_n = K_n g^n`` with ``K_n`` from the recurrence
    ``n K_n = Omega(n-1) K_{n-1} - K_{n-2}``, where
    ``2g Omega(m) = m + 4g^2 + shift - x - delta^2 / (m - shift - x)``.
    ``shift = 0`` is the Rabi model; ``shift = -eps`` and ``+eps`` give the
    two sectors of the biased model.

    Returns
    -------
    R, Rbar : ndarray
    terms : int
        Number of terms summed.
    tail : ndarray
        Relative size of the last block of terms.
    converged : ndarray of bool
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 1:
        R, Rbar, n, tail, ok = _rabi_sums_scalar(float(x.flat[0]), g, delta, shift, tol, cap)
        shape = x.shape
        return (np.full(shape, R), np.full(shape, Rbar), n, np.full(shape, tail),
                np.full(shape, ok))
    t_prev = np.zeros_like(x)
    t = np.ones_like(x)
    R = t.copy()
    Rbar = t / (x + shift)
    mon = _Tail(x.shape, tol)
    done = np.zeros(x.shape, dtype=bool)
    mon.update(np.maximum(np.abs(t), np.abs(Rbar)), np.maximum(np.abs(R), np.abs(Rbar)), ~done)
    n = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(1, cap):
            m = n - 1
            gom = 0.5 * (m + 4 * g * g + shift - x - delta * delta / (m - shift - x))
            t_new = (gom * t - g * g * t_prev) / n
            t_prev, t = t, t_new
            w = t / (x - n + shift)
            R = np.where(done, R, R + t)
            Rbar = np.where(done, Rbar, Rbar + w)
            fin = mon.update(np.maximum(np.abs(t), np.abs(w)),
                             np.maximum(np.abs(R), np.abs(Rbar)), ~done)
            # terms grow until n passes x; never stop before that
            done |= fin & (n > x - shift + TAIL_WINDOW)
            if done.all():
                break
    return R, Rbar, n + 1, mon.last, done


def _rabi_sums_scalar(x: float, g: float, delta: float, shift: float, tol: float, cap: int):
    # same arithmetic as the vectorized loop in rabi_sums, on Python floats;
    # root finders call with one point at a time
    scale = 0.0
    window = [math.inf] * TAIL_WINDOW
    slot = 0

    def update(term_mag, partial_mag):
        nonlocal scale, slot
        # NaN sticks to the scale, as with np.maximum
        if math.isnan(term_mag) or math.isnan(partial_mag):
            scale = math.nan
        elif not math.isnan(scale):
            scale = max(scale, term_mag, partial_mag)
        rel = term_mag / scale if scale > 0 else 0.0
        window[slot % TAIL_WINDOW] = rel if math.isfinite(rel) and not math.isnan(scale) else math.inf
        slot += 1
        return max(window) < tol

    def div(a, b):
        if b == 0.0:
            return math.copysign(math.inf, a) * math.copysign(1.0, b) if a != 0 else math.nan
        return a / b

    t_prev, t = 0.0, 1.0
    R, Rbar = 1.0, div(1.0, x + shift)
    update(max(abs(t), abs(Rbar)), max(abs(R), abs(Rbar)))
    n = 0
    gg, dd = g * g, delta * delta
    for n in range(1, cap):
        m = n - 1
        gom = 0.5 * (m + 4 * g * g + shift - x - div(dd, m - shift - x))
        t_prev, t = t, (gom * t - gg * t_prev) / n
        w = div(t, x - n + shift)
        R += t
        Rbar += w
        if update(max(abs(t), abs(w)), max(abs(R), abs(Rbar))) and n > x - shift + TAIL_WINDOW:
            return R, Rbar, n + 1, max(window), True
    return R, Rbar, n + 1, max(window), False


def k_coeffs(x: float, params: ModelParams, n_terms: int,
             pole_guard: float = POLE_GUARD) -> KSequence:
    """Unscaled coefficients ``K_0 .. K_{n_terms-1}`` of the Rabi G-function.

    Raises
    ------
    PoleProximityError
        If ``x`` lies within ``pole_guard`` of an integer in ``[0, n_terms]``.
    """
    p = _reduced(params, Variant.RABI)
    if p.g <= 0:
        raise DomainError("K_n coefficients need g > 0")
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    prox = _check_poles(x, np.arange(n_terms + 1.0), pole_guard)
    om = lambda m: (m + 4 * p.g**2 - x - p.delta**2 / (m - x)) / (2 * p.g)
    K = np.zeros(n_terms)
    K[0] = 1.0
    if n_terms > 1:
        K[1] = om(0)
    for n in range(2, n_terms):
        K[n] = (om(n - 1) * K[n - 1] - K[n - 2]) / n
    return KSequence(K, float(x), prox)


def braak_values(x, sign: int, g: float, delta: float, tol: float = SERIES_TOL,
                 cap: int = SERIES_CAP):
    """Vectorized ``G_sign(x) = sum_n K_n g^n (1 - sign*delta/(x-n))``.

    Returns ``(values, terms, tail, converged)``.
    """
    R, Rbar, terms, tail, ok = rabi_sums(x, g, delta, 0.0, tol, cap)
    return R - sign * delta * Rbar, terms, tail, ok


def _sign(sign) -> int:
    if sign in (1, "+", "plus", +1.0):
        return 1
    if sign in (-1, "-", "minus", -1.0):
        return -1
    raise DomainError(f"sign must be +1 or -1, got {sign!r}")


def braak_g(x: float, sign, params: ModelParams, series_tol: float = SERIES_TOL,
            pole_guard: float = POLE_GUARD) -> GEvaluation:
    """Rabi G-function ``G_+`` or ``G_-`` at ``x = E/omega + g^2/omega^2``.

    Zeros of ``G_+`` are the regular levels of parity ``-1`` and zeros of
    ``G_-`` those of parity ``+1``.

    Raises
    ------
    PoleProximityError
        Inside the guard band of a non-negative integer.
    ConvergenceError
        Never; a capped evaluation is reported through ``converged``.
    """
    s = _sign(sign)
    p = _reduced(params, Variant.RABI)
    if x > -1:
        _check_poles(x, np.arange(0.0, math.floor(x) + 2), pole_guard)
    v, n, tail, ok = braak_values(x, s, p.g, p.delta, series_tol)
    return GEvaluation(float(v[0]), n, float(tail[0]), False, bool(ok[0]))


def asym_k_coeffs(x: float, params: ModelParams, n_terms: int) -> AsymKSequences:
    """Unscaled ``K^+_n`` (``alpha = g^2 + eps``) and ``K^-_n`` (``alpha = g^2 - eps``)."""
    p = _reduced(params, Variant.ASYMMETRIC, Variant.RABI)
    if p.g <= 0:
        raise DomainError("K_n coefficients need g > 0")
    out = []
    for s in (p.epsilon, -p.epsilon):
        om = lambda m: (m + 4 * p.g**2 + s - x - p.delta**2 / (m - s - x)) / (2 * p.g)
        K = np.zeros(n_terms)
        K[0] = 1.0
        if n_terms > 1:
            K[1] = om(0)
        for n in range(2, n_terms):
            K[n] = (om(n - 1) * K[n - 1] - K[n - 2]) / n
        out.append(K)
    return AsymKSequences(out[0], out[1], float(x))


def asym_poles(epsilon: float, x_max: float) -> np.ndarray:
    """Poles ``n - eps`` and ``n + eps`` (``n >= 0``) up to ``x_max``.

    Coincident poles (half-integer ``eps``) are kept twice, marking a double pole.
    """
    n = np.arange(0.0, max(0.0, x_max + abs(epsilon)) + 2)
    p = np.concatenate([n - epsilon, n + epsilon]) if epsilon != 0 else n
    return np.sort(p[p <= x_max + 1])


def asym_values(x, g: float, delta: float, epsilon: float, tol: float = SERIES_TOL,
                cap: int = SERIES_CAP):
    """Vectorized ``G_eps = delta^2 Rbar+ Rbar- - R+ R-``."""
    Rp, Rbp, n1, t1, ok1 = rabi_sums(x, g, delta, epsilon, tol, cap)
    Rm, Rbm, n2, t2, ok2 = rabi_sums(x, g, delta, -epsilon, tol, cap)
    return delta * delta * Rbp * Rbm - Rp * Rm, max(n1, n2), np.maximum(t1, t2), ok1 & ok2


def asym_g(x: float, params: ModelParams, series_tol: float = SERIES_TOL,
           pole_guard: float = POLE_GUARD) -> GEvaluation:
    """G-function of the biased model; its zeros are all regular levels.

    At ``eps = 0`` it equals ``-G_+ G_-``.
    """
    p = _reduced(params, Variant.ASYMMETRIC, Variant.RABI)
    _check_poles(x, asym_poles(p.epsilon, x + 1), pole_guard)
    v, n, tail, ok = asym_values(x, p.g, p.delta, p.epsilon, series_tol)
    return GEvaluation(float(v[0]), n, float(tail[0]), False, bool(ok[0]))


# --------------------------------------------------------------------------
# Anisotropic family


def aniso_shift(g: float, delta: float, lam: float) -> float:
    """``x - E`` for the anisotropic model (units of omega)."""
    return g * g * lam - delta * (1 - lam) / (1 + lam)


def _aniso_alpha(g, delta, lam):
    # alpha / sqrt(lam); finite at lam = 0
    return -(1 - lam) * g * g - 2 * delta / (1 + lam)


def aniso_poles(g: float, delta: float, lam: float, x_max: float) -> np.ndarray:
    """Poles ``n + (1-lam) alpha/2`` (``n >= 0``) of the scaled condition.

    The integer points are removable in the scaled form and are not returned.
    """
    n = np.arange(0.0, max(0.0, x_max) + 3)
    p = n + 0.5 * (1 - lam) * _aniso_alpha(g, delta, lam)
    return p[p <= x_max + 1]


def aniso_values(x, sign: int, g: float, delta: float, lam: float,
                 tol: float = SERIES_TOL, cap: int = SERIES_CAP):
    """Vectorized anisotropic G-function at ``z = 0``.

    The coefficients are carried as ``t_n = K_n (g sqrt(lam))^n`` so the
    rotating-wave limit ``lam = 0`` is regular.  ``sign=+1`` returns
    ``2 sqrt(lam) phi_1(0) - 2 phi_2(0)`` and ``sign=-1`` returns
    ``sqrt(lam) G_-``, i.e. ``2 sqrt(lam) phi_1(0) + 2 lam phi_2(0)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = (1 - lam) / (1 + lam)
    at = _aniso_alpha(g, delta, lam)
    a2 = at * at * lam
    gl = g * g * lam
    t_prev = np.zeros_like(x)
    t = np.ones_like(x)
    phi2 = np.zeros_like(x)
    sphi1 = np.zeros_like(x)
    mon = _Tail(x.shape, tol)
    done = np.zeros(x.shape, dtype=bool)
    n = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(cap):
            ta = (n + 1) * g * (2 + (1 - lam) * at / (n - x))
            b = n + (4 * gl - 2 * r * delta - x) - a2 / (n - x) \
                - (1 - lam) ** 2 * g * g * n / (n - 1 - x)
            tc = -2 * g - (1 - lam) * g * at / (n - 1 - x)
            t_next = (g / ta) * (b * t + g * lam * tc * t_prev)
            term1 = (lam * at * t + (1 - lam) * (n + 1) * t_next) / (n - x)
            phi2 = np.where(done, phi2, phi2 + t)
            sphi1 = np.where(done, sphi1, sphi1 + term1)
            fin = mon.update(np.maximum(np.abs(t), np.abs(term1)),
                             np.maximum(np.abs(phi2), np.abs(sphi1)), ~done)
            done |= fin & (n > x + TAIL_WINDOW)
            t_prev, t = t, t_next
            if done.all():
                break
    if sign > 0:
        val = 2 * sphi1 - 2 * phi2
    else:
        val = 2 * sphi1 + 2 * lam * phi2
    return val, n + 1, mon.last, done


def aniso_g(x: float, sign, params: ModelParams, z: float = 0.0,
            series_tol: float = SERIES_TOL, pole_guard: float = POLE_GUARD) -> GEvaluation:
    """Anisotropic G-function ``G^lam_sign`` at shifted variable ``x``.

    ``x = E + lam g^2 - Delta (1-lam)/(1+lam)``.  At ``lam = 1`` this is the
    Rabi ``G_sign``; at ``lam = 0`` its zeros are the rotating-wave levels.
    Only ``z = 0`` is supported.
    """
    s = _sign(sign)
    p = _reduced(params, Variant.ANISOTROPIC)
    if z != 0.0:
        raise DomainError("anisotropic G-function is implemented at z = 0 only")
    _check_poles(x, aniso_poles(p.g, p.delta, p.lam, x + 1), pole_guard)
    v, n, tail, ok = aniso_values(x, s, p.g, p.delta, p.lam, series_tol)
    return GEvaluation(float(v[0]), n, float(tail[0]), False, bool(ok[0]))


# --------------------------------------------------------------------------
# Two-photon family


def _kappa(g: float) -> float:
    if g == 0:
        return 0.0
    return (1 - math.sqrt(1 - 4 * g * g)) / (4 * g)


def _tp_seeds(C):
    if C not in (1, -1, 1j, -1j):
        raise DomainError(f"symmetry class must be one of 1, -1, 1j, -1j; got {C!r}")
    if C in (1, -1):
        return 0, float(C.real if isinstance(C, complex) else C)
    return 1, (1.0 if C == 1j else -1.0)


def twophoton_series(E: float, C, params: ModelParams,
                     order: int = TWO_PHOTON_ORDER) -> TwoPhotonSeries:
    """Raw coefficient pair ``(Q_n, K_n)`` for ``n <= order`` (no rescaling)."""
    p = _reduced(params, Variant.TWO_PHOTON)
    start, k0 = _tp_seeds(C)
    g, D = p.g, p.delta
    kap = _kappa(g)
    Q = np.zeros(order + 3)
    K = np.zeros(order + 3)
    Q[start], K[start] = 1.0, k0
    if g == 0:
        return TwoPhotonSeries(Q[: order + 1], K[: order + 1], kap, C)
    for n in range(start, order - 1, 2):
        den = g * (n + 2) * (n + 1)
        km2 = K[n - 2] if n >= 2 else 0.0
        Q[n + 2] = -(((1 - 4 * g * kap) * n - 2 * g * kap - E) * Q[n] + D * K[n]) / den
        K[n + 2] = (((1 + 4 * g * kap) * n + 2 * g * kap - E) * K[n] - 4 * kap * km2 + D * Q[n]) / den
    return TwoPhotonSeries(Q[: order + 1], K[: order + 1], kap, C)


def twophoton_values(E, C, g: float, delta: float, order: int = TWO_PHOTON_ORDER):
    """Vectorized coefficient-level condition of class ``C``.

    Iterates ``(Q_n, K_n)`` from the class seeds up to ``order`` and returns the
    top coefficient ``K_N`` divided by ``max(|Q_N|, |K_N|, |Q_{N-2}|, |K_{N-2}|)``.
    The sign of ``K_N`` flips at each eigenvalue of the class; the
    normalization only removes the factorial scale.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    start, k0 = _tp_seeds(C)
    kap = _kappa(g)
    top = order if start == 0 else order - 1
    Qm2 = np.zeros_like(E)
    Km2 = np.zeros_like(E)
    Q = np.ones_like(E)
    K = np.full_like(E, k0)
    a = 1 - 4 * g * kap
    b = 1 + 4 * g * kap
    for n in range(start, top, 2):
        den = g * (n + 2) * (n + 1)
        Qn = -((a * n - 2 * g * kap - E) * Q + delta * K) / den
        Kn = ((b * n + 2 * g * kap - E) * K - 4 * kap * Km2 + delta * Q) / den
        Qm2, Km2, Q, K = Q, K, Qn, Kn
        s = np.maximum.reduce([np.abs(Q), np.abs(K), np.abs(Qm2), np.abs(Km2)])
        s = np.where(s > 0, s, 1.0)
        Q, K, Qm2, Km2 = Q / s, K / s, Qm2 / s, Km2 / s
    return K


def twophoton_g(E: float, C, params: ModelParams, order: int = TWO_PHOTON_ORDER) -> GEvaluation:
    """Two-photon spectral condition for symmetry class ``C`` at energy ``E`` (units of omega).

    The class labels follow the seeds ``Q_0 = 1, K_0 = C`` for ``C = +-1`` and
    ``Q_1 = 1, K_1 = -iC`` for ``C = +-i``.  Class ``1`` holds the chain that
    starts at ``|up, 0>``, ``-1`` the one at ``|down, 0>``, ``1j`` at
    ``|up, 1>`` and ``-1j`` at ``|down, 1>``.

    The entire-function form of this condition vanishes identically, so the
    evaluation uses the coefficient-level condition at a fixed truncation
    order (256).  Roots are reliable for ``E`` well below ``order / 4``.
    """
    p = _reduced(params, Variant.TWO_PHOTON)
    if p.g == 0:
        raise DomainError("two-photon condition needs g > 0")
    v = twophoton_values(E, C, p.g, p.delta, order)
    ok = bool(E < order / 4)
    return GEvaluation(float(v[0]), order, 0.0, False, ok)


def bogoliubov_params(g: float) -> Tuple[float, float, float]:
    """``(u, nu, beta)`` with ``beta = 1/sqrt(1-4g^2)``, ``u^2 - nu^2 = 1``."""
    if not 0 <= g < 0.5:
        raise DomainError(f"two-photon coupling must satisfy 0 <= g < 1/2, got {g}")
    beta = 1 / math.sqrt(1 - 4 * g * g)
    return math.sqrt((beta + 1) / 2), math.sqrt((beta - 1) / 2), beta


def _overlaps(n_terms: int, u: float, nu: float):
    tau = nu / u
    Le = np.zeros(n_terms)
    Lo = np.zeros(n_terms)
    for n in range(n_terms):
        k = n // 2
        lg = math.lgamma(n + 1) - k * math.log(2) - math.lgamma(k + 1)
        val = math.exp(lg + k * math.log(tau)) if tau > 0 else (1.0 if k == 0 else 0.0)
        if n % 2 == 0:
            Le[n] = val
        else:
            Lo[n] = val
    return Le, Lo


def bogoliubov_values(x, parity: str, sign: int, g: float, delta: float,
                      tol: float = SERIES_TOL, cap: int = SERIES_CAP):
    """Vectorized ``G^sign_{e,o}(x) = sum_n f_n L_n (1 - sign delta beta/(n-x))``.

    ``f_n`` obeys ``(m+2)(m+1) f_{m+2} = Omega(m) f_m / zeta - f_{m-2}`` with
    ``zeta = u nu + g beta`` and
    ``Omega(m) = beta m + nu^2 + 2 g u nu (2m+1) - E - delta^2 beta/(m - x)``.
    The overlaps are ``L_n = n!/(2^k k!) (nu/u)^k`` with ``k = n // 2``.
    Products ``y_n = f_n L_n`` are iterated directly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u, nu, beta = bogoliubov_params(g)
    tau = nu / u
    zeta = u * nu + g * beta
    start = 0 if parity == "e" else 1
    E = (x - nu * nu) / beta
    y_prev = np.zeros_like(x)
    y = np.ones_like(x)
    G = np.zeros_like(x)
    mon = _Tail(x.shape, tol)
    done = np.zeros(x.shape, dtype=bool)
    n = start
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for m in range(start, 2 * cap, 2):
            term = y * (1 - sign * delta * beta / (m - x))
            G = np.where(done, G, G + term)
            fin = mon.update(np.abs(term), np.abs(G), ~done)
            done |= fin & (m > x + 2 * TAIL_WINDOW)
            n = m
            if done.all():
                break
            if zeta == 0:
                # g = 0: f_{m+2} = 0 for the decoupled oscillator
                y_prev, y = y, np.zeros_like(x)
                continue
            k = m // 2
            om = beta * m + nu * nu + 2 * g * u * nu * (2 * m + 1) - E \
                - delta * delta * beta / (m - x)
            back = (m * (m - 1) * tau / (2 * k)) * y_prev if k >= 1 else 0.0
            y_prev, y = y, tau / (2 * (k + 1)) * (om * y / zeta - back)
    return G, (n - start) // 2 + 1, mon.last, done


def twophoton_bogoliubov_g(x: float, parity: str, sign, params: ModelParams,
                           series_tol: float = SERIES_TOL,
                           pole_guard: float = POLE_GUARD) -> GEvaluation:
    """Bogoliubov-form two-photon G-function ``G^sign_parity`` at ``x = nu^2 + E beta``.

    ``parity`` is ``"e"`` (even photon numbers) or ``"o"``.  Zeros of ``G^+_e``
    are the levels of class ``-1``, ``G^-_e`` of class ``1``, ``G^+_o`` of
    class ``-1j`` and ``G^-_o`` of class ``1j``.
    """
    s = _sign(sign)
    p = _reduced(params, Variant.TWO_PHOTON)
    if parity not in ("e", "o"):
        raise DomainError(f"parity must be 'e' or 'o', got {parity!r}")
    start = 0 if parity == "e" else 1
    if x > start - 2:
        _check_poles(x, np.arange(start, math.floor(x) + 3, 2.0), pole_guard)
    v, n, tail, ok = bogoliubov_values(x, parity, s, p.g, p.delta, series_tol)
    return GEvaluation(float(v[0]), n, float(tail[0]), False, bool(ok[0]))


# --------------------------------------------------------------------------
# Constraint polynomials


def constraint_polynomial(n: int, g: float, delta: float, shift: float = 0.0,
                          rescale_every: int = 16) -> Tuple[float, float]:
    """Normalized constraint residual ``P_n`` at the pole ``x = n - shift``.

    ``P_n = n! (2g)^n K_n(x = n - shift)`` is a polynomial in ``g^2`` and
    ``delta^2``; it vanishes exactly where the level at the pole is an
    exceptional (Juddian) eigenvalue.  ``shift = 0`` is the Rabi model,
    ``shift = -eps`` the ``E = n - g^2 + eps`` family and ``shift = +eps`` the
    ``E = n - g^2 - eps`` family of the biased model.

    Returns
    -------
    residual : float
        ``P_n`` divided by the same recurrence run on term magnitudes, so
        ``|residual| <= 1`` and small values mean cancellation.
    raw_scale : float
        The magnitude bound (after periodic rescaling).
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return 1.0, 1.0
    x = n - shift
    P_prev, P = 0.0, 1.0
    M_prev, M = 0.0, 1.0
    d2 = delta * delta
    for k in range(1, n + 1):
        m = k - 1
        two_g_om = m + 4 * g * g + shift - x - d2 / (m - shift - x)
        size = abs(m) + 4 * g * g + abs(shift) + abs(x) + d2 / abs(m - shift - x)
        c = (k - 1) * 4 * g * g
        P_prev, P = P, two_g_om * P - c * P_prev
        M_prev, M = M, size * M + c * M_prev
        if k % rescale_every == 0:
            P, P_prev, M_prev = P / M, P_prev / M, M_prev / M
            M = 1.0
    return P / M, M
