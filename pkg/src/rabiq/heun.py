"""Confluent Heun functions and the Heun-based spectral conditions.

``HC(alpha, beta, gamma, delta, eta, x) = sum_n h_n x^n`` with ``h_{-1} = 0``,
``h_0 = 1`` and ``A_n h_n = B_n h_{n-1} + C_n h_{n-2}``, where

    A_n = 1 + beta/n
    B_n = 1 + (beta + gamma - alpha - 1)/n
          + (eta - beta/2 + (gamma - alpha)(beta - 1)/2)/n^2
    C_n = (delta + alpha (beta + gamma)/2 + alpha (n - 1))/n^2

The Bargmann-space amplitudes of the Rabi model are built from two such
functions (``HC1``, ``HC2``) evaluated at ``u = (g - z)/2g`` and
``w = (g + z)/2g``; see :func:`rabi_maps`.  All energies here are in units of
omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import ConvergenceError, DomainError, ModelParams, Variant

__all__ = [
    "HEUN_TOL",
    "HEUN_CAP",
    "Z_GRID_POINTS",
    "HeunParams",
    "HeunValue",
    "TruncationResult",
    "hc_eval",
    "hc_values",
    "truncation_check",
    "rabi_maps",
    "rabi_truncation_residual",
    "solutions",
    "weak_values",
    "weak_conditions",
    "k_condition",
    "wronskian",
    "wronskian_values",
    "z_grid",
    "certify_root",
]

HEUN_TOL = 1e-15
HEUN_CAP = 4000
Z_GRID_POINTS = 8


@dataclass(frozen=True)
class HeunParams:
    """Parameters of the confluent Heun equation

    ``y'' + (alpha + (beta + 1)/x + (gamma + 1)/(x - 1)) y' + (mu x + nu)/(x (x - 1)) y = 0``

    whose solution regular at ``x = 0`` is ``HC``.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    eta: float

    @property
    def mu(self) -> float:
        return self.delta + self.alpha * (self.beta + self.gamma + 2) / 2

    @property
    def nu(self) -> float:
        return self.eta + self.beta / 2 + (self.gamma - self.alpha) * (self.beta + 1) / 2

    @property
    def degenerate(self) -> bool:
        """``-beta`` is a non-negative integer (second Frobenius solution is singular)."""
        return self.beta <= 0 and float(self.beta).is_integer()

    def swapped(self) -> "HeunParams":
        """Parameters of ``HC`` after ``x -> 1 - x`` (``beta <-> gamma``, ``delta -> -delta``)."""
        return HeunParams(self.alpha, self.gamma, self.beta, -self.delta, self.eta + self.delta)

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta, self.eta)


@dataclass(frozen=True)
class HeunValue:
    value: float
    derivative: float
    terms_used: int
    truncated_at: Optional[int] = None


@dataclass(frozen=True)
class TruncationResult:
    """Outcome of a polynomial-truncation test at order ``N``.

    ``residual`` is the normalized value of the first coefficient beyond
    order ``N``; ``delta_residual`` the mismatch of the ``delta`` condition.
    """

    holds: bool
    residual: float
    delta_residual: float
    N: int


def _coeffs(a, b, c, d, e, n):
    A = 1 + b / n
    B = 1 + (b + c - a - 1) / n + (e - b / 2 + (c - a) * (b - 1) / 2) / (n * n)
    C = (d + a * (b + c) / 2 + a * (n - 1)) / (n * n)
    return A, B, C


def _rhs_scale(a, b, c, d, e, n, h1, h2):
    """Sum of magnitudes of the pieces of ``B_n h_{n-1} + C_n h_{n-2}``."""
    sB = 1 + abs(b + c - a - 1) / n + (abs(e) + abs(b) / 2 + abs((c - a) * (b - 1)) / 2) / (n * n)
    sC = (abs(d) + abs(a * (b + c)) / 2 + abs(a) * (n - 1)) / (n * n)
    return sB * abs(h1) + sC * abs(h2)


def hc_eval(p: HeunParams, x: float, tol: float = HEUN_TOL, cap: int = HEUN_CAP) -> HeunValue:
    """Confluent Heun function and its derivative at a point of the unit disk.

    Summation stops once five consecutive terms (of both the value and the
    derivative series) fall below ``tol`` relative to the largest partial sum.
    When ``A_n`` vanishes the recurrence can only continue if its right side
    vanishes too; that is the polynomial case and ``truncated_at`` is set.

    Raises
    ------
    DomainError
        ``|x| >= 1``, or ``A_n = 0`` with a nonzero right side.
    ConvergenceError
        The term cap was reached.
    """
    if not abs(x) < 1:
        raise DomainError(f"confluent Heun series needs |x| < 1, got x={x}")
    a, b, c, d, e = p.as_tuple()
    h2, h1 = 0.0, 1.0
    val, der = 1.0, 0.0
    xp = 1.0            # x^(n-1)
    hmax = 1.0
    scale = 1.0
    quiet = 0
    for n in range(1, cap):
        A, B, C = _coeffs(a, b, c, d, e, n)
        rhs = B * h1 + C * h2
        if abs(A) < 1e-13:
            if abs(rhs) > 1e-10 * _rhs_scale(a, b, c, d, e, n, h1, h2):
                raise DomainError(
                    f"degenerate confluent Heun recurrence: A_{n} = 0 with nonzero right side {rhs:.3g}"
                )
            h = 0.0
        else:
            h = rhs / A
        # polynomial case: h_n = 0 and C_{n+1} = 0 stop the recurrence for good
        if abs(h) <= 1e-13 * hmax:
            _, _, Cn = _coeffs(a, b, c, d, e, n + 1)
            if abs(Cn) <= 1e-13 * (1 + abs(a) * (n + 1)):
                return HeunValue(val, der, n, truncated_at=n - 1)
        term_d = n * h * xp
        xp *= x
        term_v = h * xp
        val += term_v
        der += term_d
        hmax = max(hmax, abs(h))
        scale = max(scale, abs(val), abs(der))
        if max(abs(term_v), abs(term_d)) < tol * scale:
            quiet += 1
            if quiet >= 5:
                return HeunValue(val, der, n + 1)
        else:
            quiet = 0
        h2, h1 = h1, h
    raise ConvergenceError(f"confluent Heun series did not converge in {cap} terms at x={x}")


def hc_values(a, b, c, d, e, x, tol: float = HEUN_TOL, cap: int = HEUN_CAP):
    """Vectorized ``(HC, HC')``; parameters and ``x`` broadcast together.

    No truncation detection; entries with ``A_n = 0`` come out non-finite.
    """
    a, b, c, d, e, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, d, e, x)))
    if np.any(np.abs(x) >= 1):
        raise DomainError("confluent Heun series needs |x| < 1")
    h2 = np.zeros(x.shape)
    h1 = np.ones(x.shape)
    val = np.ones(x.shape)
    der = np.zeros(x.shape)
    xp = np.ones(x.shape)
    scale = np.ones(x.shape)
    quiet = np.zeros(x.shape, dtype=int)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(1, cap):
            A, B, C = _coeffs(a, b, c, d, e, n)
            h = (B * h1 + C * h2) / A
            term_d = n * h * xp
            xp = xp * x
            term_v = h * xp
            val = val + term_v
            der = der + term_d
            scale = np.maximum(scale, np.maximum(np.abs(val), np.abs(der)))
            small = np.maximum(np.abs(term_v), np.abs(term_d)) < tol * scale
            quiet = np.where(small, quiet + 1, 0)
            if np.all((quiet >= 5) | ~np.isfinite(val)):
                break
            h2, h1 = h1, h
    return val, der


def _hc(p, x):
    """``hc_values`` with an element-wise fallback to :func:`hc_eval` wherever the
    vectorized recurrence hit a vanishing ``A_n`` (polynomial or degenerate case)."""
    val, der = hc_values(*p, x)
    bad = ~(np.isfinite(val) & np.isfinite(der))
    if np.any(bad):
        args = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (*p, x)))
        val, der = np.array(val, dtype=float), np.array(der, dtype=float)
        for idx in zip(*np.nonzero(np.atleast_1d(bad))) if val.ndim else [()]:
            hp = HeunParams(*(float(a[idx]) for a in args[:5]))
            try:
                hv = hc_eval(hp, float(args[5][idx]))
                val[idx], der[idx] = hv.value, hv.derivative
            except DomainError:
                val[idx], der[idx] = np.nan, np.nan
    return val, der


def truncation_check(p: HeunParams, N: int, tol: float = 1e-10) -> TruncationResult:
    """Does ``HC`` reduce to a polynomial of degree ``N``?

    Two conditions: ``delta = -(N + (beta + gamma + 2)/2) alpha`` (so that
    ``C_{N+2} = 0``) and a vanishing coefficient at order ``N + 1``.  When
    ``A_{N+1} = 0`` the latter is the right side ``B_{N+1} h_N + C_{N+1} h_{N-1}``
    of the recurrence.  Both residuals are normalized.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    a, b, c, d, e = p.as_tuple()
    dres = d + (N + (b + c + 2) / 2) * a
    dres /= max(abs(d), abs((N + (b + c + 2) / 2) * a), 1.0)
    h2, h1 = 0.0, 1.0
    hmax = 1.0
    for n in range(1, N + 1):
        A, B, C = _coeffs(a, b, c, d, e, n)
        if abs(A) < 1e-13:
            raise DomainError(f"A_{n} vanishes below the requested order {N}")
        h = (B * h1 + C * h2) / A
        hmax = max(hmax, abs(h))
        h2, h1 = h1, h
    A, B, C = _coeffs(a, b, c, d, e, N + 1)
    if abs(A) < 1e-13:
        res = (B * h1 + C * h2) / _rhs_scale(a, b, c, d, e, N + 1, h1, h2)
    else:
        res = (B * h1 + C * h2) / A / hmax
    return TruncationResult(abs(res) < tol and abs(dres) < tol, float(res), float(dres), N)


def rabi_truncation_residual(N: int, g: float, delta: float) -> float:
    """Constraint residual of the Rabi Heun series at ``E = N - g^2``.

    Uses the finite recurrence ``A_n h_n = B_n h_{n-1} + C_n h_{n-2}`` with
    ``A_n = n(n-1-N)``, ``B_n = (1-n+N)^2 - 4(n-1)g^2 - delta^2`` and
    ``C_n = 4(n-2-N)g^2``.  Since ``A_{N+1} = 0`` the series is a polynomial
    exactly when ``B_{N+1} h_N + C_{N+1} h_{N-1}`` vanishes; that value is
    returned, divided by the larger of its two terms.
    """
    if N < 0:
        raise DomainError("N must be >= 0")
    h2, h1 = 0.0, 1.0
    for n in range(1, N + 1):
        A = n * (n - 1 - N)
        B = (1 - n + N) ** 2 - 4 * (n - 1) * g * g - delta * delta
        C = 4 * (n - 2 - N) * g * g
        h2, h1 = h1, (B * h1 + C * h2) / A
    n = N + 1
    B = (1 - n + N) ** 2 - 4 * (n - 1) * g * g - delta * delta
    C = 4 * (n - 2 - N) * g * g
    s = ((1 - n + N) ** 2 + 4 * (n - 1) * g * g + delta * delta) * abs(h1) + abs(C * h2)
    return (B * h1 + C * h2) / s if s > 0 else 0.0


def rabi_maps(E, g: float, delta: float, epsilon: float = 0.0):
    """Heun parameters ``(HC1, HC2)`` of the (biased) Rabi model at energy ``E``.

    ``HC1`` builds ``phi_1`` of the first solution set and ``HC2`` its
    ``phi_2``.  Arrays in ``E`` are accepted.
    """
    E = np.asarray(E, dtype=float)
    gg = g * g
    a = 4 * gg
    e1 = -1.5 * gg * gg + (1 - 2 * E - 4 * epsilon) * gg / 2 \
        + (E * E + E - epsilon**2 + epsilon - 2 * delta**2 + 1) / 2
    e2 = -1.5 * gg * gg - (3 + 2 * E + 4 * epsilon) * gg / 2 \
        + (E * E + E - epsilon**2 - epsilon - 2 * delta**2 + 1) / 2
    p1 = (a, -(E + epsilon + gg + 1), -(E - epsilon + gg), -2 * (1 - 2 * epsilon) * gg, e1)
    p2 = (a, -(E + epsilon + gg), -(E - epsilon + gg + 1), 2 * (1 + 2 * epsilon) * gg, e2)
    return p1, p2


def _swap(p):
    a, b, c, d, e = p
    return (a, c, b, -d, e + d)


def _unit_args(g, z):
    if g <= 0:
        raise DomainError("Heun conditions need g > 0")
    u = (g - z) / (2 * g)
    w = (g + z) / (2 * g)
    if np.any(np.abs(u) >= 1) or np.any(np.abs(w) >= 1):
        raise DomainError(f"z={z} puts a Heun argument outside the unit disk (need |z| < g)")
    return u, w


def solutions(E, z, g: float, delta: float, epsilon: float = 0.0):
    """The two solution sets of the Bargmann-space system at ``z``.

    Returns ``((phi1, dphi1, phi2, dphi2) of set 1, (...) of set 2)``; each
    pair solves ``(z+g) phi1' + (gz + eps - E) phi1 + delta phi2 = 0`` and
    ``(z-g) phi2' - (gz + eps + E) phi2 + delta phi1 = 0``.
    """
    u, w = _unit_args(g, z)
    p1, p2 = rabi_maps(E, g, delta, epsilon)
    E = np.asarray(E, dtype=float)
    ez, ep = np.exp(-g * z), np.exp(g * z)
    k1 = delta / (E + g * g + epsilon)
    k2 = delta / (E + g * g - epsilon)
    H, Hd = _hc(p1, u)
    f11, f11d = ez * H, ez * (-g * H - Hd / (2 * g))
    H, Hd = _hc(p2, u)
    f21, f21d = k1 * ez * H, k1 * ez * (-g * H - Hd / (2 * g))
    H, Hd = _hc(_swap(p1), w)
    f12, f12d = k2 * ep * H, k2 * ep * (g * H + Hd / (2 * g))
    H, Hd = _hc(_swap(p2), w)
    f22, f22d = ep * H, ep * (g * H + Hd / (2 * g))
    return (f11, f11d, f21, f21d), (f12, f12d, f22, f22d)


def _components(E, z, g, delta):
    u, w = _unit_args(g, z)
    p1, p2 = rabi_maps(E, g, delta)
    E = np.asarray(E, dtype=float)
    H1u, H1du = _hc(p1, u)
    H2u, _ = _hc(p2, u)
    H1w, _ = _hc(p1, w)
    H2w, H2dw = _hc(p2, w)
    F1 = (E + g * g) * H1u + w * H1du
    F2 = H2u
    F3 = H1w
    F4 = (E - g * g - 2 * g * z) * H2w - w * H2dw
    return F1, F2, F3, F4


def weak_values(E, z: float, sign: int, g: float, delta: float):
    """Vectorized ``G^sign_{1..4}(E, z)`` and their normalizing scales.

    Returns
    -------
    G : ndarray, shape (4, ...)
    scale : ndarray, shape (4, ...)
        Larger magnitude of the two terms combined in each ``G_j``.
    """
    F1, F2, F3, F4 = _components(E, z, g, delta)
    E = np.asarray(E, dtype=float)
    k = delta / (E + g * g)
    e2p, e2m = np.exp(2 * g * z), np.exp(-2 * g * z)
    pairs = [
        (F1, sign * k * e2p * F4),
        (F3, sign * k * e2m * F2),
        (F1, -sign * delta * e2p * F3),
        (F4, -sign * delta * e2m * F2),
    ]
    G = np.array([a + b for a, b in pairs])
    S = np.array([np.maximum(np.abs(a), np.abs(b)) for a, b in pairs])
    return G, S


def _rabi_only(params: ModelParams) -> ModelParams:
    if params.variant is not Variant.RABI:
        raise DomainError(f"operation needs a rabi model, got {params.variant.value}")
    return params.reduced()


def _pole_check(E, g):
    if abs(E + g * g) < 1e-12:
        raise DomainError("Heun conditions are singular at E = -g^2")


def weak_conditions(E: float, z: float, sign, params: ModelParams) -> Tuple[float, float, float, float]:
    """``(G^sign_1, G^sign_2, G^sign_3, G^sign_4)`` at energy ``E`` (units of omega).

    Zeros of ``G^+_{3,4}`` and ``G^-_{1,2}`` are the parity ``-1`` levels;
    zeros of ``G^+_{1,2}`` and ``G^-_{3,4}`` the parity ``+1`` levels.
    """
    p = _rabi_only(params)
    s = 1 if sign in (1, "+") else -1
    _pole_check(E, p.g)
    G, _ = weak_values(E, z, s, p.g, p.delta)
    return tuple(float(v) for v in G)


def k_condition(E: float, z: float, sign, params: ModelParams, form: int = 1) -> float:
    """Combined condition ``K^sign(E, z)``.

    ``form=1``: ``e^{-gz} G_1 -/+ delta e^{gz} G_2``;
    ``form=2``: ``e^{-gz} G_3 +/- delta/(E+g^2) e^{gz} G_4``.
    Both forms are the residual of the first-order system for the assembled
    symmetric (antisymmetric) amplitudes and therefore vanish for every ``E``.
    """
    p = _rabi_only(params)
    s = 1 if sign in (1, "+") else -1
    _pole_check(E, p.g)
    G, _ = weak_values(E, z, s, p.g, p.delta)
    g = p.g
    if form == 1:
        return float(np.exp(-g * z) * G[0] - s * p.delta * np.exp(g * z) * G[1])
    k = p.delta / (E + g * g)
    return float(np.exp(-g * z) * G[2] + s * k * np.exp(g * z) * G[3])


def wronskian_values(E, z: float, which: str, g: float, delta: float, epsilon: float = 0.0):
    """Vectorized Wronskian of component 1 (``"W1"``) or 2 (``"W2"``) of the two solution sets."""
    s1, s2 = solutions(E, z, g, delta, epsilon)
    if which == "W1":
        return s2[0] * s1[1] - s1[0] * s2[1]
    if which == "W2":
        return s2[2] * s1[3] - s1[2] * s2[3]
    raise DomainError(f"which must be 'W1' or 'W2', got {which!r}")


def wronskian(E: float, z: float, which: str, params: ModelParams) -> float:
    """Wronskian condition at energy ``E`` (units of omega); zero at every level.

    Works for the Rabi and the biased model.  ``W1(E, -z) = W2(E, z)`` holds
    for the unbiased model.
    """
    if params.variant not in (Variant.RABI, Variant.ASYMMETRIC):
        raise DomainError(f"wronskian needs a rabi or asymmetric model, got {params.variant.value}")
    p = params.reduced()
    for b in (-(E + p.epsilon + p.g**2 + 1), -(E + p.epsilon + p.g**2),
              -(E - p.epsilon + p.g**2 + 1), -(E - p.epsilon + p.g**2)):
        if b <= 0 and abs(b - round(b)) < 1e-12:
            raise DomainError("integer Heun parameter: Wronskian is degenerate at this energy")
    return float(wronskian_values(E, z, which, p.g, p.delta, p.epsilon))


def z_grid(g: float, n: int = Z_GRID_POINTS) -> np.ndarray:
    """``n`` equally spaced interior points of ``(-0.6 g, 0.6 g)``."""
    return np.linspace(-0.6 * g, 0.6 * g, n + 2)[1:-1]


def certify_root(fun, E: float, g: float, tol: float = 1e-6, n: int = Z_GRID_POINTS):
    """Check a condition root on the z-grid.

    ``fun(E, z)`` must return ``(value, scale)``.  The root is certified when
    ``|value| / scale < tol`` at every grid point.  Returns
    ``(certified, worst_normalized_residual)``.
    """
    worst = 0.0
    for z in z_grid(g, n):
        v, s = fun(E, z)
        r = abs(float(v)) / max(float(s), 1e-300)
        worst = max(worst, r)
    return worst < tol, worst
