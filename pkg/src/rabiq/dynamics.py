"""Time evolution of the Rabi-type Hamiltonians and closed-form inversion traces.

States are stored as the two amplitude sequences ``c_n^up`` and ``c_n^down``.
The reference propagator expands the state in eigenvectors of the truncated
Hamiltonian and advances their phases; an adaptive ODE integration of the
amplitude equations is available as an independent check.  Times are in units
of ``1/omega``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh
from scipy.special import gammaln

from .model import ConvergenceError, DomainError, ModelParams, build_hamiltonian

__all__ = [
    "Method",
    "QuantumState",
    "DynamicsTrace",
    "time_grid",
    "coherent_initial",
    "fock_initial",
    "propagate",
    "p_rwa",
    "p_deep_strong",
    "p_revival_delta0",
    "displacement_matrix",
    "revival_peaks",
]

POISSON_TAIL = 1e-12
LEAKAGE_TOL = 1e-8
DEFAULT_SAMPLES = 2048


class Method(str, enum.Enum):
    SPECTRAL = "spectral"
    ODE = "ode"
    CLOSED_RWA = "closed-RWA"
    CLOSED_DEEP_STRONG = "closed-deep-strong"
    CLOSED_DELTA0 = "closed-delta0"


@dataclass
class QuantumState:
    """Amplitudes ``c_n^up`` and ``c_n^down`` for ``n = 0..n_max`` at ``time``."""

    up: np.ndarray
    down: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.up = np.asarray(self.up, dtype=complex)
        self.down = np.asarray(self.down, dtype=complex)
        if self.up.shape != self.down.shape or self.up.ndim != 1:
            raise DomainError("up and down amplitudes must be 1-d arrays of equal length")

    @property
    def n_max(self) -> int:
        return self.up.size - 1

    def vector(self, n_max: Optional[int] = None) -> np.ndarray:
        """Interleaved full-basis vector (``2n -> up``, ``2n+1 -> down``), zero padded."""
        n = self.n_max if n_max is None else n_max
        if n < self.n_max:
            raise DomainError(f"cannot embed a state with n_max={self.n_max} into n_max={n}")
        v = np.zeros(2 * (n + 1), dtype=complex)
        v[0: 2 * self.up.size: 2] = self.up
        v[1: 2 * self.down.size: 2] = self.down
        return v

    @classmethod
    def from_vector(cls, v: np.ndarray, time: float = 0.0) -> "QuantumState":
        v = np.asarray(v, dtype=complex)
        return cls(v[0::2].copy(), v[1::2].copy(), time)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.up) ** 2) + np.sum(np.abs(self.down) ** 2))

    def inversion(self) -> float:
        """``<sigma_z> = sum |c_n^up|^2 - |c_n^down|^2``."""
        return float(np.sum(np.abs(self.up) ** 2) - np.sum(np.abs(self.down) ** 2))

    def photon_number(self) -> float:
        n = np.arange(self.up.size)
        return float(np.sum(n * (np.abs(self.up) ** 2 + np.abs(self.down) ** 2)))

    def parity_weight(self, parity: int) -> float:
        """Weight in the chain of parity ``-sigma_z (-1)^n = parity``."""
        n = np.arange(self.up.size)
        sign = (-1.0) ** n
        w_up = np.abs(self.up) ** 2
        w_dn = np.abs(self.down) ** 2
        return float(np.sum(w_up[-sign == parity]) + np.sum(w_dn[sign == parity]))


@dataclass
class DynamicsTrace:
    """Inversion ``P(t)`` (and optionally the return probability) on a time grid."""

    times: np.ndarray
    inversion: np.ndarray
    method: Method
    revival: Optional[np.ndarray] = None
    norm_drift: float = 0.0
    leakage: float = 0.0
    aliased: bool = False
    states: Optional[list] = None
    info: dict = field(default_factory=dict)


def time_grid(t_end: float, samples: int = DEFAULT_SAMPLES, t_start: float = 0.0) -> np.ndarray:
    """Uniform grid of ``samples`` points on ``[t_start, t_end]``."""
    if samples < 2 or not t_end > t_start:
        raise DomainError("need t_end > t_start and at least two samples")
    return np.linspace(t_start, t_end, samples)


def _log_poisson(alpha: float, n: np.ndarray) -> np.ndarray:
    a2 = alpha * alpha
    with np.errstate(divide="ignore"):
        return -a2 + 2 * n * math.log(abs(alpha)) - gammaln(n + 1) if alpha != 0 else \
            np.where(n == 0, 0.0, -np.inf)


def coherent_initial(alpha: float, level: str = "up", n_max: Optional[int] = None) -> QuantumState:
    """Coherent field state ``|level, alpha>`` with real amplitude ``alpha``.

    ``c_n = exp(-alpha^2/2) alpha^n / sqrt(n!)`` evaluated in log space.  The
    default cutoff is ``ceil(alpha^2 + 10|alpha| + 20)``.

    Raises
    ------
    DomainError
        If the Poisson weight beyond ``n_max`` exceeds 1e-12 or ``level`` is invalid.

    >>> s = coherent_initial(0.0)
    >>> s.up[0], s.norm()
    ((1+0j), 1.0)
    """
    if level not in ("up", "down"):
        raise DomainError(f"level must be 'up' or 'down', got {level!r}")
    a = float(alpha)
    if n_max is None:
        n_max = int(math.ceil(a * a + 10 * abs(a) + 20))
    n = np.arange(n_max + 1)
    logp = _log_poisson(a, n)
    p = np.exp(logp)
    tail = max(0.0, 1.0 - math.fsum(p))
    if tail > POISSON_TAIL:
        raise DomainError(f"n_max={n_max} leaves Poisson weight {tail:.3e} > {POISSON_TAIL:g} outside the basis")
    c = np.sqrt(p) * np.where((a < 0) & (n % 2 == 1), -1.0, 1.0)
    zero = np.zeros_like(c)
    return QuantumState(c, zero) if level == "up" else QuantumState(zero, c)


def fock_initial(n: int, level: str = "up", n_max: Optional[int] = None) -> QuantumState:
    """Number state ``|level, n>``."""
    if n < 0 or level not in ("up", "down"):
        raise DomainError("need n >= 0 and level in {'up', 'down'}")
    n_max = max(n, n_max if n_max is not None else n)
    c = np.zeros(n_max + 1)
    c[n] = 1.0
    zero = np.zeros_like(c)
    return QuantumState(c, zero) if level == "up" else QuantumState(zero, c)


def _auto_cutoff(state: QuantumState, params: ModelParams) -> int:
    # displaced ladders reach roughly (sqrt(n) + 2g)^2 photons
    p = params.reduced()
    w = np.abs(state.up) ** 2 + np.abs(state.down) ** 2
    occupied = int(np.nonzero(w > 1e-16)[0].max()) if np.any(w > 0) else 0
    reach = (math.sqrt(occupied) + 2 * p.g * max(1.0, p.lam)) ** 2
    return int(max(occupied + 20, math.ceil(reach + 12 * (math.sqrt(reach) + 1) + 20)))


def _edge_weight(vectors: np.ndarray, width: int = 4) -> float:
    # weight on the top ``width`` photon numbers (both spins)
    v = np.atleast_2d(vectors)
    return float(np.max(np.sum(np.abs(v[..., -2 * width:]) ** 2, axis=-1)))


def propagate(state: QuantumState, params: ModelParams, t_grid: Sequence[float],
              method: str = "spectral", n_max: Optional[int] = None, keep_states: bool = False,
              rtol: float = 1e-12, atol: float = 1e-14) -> DynamicsTrace:
    """Evolve ``state`` under the model Hamiltonian and record ``P(t) = <sigma_z>``.

    Parameters
    ----------
    method : {"spectral", "ode"}
        ``"spectral"`` diagonalizes the truncated Hamiltonian once and applies
        ``exp(-i E_k t)``; ``"ode"`` integrates the amplitude equations with an
        adaptive 8th-order Runge-Kutta scheme.
    n_max : int, optional
        Fock cutoff; by default it covers the displaced support of the state.
    keep_states : bool
        Store the evolved :class:`QuantumState` at every time.

    Raises
    ------
    ConvergenceError
        If more than 1e-8 of the weight reaches the cutoff (truncation leakage).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d sequence")
    if method not in ("spectral", "ode"):
        raise DomainError(f"unknown method {method!r}")
    N = max(state.n_max, n_max if n_max is not None else _auto_cutoff(state, params))
    H = build_hamiltonian(params, N).matrix
    w = params.omega
    psi0 = state.vector(N)
    norm0 = float(np.vdot(psi0, psi0).real)
    if abs(norm0 - 1.0) > 1e-10:
        raise DomainError(f"initial state is not normalized (norm {norm0:.3e})")

    if method == "spectral":
        E, V = eigh(H)
        coef = V.T @ psi0
        phases = np.exp(-1j * w * np.outer(t - state.time, E))
        psi = (phases * coef) @ V.T
        populated = E[np.abs(coef) ** 2 > 1e-12]
        spread = w * float(populated.max() - populated.min()) if populated.size > 1 else 0.0
    else:
        Hw = w * H

        def rhs(_, y):
            return -1j * (Hw @ y)

        t0 = state.time
        span = (t0, float(t.max())) if t.max() > t0 else (t0, t0 + 1e-12)
        sol = solve_ivp(rhs, span, psi0, method="DOP853", t_eval=np.clip(t, t0, None),
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise ConvergenceError(f"ODE integration failed: {sol.message}")
        psi = sol.y.T
        spread = 0.0

    up2 = np.abs(psi[:, 0::2]) ** 2
    dn2 = np.abs(psi[:, 1::2]) ** 2
    P = up2.sum(axis=1) - dn2.sum(axis=1)
    norms = up2.sum(axis=1) + dn2.sum(axis=1)
    revival = np.abs(psi @ psi0.conj()) ** 2
    leak = _edge_weight(psi)
    if leak > LEAKAGE_TOL:
        raise ConvergenceError(f"truncation leakage {leak:.3e} at n_max={N}; raise n_max")
    dt = float(np.min(np.diff(np.sort(t)))) if t.size > 1 else 0.0
    states = [QuantumState.from_vector(p, float(tt)) for p, tt in zip(psi, t)] if keep_states else None
    return DynamicsTrace(
        times=t, inversion=P, method=Method(method), revival=revival,
        norm_drift=float(np.max(np.abs(norms - norm0))), leakage=leak,
        aliased=bool(spread > 0 and dt > math.pi / spread), states=states,
        info={"n_max": N},
    )


def p_rwa(state0: QuantumState, params: ModelParams, t_grid: Sequence[float]) -> DynamicsTrace:
    """Resonant rotating-wave inversion ``P(t) = sum |c_n^up(0)|^2 cos(2 sqrt(n+1) g t)``.

    Requires ``2 delta = omega`` and an initial state with the qubit up.
    """
    if abs(2 * params.delta - params.omega) > 1e-12 * params.omega:
        raise DomainError("the rotating-wave closed form needs 2*delta = omega")
    if np.any(state0.down != 0):
        raise DomainError("the rotating-wave closed form needs the qubit initially up")
    t = np.asarray(t_grid, dtype=float)
    n = np.arange(state0.up.size)
    w = np.abs(state0.up) ** 2
    P = np.cos(2 * params.g * np.outer(t - state0.time, np.sqrt(n + 1))) @ w
    return DynamicsTrace(times=t, inversion=P, method=Method.CLOSED_RWA)


def displacement_matrix(x: float, n_max: int) -> np.ndarray:
    """``D_nm(x) = e^{-x^2/2} sum_i (-1)^i sqrt(n! m!) x^(n+m-2i) / (i! (m-i)! (n-i)!)``.

    Evaluated in log space term by term for ``n, m <= n_max``.
    """
    size = n_max + 1
    D = np.zeros((size, size))
    lf = gammaln(np.arange(size) + 1)
    lx = math.log(abs(x)) if x != 0 else -np.inf
    for n in range(size):
        for m in range(size):
            i = np.arange(min(n, m) + 1)
            pw = n + m - 2 * i
            if x == 0:
                logt = np.where(pw == 0, 0.0, -np.inf)
            else:
                logt = pw * lx
            logt = logt + 0.5 * (lf[n] + lf[m]) - lf[i] - lf[m - i] - lf[n - i] - x * x / 2
            sgn = (-1.0) ** i * (np.sign(x) ** pw if x != 0 else 1.0)
            D[n, m] = math.fsum(sgn * np.exp(logt))
    return D


def p_deep_strong(params: ModelParams, alpha: float, t_grid: Sequence[float],
                  n_cut: Optional[int] = None) -> DynamicsTrace:
    """Closed-form deep-strong inversion, evaluated term by term as printed.

    ``P(t) = -sum_nm a_n [b_nm cos(dE+_nm t) - mu_nm cos(dE-_nm t)] / (4 sqrt(a_n^2 + b_nm^2 + mu_nm^2))``
    with ``a_n = f+_n^2 + f-_n^2``, ``b_nm = D_nm(2g) f+_n f+_m``,
    ``mu_nm = D_nm(2g) f-_n f-_m``, ``f+-_n = exp(-(g - alpha)^2) (1 +- (-1)^n)``
    and ``E+-_m = m - g^2 +- delta D_mm(2g)`` (units of omega).  The weights
    ``f`` carry no photon-number decay, so the double sum is cut where the
    Poisson weight of the initial coherent state falls below 1e-14; the
    result depends on that cut and is not normalized (see ``info``).
    """
    p = params.reduced()
    g, D = p.g, p.delta
    t = np.asarray(t_grid, dtype=float)
    if n_cut is None:
        n = np.arange(int(math.ceil(alpha * alpha + 12 * abs(alpha) + 30)))
        w = np.exp(_log_poisson(alpha, n))
        big = np.nonzero(w >= 1e-14)[0]
        n_cut = int(big.max()) if big.size else 0
    n = np.arange(n_cut + 1)
    Dm = displacement_matrix(2 * g, n_cut)
    pref = math.exp(-(g - alpha) ** 2)
    fp = pref * (1 + (-1.0) ** n)
    fm = pref * (1 - (-1.0) ** n)
    a = fp ** 2 + fm ** 2
    b = Dm * np.outer(fp, fp)
    mu = Dm * np.outer(fm, fm)
    Ep = n - g * g + D * np.diag(Dm)
    Em = n - g * g - D * np.diag(Dm)
    dEp = (Ep[:, None] - Ep[None, :]) * params.omega
    dEm = (Em[:, None] - Em[None, :]) * params.omega
    den = 4 * np.sqrt(a[:, None] ** 2 + b ** 2 + mu ** 2)
    P = np.empty_like(t)
    for j, tt in enumerate(t):
        term = a[:, None] * (b * np.cos(dEp * tt) - mu * np.cos(dEm * tt)) / den
        P[j] = -float(np.sum(term))
    return DynamicsTrace(times=t, inversion=P, method=Method.CLOSED_DEEP_STRONG,
                         info={"n_cut": n_cut, "P0": float(P[0]) if t.size and t[0] == 0 else None})


def p_revival_delta0(g: float, t_grid: Sequence[float], omega: float = 1.0) -> DynamicsTrace:
    """Return probability ``exp(-|alpha(t)|^2)``, ``alpha(t) = (g/omega)(e^{-i omega t} - 1)``,
    of ``|down, 0>`` at ``delta = 0``, with inversion ``-exp(-2|alpha(t)|^2)``."""
    t = np.asarray(t_grid, dtype=float)
    a2 = 2 * (g / omega) ** 2 * (1 - np.cos(omega * t))
    return DynamicsTrace(times=t, inversion=-np.exp(-2 * a2), method=Method.CLOSED_DELTA0,
                         revival=np.exp(-a2))


def revival_peaks(times: np.ndarray, signal: np.ndarray, period: float, count: int = 2) -> np.ndarray:
    """Revival times: the maximum of ``signal`` in each window ``[(k - 1/2) T, (k + 1/2) T]``,
    ``k = 1..count``, refined by a parabola through the neighbouring samples."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(signal, dtype=float)
    out = []
    for k in range(1, count + 1):
        m = np.nonzero((t >= (k - 0.5) * period) & (t <= (k + 0.5) * period))[0]
        if m.size < 3:
            break
        i = int(m[np.argmax(s[m])])
        if 0 < i < len(s) - 1:
            y0, y1, y2 = s[i - 1], s[i], s[i + 1]
            den = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
            out.append(t[i] + shift * (t[i + 1] - t[i]))
        else:
            out.append(t[i])
    return np.asarray(out)
