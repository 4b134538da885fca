"""Model parameters, truncated Fock-basis Hamiltonians and the diagonalization oracle.

Four variants share one layout: the full basis orders states as
``index 2n -> |up, n>`` and ``index 2n+1 -> |down, n>`` for ``n <= n_max``.
All analytic kernels work in units where the mode frequency is one; the
public entry points accept a general ``omega`` and rescale.

Parity is ``P = -sigma_z (-1)^(a^dag a)``.  For the Rabi and anisotropic
variants the Hamiltonian splits into two tridiagonal chains; the chain with
``p = +1`` runs through ``|down,0>, |up,1>, |down,2>, ...``.  The two-photon
variant splits into four chains labelled by a class ``C`` in
``{1, -1, 1j, -1j}`` (see :func:`sector_chains`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import eig_banded, eigh_tridiagonal

__all__ = [
    "RabiqError",
    "DomainError",
    "PoleProximityError",
    "ConvergenceError",
    "Variant",
    "ModelParams",
    "Chain",
    "FockHamiltonian",
    "OracleSpectrum",
    "build_hamiltonian",
    "sector_chains",
    "oracle_spectrum",
    "sector_spectrum",
    "parity_of_state",
    "parity_expectation",
    "jc_energies",
    "TWO_PHOTON_CLASSES",
]


class RabiqError(Exception):
    """Base class of every error raised by the package."""


class DomainError(RabiqError, ValueError):
    """Parameters or arguments outside the domain of an operation."""


class PoleProximityError(DomainError):
    """Spectral variable inside the guard band of a pole.

    The caller should treat the point as an exceptional-point candidate.
    """

    def __init__(self, message: str, pole: float):
        super().__init__(message)
        self.pole = pole


class ConvergenceError(RabiqError, ArithmeticError):
    """A series, truncation or iteration failed to converge."""


class Variant(str, enum.Enum):
    RABI = "rabi"
    ASYMMETRIC = "asymmetric"
    ANISOTROPIC = "anisotropic"
    TWO_PHOTON = "twophoton"


# chain start (photon number, spin) for each two-photon symmetry class
TWO_PHOTON_CLASSES: Dict[complex, Tuple[int, int]] = {
    1: (0, +1),
    -1: (0, -1),
    1j: (1, +1),
    -1j: (1, -1),
}


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one model variant.

    Parameters
    ----------
    variant : Variant
        Which Hamiltonian.
    delta : float
        Half level splitting of the qubit, ``>= 0``.
    g : float
        Coupling strength, ``>= 0``.
    omega : float
        Mode frequency, ``> 0``.
    epsilon : float
        Static bias along ``sigma_x`` (asymmetric variant only).
    lam : float
        Ratio of counter-rotating to rotating coupling (anisotropic only).
    """

    variant: Variant
    delta: float
    g: float
    omega: float = 1.0
    epsilon: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("delta", "g", "omega", "epsilon", "lam"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.omega <= 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if self.delta < 0:
            raise DomainError(f"delta must be non-negative, got {self.delta}")
        if self.g < 0:
            raise DomainError(f"g must be non-negative, got {self.g}")
        if self.variant is not Variant.ASYMMETRIC and self.epsilon != 0.0:
            raise DomainError("epsilon is only meaningful for the asymmetric variant")
        if self.variant is not Variant.ANISOTROPIC and self.lam != 0.0:
            raise DomainError("lam is only meaningful for the anisotropic variant")
        if self.variant is Variant.ANISOTROPIC and self.lam < 0:
            raise DomainError(f"anisotropy lam must be >= 0, got {self.lam}")
        if self.variant is Variant.TWO_PHOTON and not self.g < self.omega / 2:
            raise DomainError(
                f"two-photon coupling must satisfy g < omega/2, got g={self.g}, omega={self.omega}"
            )

    # convenience constructors
    @classmethod
    def rabi(cls, g: float, delta: float, omega: float = 1.0) -> "ModelParams":
        return cls(Variant.RABI, delta, g, omega)

    @classmethod
    def asymmetric(cls, g: float, delta: float, epsilon: float, omega: float = 1.0) -> "ModelParams":
        return cls(Variant.ASYMMETRIC, delta, g, omega, epsilon=epsilon)

    @classmethod
    def anisotropic(cls, g: float, delta: float, lam: float, omega: float = 1.0) -> "ModelParams":
        return cls(Variant.ANISOTROPIC, delta, g, omega, lam=lam)

    @classmethod
    def two_photon(cls, g: float, delta: float, omega: float = 1.0) -> "ModelParams":
        return cls(Variant.TWO_PHOTON, delta, g, omega)

    def reduced(self) -> "ModelParams":
        """Same physics in units of ``omega`` (so ``omega == 1``)."""
        w = self.omega
        if w == 1.0:
            return self
        return replace(self, delta=self.delta / w, g=self.g / w, omega=1.0,
                       epsilon=self.epsilon / w)

    def with_g(self, g: float) -> "ModelParams":
        return replace(self, g=g)

    def has_parity(self) -> bool:
        return self.variant in (Variant.RABI, Variant.ANISOTROPIC) or (
            self.variant is Variant.ASYMMETRIC and self.epsilon == 0.0
        )

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "delta": self.delta,
            "g": self.g,
            "omega": self.omega,
            "epsilon": self.epsilon,
            "lam": self.lam,
        }


@dataclass(frozen=True)
class Chain:
    """Symmetric tridiagonal block of H in a symmetry sector.

    ``index`` maps chain sites to positions in the full basis.
    """

    label: complex
    diag: np.ndarray
    offdiag: np.ndarray
    index: np.ndarray


@dataclass(frozen=True)
class FockHamiltonian:
    """Truncated Hamiltonian in the full ``{|s, n>}`` basis, energies in units of omega."""

    params: ModelParams
    n_max: int
    matrix: np.ndarray
    chains: Optional[Dict[complex, Chain]] = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class OracleSpectrum:
    """Lowest levels from truncated diagonalization.

    Attributes
    ----------
    energies : ndarray
        Ascending energies in physical units.
    parities : tuple
        ``+1``/``-1`` where parity is conserved, otherwise ``None``.
    sectors : tuple
        Chain label of each level (parity, two-photon class, or ``None``).
    vectors : ndarray
        Row ``i`` is the normalized eigenvector of level ``i`` in the full basis.
    truncation_used : int
        Photon cutoff ``n_max`` of the final (converged) solve.
    converged : bool
    max_shift : float
        Largest level shift at the last truncation doubling.
    """

    energies: np.ndarray
    parities: tuple
    sectors: tuple
    vectors: np.ndarray
    truncation_used: int
    converged: bool
    max_shift: float = field(default=0.0)


def _spin_index(n: np.ndarray, up: np.ndarray) -> np.ndarray:
    return 2 * n + np.where(up, 0, 1)


def sector_chains(params: ModelParams, n_max: int) -> Dict[complex, Chain]:
    """Tridiagonal symmetry sectors of ``H / omega``.

    Rabi and anisotropic models give two chains keyed by parity ``+1, -1``.
    The two-photon model gives four chains keyed by ``C``; class ``C`` starts at
    the photon number and spin listed in ``TWO_PHOTON_CLASSES`` and advances in
    steps of two photons with alternating spin.
    """
    p = params.reduced()
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    out: Dict[complex, Chain] = {}
    if p.variant in (Variant.RABI, Variant.ANISOTROPIC) or (
        p.variant is Variant.ASYMMETRIC and p.epsilon == 0.0
    ):
        lam = p.lam if p.variant is Variant.ANISOTROPIC else 1.0
        n = np.arange(n_max + 1)
        for par in (1, -1):
            sz = -par * (-1.0) ** n          # spin of site n
            up = sz > 0
            d = n + sz * p.delta
            # down(n) -> up(n+1) comes from a^dag sigma^+ (counter-rotating)
            coupling = np.where(up[:-1], 1.0, lam) * p.g
            o = coupling * np.sqrt(n[:-1] + 1.0)
            out[par] = Chain(par, d, o, _spin_index(n, up))
        return out
    if p.variant is Variant.TWO_PHOTON:
        for label, (n0, s0) in TWO_PHOTON_CLASSES.items():
            k = np.arange((n_max - n0) // 2 + 1)
            n = n0 + 2 * k
            sz = s0 * (-1.0) ** k
            d = n + sz * p.delta
            o = p.g * np.sqrt((n[:-1] + 1.0) * (n[:-1] + 2.0))
            out[label] = Chain(label, d, o, _spin_index(n, sz > 0))
        return out
    raise DomainError("asymmetric model with nonzero bias has no parity chains")


def _banded_lower(params: ModelParams, n_max: int) -> np.ndarray:
    """Lower banded storage (bandwidth 5) of ``H / omega`` in the full basis."""
    p = params.reduced()
    dim = 2 * (n_max + 1)
    ab = np.zeros((6, dim))
    n = np.arange(n_max + 1)
    ab[0, 0::2] = n + p.delta
    ab[0, 1::2] = n - p.delta
    if p.variant is Variant.ASYMMETRIC:
        ab[1, 0::2] = p.epsilon                      # |up,n> <-> |down,n>
    if p.variant is Variant.TWO_PHOTON:
        c = p.g * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
        ab[5, 0:dim - 5:2] = c                       # |up,n> -> |down,n+2>
        ab[3, 1:dim - 4:2] = c                       # |down,n> -> |up,n+2>
        return ab
    lam = p.lam if p.variant is Variant.ANISOTROPIC else 1.0
    c = p.g * np.sqrt(n[:-1] + 1.0)
    ab[3, 0:dim - 3:2] = c                           # |up,n> -> |down,n+1>, a^dag sigma^-
    ab[1, 1:dim - 2:2] = lam * c                     # |down,n> -> |up,n+1>, a^dag sigma^+
    return ab


def build_hamiltonian(params: ModelParams, n_max: int) -> FockHamiltonian:
    """Dense truncated Hamiltonian (units of omega) plus its chain form when one exists.

    Examples
    --------
    >>> h = build_hamiltonian(ModelParams.rabi(g=0.0, delta=0.4), 4)
    >>> sorted(np.diag(h.matrix))[:3]
    [-0.4, 0.4, 0.6]
    """
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    ab = _banded_lower(params, n_max)
    dim = ab.shape[1]
    m = np.zeros((dim, dim))
    for k in range(ab.shape[0]):
        idx = np.arange(dim - k)
        m[idx + k, idx] = ab[k, : dim - k]
        m[idx, idx + k] = ab[k, : dim - k]
    chains = None
    try:
        chains = sector_chains(params, n_max)
    except DomainError:
        pass
    return FockHamiltonian(params, n_max, m, chains)


def parity_expectation(vector: np.ndarray) -> float:
    """``<P>`` of a full-basis vector."""
    v = np.asarray(vector)
    w = np.abs(v) ** 2
    n = np.arange(v.size // 2)
    sign = (-1.0) ** n
    return float(np.sum(-sign * w[0::2]) + np.sum(sign * w[1::2]))


def parity_of_state(vector: np.ndarray, threshold: float = 0.999) -> Optional[int]:
    """Parity eigenvalue of a state, or ``None`` when ``|<P>|`` is below threshold.

    >>> v = np.zeros(6); v[1] = 1.0     # |down, 0>
    >>> parity_of_state(v)
    1
    """
    e = parity_expectation(vector)
    if e > threshold:
        return 1
    if e < -threshold:
        return -1
    return None


def _initial_cutoff(params: ModelParams, k: int) -> int:
    p = params.reduced()
    n0 = max(4 * k, math.ceil(16 * p.g**2) + 32)
    if p.variant is Variant.TWO_PHOTON:
        # the ladder spacing shrinks as sqrt(1 - 4g^2); widen the start accordingly
        n0 = max(n0, math.ceil(2 * n0 / math.sqrt(1 - 4 * p.g**2)))
    return n0


def _solve_chain(ch: Chain, k: int, vectors: bool):
    k = min(k, ch.diag.size)
    if vectors:
        w, v = eigh_tridiagonal(ch.diag, ch.offdiag, select="i", select_range=(0, k - 1))
        return w, v.T
    w = eigh_tridiagonal(ch.diag, ch.offdiag, eigvals_only=True, select="i",
                         select_range=(0, k - 1))
    return w, None


def _solve(params: ModelParams, n_max: int, k: int, vectors: bool, sectors=None):
    """Lowest ``k`` levels at fixed cutoff: energies, sector labels, full-basis vectors."""
    dim = 2 * (n_max + 1)
    try:
        chains = sector_chains(params, n_max)
    except DomainError:
        chains = None
    if chains is None:
        ab = _banded_lower(params, n_max)
        if vectors:
            w, v = eig_banded(ab, lower=True, select="i", select_range=(0, k - 1))
            return w, [None] * len(w), v.T
        w = eig_banded(ab, lower=True, eigvals_only=True, select="i", select_range=(0, k - 1))
        return w, [None] * len(w), None
    es, labels, vecs = [], [], []
    for label, ch in chains.items():
        if sectors is not None and label not in sectors:
            continue
        w, v = _solve_chain(ch, k, vectors)
        es.append(w)
        labels.extend([label] * len(w))
        if vectors:
            full = np.zeros((len(w), dim))
            full[:, ch.index] = v
            vecs.append(full)
    e = np.concatenate(es)
    order = np.argsort(e, kind="stable")[:k]
    labels = [labels[i] for i in order]
    return e[order], labels, (np.concatenate(vecs)[order] if vectors else None)


def _converge(params: ModelParams, k: int, tol: float, vectors: bool, sectors=None,
              n_start: Optional[int] = None, max_doublings: int = 6):
    n_max = n_start if n_start is not None else _initial_cutoff(params, k)
    prev = None
    shift = math.inf
    for _ in range(max_doublings + 1):
        e, labels, v = _solve(params, n_max, k, vectors, sectors)
        if prev is not None and len(prev) == len(e) == k:
            shift = float(np.max(np.abs(e - prev)))
            if shift < tol:
                return e, labels, v, n_max, True, shift
        prev = e
        n_max *= 2
    return e, labels, v, n_max // 2, False, shift


def oracle_spectrum(params: ModelParams, k: int, tol: float = 1e-10,
                    vectors: bool = True, strict: bool = True) -> OracleSpectrum:
    """Lowest ``k`` eigenpairs, converged under truncation doubling.

    The cutoff starts at ``max(4k, ceil(16 g^2/omega^2) + 32)`` and doubles until
    no requested level moves by more than ``tol`` (in units of omega), at most
    six times.

    Raises
    ------
    ConvergenceError
        If the cap is reached and ``strict`` is set.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    e, labels, v, n_max, ok, shift = _converge(params, k, tol, vectors)
    if not ok and strict:
        raise ConvergenceError(
            f"oracle did not converge to {tol:g} after 6 truncation doublings "
            f"(n_max={n_max}, last shift {shift:.3g})"
        )
    parities = []
    for i, lab in enumerate(labels):
        if params.variant in (Variant.RABI, Variant.ANISOTROPIC):
            parities.append(int(lab))
        elif params.variant is Variant.ASYMMETRIC and v is not None:
            parities.append(parity_of_state(v[i]))
        else:
            parities.append(None)
    return OracleSpectrum(
        energies=e * params.omega,
        parities=tuple(parities),
        sectors=tuple(labels),
        vectors=v if v is not None else np.empty((0, 0)),
        truncation_used=n_max,
        converged=ok,
        max_shift=shift * params.omega,
    )


def sector_spectrum(params: ModelParams, sector, k: int, tol: float = 1e-10,
                    strict: bool = True) -> np.ndarray:
    """Lowest ``k`` energies of one symmetry sector (physical units)."""
    chains = sector_chains(params, 8)
    if sector not in chains:
        raise DomainError(f"unknown sector {sector!r}; expected one of {list(chains)}")
    e, _, _, n_max, ok, shift = _converge(params, k, tol, False, sectors=(sector,),
                                          n_start=2 * _initial_cutoff(params, k))
    if not ok and strict:
        raise ConvergenceError(
            f"sector {sector} did not converge to {tol:g} (n_max={n_max}, shift {shift:.3g})"
        )
    return e * params.omega


def jc_energies(params: ModelParams, k: int) -> np.ndarray:
    """Lowest ``k`` levels of the rotating-wave (Jaynes-Cummings) Hamiltonian.

    Uses the closed form of each 2x2 block ``{|up, N-1>, |down, N>}``.
    """
    p = params.reduced()
    levels = [-p.delta]
    N = 1
    while True:
        mid = N - 0.5
        r = math.sqrt((p.delta - 0.5) ** 2 + p.g**2 * N)
        levels += [mid - r, mid + r]
        # the lower branch is increasing in N once 2 sqrt(N) > g
        if len(levels) >= k and 2 * math.sqrt(N) > p.g and mid - r > sorted(levels)[k - 1]:
            break
        N += 1
    return np.sort(levels)[:k] * params.omega
