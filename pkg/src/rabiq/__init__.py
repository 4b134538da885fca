"""Exact spectra, exceptional points and dynamics of Rabi-type models."""

from .model import (
    ConvergenceError,
    DomainError,
    ModelParams,
    PoleProximityError,
    RabiqError,
    Variant,
    build_hamiltonian,
    oracle_spectrum,
    parity_of_state,
)

__version__ = "0.1.0"
