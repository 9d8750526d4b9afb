"""Simulation of time-bin to frequency demultiplexing of polarization-entangled pairs."""

from .errors import (
    ContractError,
    ConvergenceError,
    CoverageError,
    DegenerateDataError,
    DomainError,
    ResolutionError,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "ConvergenceError",
    "CoverageError",
    "DegenerateDataError",
    "DomainError",
    "ResolutionError",
]
