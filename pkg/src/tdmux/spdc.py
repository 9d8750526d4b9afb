"""Pump pulse train to per-mode photon-pair polarization states."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractError
from .pumpprep import PulseTrain

CONVENTIONS = ("swapped", "direct")

# filters are treated as narrow when sigma_filter / sigma_pump < this
DEFAULT_NARROWBAND_THRESHOLD = 1.0


@dataclass(frozen=True, eq=False)
class TemporalMode:
    tau: float
    weight: float
    pair_state: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.pair_state, dtype=complex)
        if psi.shape != (4,):
            raise ContractError("pair state must have four amplitudes (HH, HV, VH, VV)")
        if abs(np.linalg.norm(psi) - 1) > 1e-10:
            raise ContractError("pair state must be normalized")
        if not 0 <= self.weight <= 1 + 1e-12:
            raise ContractError(f"mode weight {self.weight} outside [0, 1]")
        object.__setattr__(self, "pair_state", psi)

    @property
    def rho(self) -> np.ndarray:
        return np.outer(self.pair_state, self.pair_state.conj())


def pair_from_pump(alpha: complex, beta: complex, convention: str = "swapped", idler_phase: float = 0.0) -> np.ndarray:
    """Two-photon state produced by a pump with normalized Jones vector (alpha, beta).

    ``swapped``: alpha|H> + beta|V> -> beta|HH> + alpha|VV> (orthogonal type-I
    crystal pair).  ``direct``: alpha|HH> + beta|VV>.  The idler phase
    multiplies the VV amplitude.
    """
    if convention == "swapped":
        hh, vv = beta, alpha
    elif convention == "direct":
        hh, vv = alpha, beta
    else:
        raise ContractError(f"unknown convention {convention!r}; use one of {CONVENTIONS}")
    psi = np.array([hh, 0.0, 0.0, vv * np.exp(1j * idler_phase)], dtype=complex)
    return psi / np.linalg.norm(psi)


def spdc_from_pump(
    train: PulseTrain,
    convention: str = "swapped",
    idler_phase: float = 0.0,
) -> list[TemporalMode]:
    """One temporal mode per pump pulse, weighted by its intensity fraction.

    Pair emission is taken to first order, so pair probability is
    proportional to pump intensity.
    """
    total = train.total_norm
    if total <= 0:
        raise ContractError("pump train carries no intensity")
    modes = []
    for entry in train:
        b = entry.intensity
        if b <= 0:
            warnings.warn(f"skipping zero-intensity pump pulse at tau={entry.tau:.3e} s")
            continue
        j = entry.jones.normalized()
        modes.append(
            TemporalMode(entry.tau, b / total, pair_from_pump(j.h, j.v, convention, idler_phase))
        )
    return modes


class NarrowbandCheck(NamedTuple):
    valid: bool
    ratio: float


def narrowband_validity(
    sigma_filter: float,
    sigma_pump: float,
    threshold: float = DEFAULT_NARROWBAND_THRESHOLD,
) -> NarrowbandCheck:
    """Whether the filtered pairs are spectrally separable from the pump."""
    if sigma_filter < 0 or sigma_pump <= 0:
        raise ContractError("bandwidths must be positive")
    ratio = sigma_filter / sigma_pump
    return NarrowbandCheck(ratio < threshold, ratio)
