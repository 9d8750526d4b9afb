"""Chirped-pulse sum-frequency generation as a time-to-frequency converter.

A signal pulse with chirp A and delay tau is mixed with an escort pulse of
chirp -A.  The generated photon is a Gaussian whose centre moves linearly
with tau and whose width is compressed by the chirp.  ``sfg_analytic`` gives
the closed form; ``sfg_numeric`` evaluates the same convolution by
quadrature and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ContractError, ResolutionError
from .spectral import (
    PHASE_STEP_LIMIT,
    GaussianChirpedPulse,
    SpectrumGrid,
    points_for_resolution,
    pulse_grid_bounds,
    sample_pulse,
)


@dataclass(frozen=True)
class CombChannel:
    mode_index: int
    center_omega: float
    rms_width: float
    rel_efficiency: float
    tau: float = 0.0


@dataclass(frozen=True)
class ModeBudget:
    dtau_min: float
    dtau_max: float
    max_modes: int


def _check_pair(signal: GaussianChirpedPulse, escort: GaussianChirpedPulse) -> float:
    a = signal.chirp_A
    if not np.isclose(escort.chirp_A, -a, rtol=1e-12, atol=0.0):
        raise ContractError(
            f"escort chirp {escort.chirp_A:.6e} must be opposite to signal chirp {a:.6e}"
        )
    if escort.tau != 0:
        raise ContractError("the escort pulse defines the time origin; its tau must be 0")
    return a


def _gaussian_terms(signal, escort):
    ss2, se2 = signal.sigma**2, escort.sigma**2
    total = ss2 + se2
    prod = ss2 * se2
    chirp_factor = 1.0 + 16.0 * signal.chirp_A**2 * prod
    return ss2, se2, total, prod, chirp_factor


def sfg_analytic(signal: GaussianChirpedPulse, escort: GaussianChirpedPulse, mode_index: int = 0) -> CombChannel:
    """Exact generated-photon centre, RMS width and relative efficiency."""
    a = _check_pair(signal, escort)
    _, _, total, prod, k = _gaussian_terms(signal, escort)
    tau = signal.tau
    center = signal.omega0 + escort.omega0 - 8.0 * a * prod * tau / k
    width = np.sqrt(total / k)
    efficiency = np.exp(-2.0 * prod * tau**2 / (total * k))
    return CombChannel(mode_index, float(center), float(width), float(efficiency), tau)


def sfg_large_chirp(signal: GaussianChirpedPulse, escort: GaussianChirpedPulse, mode_index: int = 0) -> CombChannel:
    """Large-chirp approximation (A sigma^2 >> 1) of :func:`sfg_analytic`.

    Centre shift -tau/(2A), width sqrt(1/sigma_e^2 + 1/sigma_s^2)/(4A) and
    efficiency decay exp(-tau^2 / (8 A^2 (sigma_e^2 + sigma_s^2))).
    """
    a = _check_pair(signal, escort)
    if a == 0:
        raise ContractError("the large-chirp limit needs a non-zero chirp")
    ss2, se2, total, _, _ = _gaussian_terms(signal, escort)
    tau = signal.tau
    center = signal.omega0 + escort.omega0 - tau / (2.0 * a)
    width = np.sqrt(1.0 / ss2 + 1.0 / se2) / (4.0 * abs(a))
    efficiency = np.exp(-(tau**2) / (8.0 * a**2 * total))
    return CombChannel(mode_index, float(center), float(width), float(efficiency), tau)


def sfg_power(signal: GaussianChirpedPulse, escort: GaussianChirpedPulse) -> float:
    """Integrated |f_g|^2 for unit-norm inputs (scaled by amp^2 of each)."""
    _check_pair(signal, escort)
    _, _, total, prod, k = _gaussian_terms(signal, escort)
    eff = np.exp(-2.0 * prod * signal.tau**2 / (total * k))
    prefactor = 2.0 * np.sqrt(prod) / total
    return float(
        (signal.amp * escort.amp) ** 2 * prefactor * np.sqrt(2.0 * np.pi * total / k) * eff
    )


def sfg_intensity(signal: GaussianChirpedPulse, escort: GaussianChirpedPulse, omega) -> np.ndarray:
    """Analytic |f_g(omega)|^2 on an arbitrary frequency array."""
    ch = sfg_analytic(signal, escort)
    omega = np.asarray(omega, dtype=float)
    peak = sfg_power(signal, escort) / (np.sqrt(2.0 * np.pi) * ch.rms_width)
    return peak * np.exp(-((omega - ch.center_omega) ** 2) / (2.0 * ch.rms_width**2))


def sfg_numeric(signal_grid: SpectrumGrid, escort_grid: SpectrumGrid) -> SpectrumGrid:
    """Quadrature of f_g(w_g) = int dw_s f_s(w_s) alpha(w_g - w_s).

    Both grids must share one spacing and the signal grid already carries
    its delay phase (as produced by :func:`sample_pulse`).  The output
    lives on w_g = w_s + w_e for all grid pairs, so the integral reduces to
    a discrete convolution times the grid step.
    """
    dw = signal_grid.d_omega
    if not np.isclose(escort_grid.d_omega, dw, rtol=1e-9, atol=0.0):
        raise ContractError(
            f"signal and escort grids need equal spacing ({dw:.6e} vs {escort_grid.d_omega:.6e})"
        )
    for name, grid in (("signal", signal_grid), ("escort", escort_grid)):
        if grid.phase_slope is not None and grid.phase_slope * dw > PHASE_STEP_LIMIT:
            need = int(np.ceil((grid.omega_max - grid.omega_min) * grid.phase_slope / PHASE_STEP_LIMIT)) + 1
            raise ResolutionError(
                f"{name} grid under-resolves its spectral phase: "
                f"{grid.n_points} points, need at least {need}",
                required_points=need,
            )
    values = dw * fftconvolve(signal_grid.values, escort_grid.values)
    n = signal_grid.n_points + escort_grid.n_points - 1
    omega_min = signal_grid.omega_min + escort_grid.omega_min
    return SpectrumGrid(omega_min, omega_min + (n - 1) * dw, n, values)


def matched_grids(
    signal: GaussianChirpedPulse,
    escort: GaussianChirpedPulse,
    n_sigma: float = 8.0,
    oversample: float = 1.0,
) -> tuple[SpectrumGrid, SpectrumGrid]:
    """Sample both pulses on grids with a common, phase-resolving step."""
    s_lo, s_hi = pulse_grid_bounds(signal, n_sigma)
    e_lo, e_hi = pulse_grid_bounds(escort, n_sigma)
    steps = []
    for p, lo, hi in ((signal, s_lo, s_hi), (escort, e_lo, e_hi)):
        n = max(points_for_resolution(p, lo, hi), 64)
        steps.append((hi - lo) / (n - 1))
    dw = min(steps) / oversample
    while True:
        grids = []
        for p, lo, hi in ((signal, s_lo, s_hi), (escort, e_lo, e_hi)):
            n = int(np.ceil((hi - lo) / dw)) + 1
            grids.append(sample_pulse(p, lo, lo + (n - 1) * dw, n))
        # rounding n up stretches the grid past hi, where the phase is steeper
        worst = max(g.phase_slope * dw for g in grids)
        if worst <= PHASE_STEP_LIMIT:
            return grids[0], grids[1]
        dw *= PHASE_STEP_LIMIT / worst * (1 - 1e-9)


def crosstalk_ratio(tau_j: float, tau_m: float, sigma_s: float, sigma_e: float, A: float) -> float:
    """Relative signal of mode ``j`` at the frequency assigned to mode ``m``.

    Evaluates exp[-2 s_e^2 s_s^2 (tau_j - tau_m)^2 / (s_e^2 + s_s^2)
    - tau_j^2 / (8 A^2 (s_e^2 + s_s^2))]; for j == m this is the mode's own
    efficiency factor.
    """
    if sigma_s <= 0 or sigma_e <= 0:
        raise ContractError("bandwidths must be positive")
    if A == 0:
        raise ContractError("crosstalk model needs a non-zero chirp")
    total = sigma_s**2 + sigma_e**2
    prod = sigma_s**2 * sigma_e**2
    exponent = -2.0 * prod * (tau_j - tau_m) ** 2 / total - tau_j**2 / (8.0 * A**2 * total)
    return float(np.exp(exponent))


def crosstalk_field_attenuation(dtau: float, sigma_s: float, sigma_e: float) -> float:
    """Field-amplitude suppression of a neighbour ``dtau`` away, relative to its peak.

    This is the square root of the separation-dependent factor of
    :func:`crosstalk_ratio`.  It equals e^-2 at ``mode_budget(...).dtau_min``,
    which is where neighbouring modes start to count as negligible.
    """
    prod = sigma_s**2 * sigma_e**2
    return float(np.exp(-prod * dtau**2 / (sigma_s**2 + sigma_e**2)))


def crosstalk_matrix(taus_modes, taus_channels, sigma_s, sigma_e, A) -> np.ndarray:
    """X[j, m] = crosstalk_ratio(tau_j, tau_m) for modes j and channels m."""
    return np.array(
        [[crosstalk_ratio(tj, tm, sigma_s, sigma_e, A) for tm in taus_channels] for tj in taus_modes]
    )


def mode_budget(sigma_s: float, sigma_e: float, A: float) -> ModeBudget:
    """Admissible mode-separation window and the resulting channel count."""
    if sigma_s <= 0 or sigma_e <= 0 or A == 0:
        raise ContractError("bandwidths and chirp must be non-zero")
    root = np.sqrt(sigma_s**2 + sigma_e**2)
    dtau_min = np.sqrt(2.0) * root / (sigma_s * sigma_e)
    dtau_max = 2.0 * np.sqrt(2.0) * abs(A) * root
    return ModeBudget(float(dtau_min), float(dtau_max), int(np.floor(dtau_max / dtau_min)))
