"""Unit conversions and Gaussian chirped-pulse spectra.

Angular frequencies are in rad/s, wavelengths in m, chirp parameters in s^2.
The RMS width ``sigma`` always refers to the *intensity* spectrum, so the
amplitude of a pulse is

    f(w) = (2 pi sigma^2)^(-1/4) exp(-(w - w0)^2 / (4 sigma^2) + i A (w - w0)^2 + i w tau)

and ``|f|^2`` is a unit-area Gaussian of standard deviation ``sigma``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, CoverageError, DomainError

C_LIGHT = 299_792_458.0
FWHM_PER_RMS = 2.0 * np.sqrt(2.0 * np.log(2.0))

# grid must extend at least this many RMS widths on either side of the centre
MIN_HALF_SPAN_SIGMAS = 4.0
# at most pi/16 of spectral phase per grid step
PHASE_STEP_LIMIT = np.pi / 16


def wavelength_to_omega(wavelength):
    """Vacuum angular frequency 2 pi c / lambda."""
    wavelength = np.asarray(wavelength, dtype=float)
    if np.any(wavelength <= 0):
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    out = 2.0 * np.pi * C_LIGHT / wavelength
    return float(out) if out.ndim == 0 else out


def omega_to_wavelength(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError(f"angular frequency must be positive, got {omega}")
    out = 2.0 * np.pi * C_LIGHT / omega
    return float(out) if out.ndim == 0 else out


def fwhm_wavelength_to_rms_omega(lambda0: float, fwhm_lambda: float) -> float:
    """Convert a FWHM bandwidth in wavelength to an intensity RMS width in rad/s."""
    if lambda0 <= 0:
        raise DomainError(f"centre wavelength must be positive, got {lambda0}")
    if not 0 < fwhm_lambda < lambda0:
        raise DomainError(
            f"FWHM {fwhm_lambda} must lie in (0, lambda0={lambda0})"
        )
    dnu_fwhm = C_LIGHT * fwhm_lambda / lambda0**2
    return 2.0 * np.pi * dnu_fwhm / FWHM_PER_RMS


def rms_omega_to_fwhm_wavelength(lambda0: float, sigma: float) -> float:
    """Inverse of :func:`fwhm_wavelength_to_rms_omega`."""
    if lambda0 <= 0 or sigma <= 0:
        raise DomainError("lambda0 and sigma must be positive")
    dnu_fwhm = sigma * FWHM_PER_RMS / (2.0 * np.pi)
    return dnu_fwhm * lambda0**2 / C_LIGHT


@dataclass(frozen=True)
class GaussianChirpedPulse:
    omega0: float
    sigma: float
    chirp_A: float = 0.0
    tau: float = 0.0
    amp: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractError(f"sigma must be positive, got {self.sigma}")
        if self.amp < 0:
            raise ContractError(f"amp must be non-negative, got {self.amp}")

    @classmethod
    def from_wavelength(cls, wavelength, fwhm_wavelength, chirp_A=0.0, tau=0.0, amp=1.0):
        return cls(
            omega0=wavelength_to_omega(wavelength),
            sigma=fwhm_wavelength_to_rms_omega(wavelength, fwhm_wavelength),
            chirp_A=chirp_A,
            tau=tau,
            amp=amp,
        )

    def amplitude(self, omega):
        """Complex spectral amplitude, including chirp and delay phases."""
        omega = np.asarray(omega, dtype=float)
        x = omega - self.omega0
        norm = self.amp * (2.0 * np.pi * self.sigma**2) ** -0.25
        phase = self.chirp_A * x**2 + omega * self.tau
        return norm * np.exp(-(x**2) / (4.0 * self.sigma**2) + 1j * phase)

    def max_phase_slope(self, omega_min: float, omega_max: float) -> float:
        """Largest |d phase / d omega| over [omega_min, omega_max]."""
        edges = np.array([omega_min, omega_max]) - self.omega0
        return float(np.max(np.abs(2.0 * self.chirp_A * edges + self.tau)))


@dataclass
class SpectrumGrid:
    """Complex amplitudes on a uniform angular-frequency grid."""

    omega_min: float
    omega_max: float
    n_points: int
    values: np.ndarray
    # steepest phase slope of the sampled field (s); None when unknown
    phase_slope: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_points < 2:
            raise ContractError("a spectrum grid needs at least two points")
        if not self.omega_max > self.omega_min:
            raise ContractError("omega_max must exceed omega_min")
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.n_points,):
            raise ContractError(
                f"values has shape {self.values.shape}, expected ({self.n_points},)"
            )

    @property
    def omega(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    @property
    def d_omega(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_points - 1)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def power(self) -> float:
        return float(np.trapezoid(self.intensity, dx=self.d_omega))

    def centroid(self) -> float:
        w, i = self.omega, self.intensity
        # offsets from the grid centre keep the moment sums well conditioned
        mid = 0.5 * (self.omega_min + self.omega_max)
        return float(mid + np.trapezoid((w - mid) * i) / np.trapezoid(i))

    def rms_width(self) -> float:
        w, i = self.omega, self.intensity
        c = self.centroid()
        return float(np.sqrt(np.trapezoid((w - c) ** 2 * i) / np.trapezoid(i)))

    def to_csv(self, path) -> Path:
        """Write two columns (omega in rad/s, |amplitude|^2)."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega_rad_per_s", "intensity"])
            for w, i in zip(self.omega, self.intensity):
                writer.writerow([repr(float(w)), repr(float(i))])
        return path


def points_for_resolution(pulse: GaussianChirpedPulse, omega_min: float, omega_max: float) -> int:
    """Minimum grid size keeping the phase step of ``pulse`` below pi/16."""
    slope = pulse.max_phase_slope(omega_min, omega_max)
    if slope == 0:
        return 2
    return int(np.ceil((omega_max - omega_min) * slope / PHASE_STEP_LIMIT)) + 1


def pulse_grid_bounds(pulse: GaussianChirpedPulse, n_sigma: float = 8.0) -> tuple[float, float]:
    return pulse.omega0 - n_sigma * pulse.sigma, pulse.omega0 + n_sigma * pulse.sigma


def sample_pulse(
    pulse: GaussianChirpedPulse,
    omega_min: float,
    omega_max: float,
    n_points: int,
    name: str | None = None,
) -> SpectrumGrid:
    """Sample ``pulse`` on a uniform grid.

    The grid must reach at least four RMS widths either side of the pulse
    centre, otherwise :class:`CoverageError` is raised.
    """
    half = MIN_HALF_SPAN_SIGMAS * pulse.sigma
    if omega_min > pulse.omega0 - half or omega_max < pulse.omega0 + half:
        label = name or repr(pulse)
        raise CoverageError(
            f"grid [{omega_min:.6e}, {omega_max:.6e}] rad/s does not span "
            f"+/-{MIN_HALF_SPAN_SIGMAS:g} sigma around pulse {label}"
        )
    omega = np.linspace(omega_min, omega_max, n_points)
    return SpectrumGrid(
        omega_min=omega_min,
        omega_max=omega_max,
        n_points=n_points,
        values=pulse.amplitude(omega),
        phase_slope=pulse.max_phase_slope(omega_min, omega_max),
    )
