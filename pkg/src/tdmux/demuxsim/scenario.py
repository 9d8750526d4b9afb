"""End-to-end demultiplexing scenarios.

pump preparation -> SPDC modes -> chirped SFG comb -> crosstalk and
background per channel -> simulated tomography, plus the "in" detector that
cannot resolve the pulse train and sees the incoherent mixture of all modes.
"""

from __future__ import annotations

import dataclasses
import json
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError, DegenerateDataError
from ..pumpprep import H, element_from_dict, prepare_pump, standard_elements
from ..qmetrics import TwoQubitState, fidelity, purity, tangle
from ..spdc import CONVENTIONS, TemporalMode, spdc_from_pump
from ..spectral import FWHM_PER_RMS, GaussianChirpedPulse, omega_to_wavelength
from ..tomography import LIKELIHOODS, mle_fit, monte_carlo_uncertainty, simulate_counts
from ..upconvert import crosstalk_matrix, crosstalk_ratio, mode_budget, sfg_analytic, sfg_power
from .presets import channel_index, fit_preparation, get_preparation
from .report import ChannelRow, DemuxReport, MetricValue

FS2 = 1e-30
POPULATED_WEIGHT = 1e-12


@dataclass
class Scenario:
    """Physical, detector and bookkeeping parameters of one run (SI units)."""

    prep: str | None = "vii"
    elements: list | None = None
    signal_wavelength: float = 809.06e-9
    signal_fwhm: float = 3.9e-9
    escort_wavelength: float = 786.2e-9
    escort_fwhm: float = 6.3e-9
    chirp: float = 696e3 * FS2
    crystal_delay: float = 2.69e-12
    hwp2: float | None = None
    idler_phase: float | None = None
    escort_delay: float | None = None
    convention: str = "swapped"
    pair_rate: float = 13.9
    channel_rates: list | None = None
    background_rates: list = field(default_factory=lambda: [0.55, 0.34, 0.40])
    exposure: float | None = None
    in_rate: float = 44.0e3
    in_exposure: float = 5.0
    include_conversion_efficiency: bool = False
    noiseless: bool = False
    mc_samples: int = 200
    likelihood: str = "poisson"
    seed: int = 42
    n_workers: int = 1

    def __post_init__(self):
        if self.prep is None and not self.elements:
            raise ContractError("a scenario needs a preparation id or an element list")
        if self.prep is not None:
            self.prep = get_preparation(self.prep).name
        for name in ("signal_wavelength", "signal_fwhm", "escort_wavelength", "escort_fwhm",
                     "crystal_delay", "in_rate", "in_exposure"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")
        if self.chirp == 0:
            raise ContractError("chirp must be non-zero")
        if self.exposure is not None and not self.exposure > 0:
            raise ContractError("exposure must be positive")
        if self.pair_rate < 0 or any(b < 0 for b in self.background_rates):
            raise ContractError("rates must be non-negative")
        if self.convention not in CONVENTIONS:
            raise ContractError(f"convention must be one of {CONVENTIONS}")
        if self.likelihood not in LIKELIHOODS:
            raise ContractError(f"likelihood must be one of {LIKELIHOODS}")
        if not self.noiseless and self.mc_samples < 100:
            raise ContractError("mc_samples must be at least 100")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ContractError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)


def load_scenario(path=None, **overrides) -> Scenario:
    """Scenario from a JSON file, with non-None ``overrides`` taking precedence."""
    data = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
    data.update({k: v for k, v in overrides.items() if v is not None})
    return Scenario.from_dict(data)


def signal_escort(s: Scenario, tau: float = 0.0) -> tuple[GaussianChirpedPulse, GaussianChirpedPulse]:
    signal = GaussianChirpedPulse.from_wavelength(s.signal_wavelength, s.signal_fwhm, s.chirp, tau)
    escort = GaussianChirpedPulse.from_wavelength(s.escort_wavelength, s.escort_fwhm, -s.chirp)
    return signal, escort


@dataclass
class ResolvedSetup:
    elements: list
    hwp2: float | None
    idler_phase: float
    modes: list[TemporalMode]
    channel_taus: list[float]
    escort_delay: float


def resolve(s: Scenario) -> ResolvedSetup:
    """Pump train, pair modes and channel grid for a scenario."""
    if s.elements:
        elements = [element_from_dict(e) for e in s.elements]
        hwp2 = None
        idler = s.idler_phase or 0.0
    else:
        prep = get_preparation(s.prep)
        fit_hwp, fit_idler = fit_preparation(prep, s.crystal_delay, s.convention)
        hwp2 = fit_hwp if s.hwp2 is None else s.hwp2
        idler = fit_idler if s.idler_phase is None else s.idler_phase
        elements = standard_elements(prep.crystal_1, prep.crystal_2, prep.qwp, hwp2, s.crystal_delay)
    modes = spdc_from_pump(prepare_pump(elements, H), s.convention, idler)
    if s.elements:
        channel_taus = [m.tau for m in modes]
    else:
        for m in modes:
            channel_index(m.tau, s.crystal_delay)
        channel_taus = [k * s.crystal_delay for k in range(3)]
    escort_delay = float(np.mean(channel_taus)) if s.escort_delay is None else s.escort_delay
    return ResolvedSetup(elements, hwp2, idler, modes, channel_taus, escort_delay)


def slow_detector_state(modes: list[TemporalMode]) -> TwoQubitState:
    """State seen by a detector too slow to resolve the train: sum_j b_j |psi_j><psi_j|."""
    if not modes:
        raise ContractError("need at least one temporal mode")
    weights = np.array([m.weight for m in modes])
    if weights.sum() <= 0:
        raise DegenerateDataError("all modes have zero weight")
    rho = sum(w * m.rho for w, m in zip(weights, modes)) / weights.sum()
    return TwoQubitState.from_matrix(rho)


def channel_state(m: int, modes: list[TemporalMode], crosstalk, background_fraction: float = 0.0) -> TwoQubitState:
    """Polarization state read out in frequency channel ``m``.

    ``crosstalk[j, m]`` is the fraction of mode ``j`` landing in channel
    ``m``; white background makes up ``background_fraction`` of the counts.
    """
    crosstalk = np.asarray(crosstalk, dtype=float)
    if crosstalk.ndim != 2 or crosstalk.shape[0] != len(modes):
        raise ContractError("crosstalk must have one row per mode")
    if not 0 <= background_fraction < 1:
        raise ContractError("background fraction must lie in [0, 1)")
    signal = sum(crosstalk[j, m] * mode.weight * mode.rho for j, mode in enumerate(modes))
    weight = float(np.trace(signal).real) if np.ndim(signal) else 0.0
    if weight <= 0:
        raise DegenerateDataError(f"channel {m} receives no signal")
    rho = (1 - background_fraction) * signal / weight + background_fraction * np.eye(4) / 4
    return TwoQubitState.from_matrix(rho)


def _channel_mix(k: int, modes: list[TemporalMode], crosstalk: np.ndarray) -> np.ndarray:
    """Unnormalized signal density matrix reaching channel ``k``."""
    return sum(crosstalk[j, k] * m.weight * m.rho for j, m in enumerate(modes))


def _with_errors(value: float, summary) -> MetricValue:
    """Point estimate with error bars reaching the 16th and 84th Monte Carlo percentiles."""
    lo, hi = summary.median - summary.minus, summary.median + summary.plus
    return MetricValue(value, max(hi - value, 0.0), max(value - lo, 0.0))


def _measure(row: ChannelRow, state: TwoQubitState, exposure: float, seed: int, s: Scenario) -> None:
    target = row.theo_state if row.populated else None
    dataset = simulate_counts(state, row.signal_rate, exposure, row.background_rate, seed=seed)
    fit = mle_fit(dataset, model=s.likelihood)
    mc = monte_carlo_uncertainty(dataset, s.mc_samples, seed + 1, target=target, model=s.likelihood,
                                 n_workers=s.n_workers)
    row.exposure = exposure
    row.counts_per_setting = dataset.total / len(dataset.counts)
    row.meas_state = fit.state
    row.tangle_meas = _with_errors(tangle(fit.state), mc["tangle"])
    row.purity_meas = _with_errors(purity(fit.state), mc["purity"])
    if target is not None:
        row.fidelity = _with_errors(fidelity(fit.state, target), mc["fidelity"])
    row.diagnostics = fit.diagnostics()


def _fill_noiseless(row: ChannelRow) -> None:
    if row.expected_state is None:
        return
    row.meas_state = row.expected_state
    row.tangle_meas = MetricValue(tangle(row.meas_state))
    row.purity_meas = MetricValue(purity(row.meas_state))
    if row.populated:
        row.fidelity = MetricValue(fidelity(row.meas_state, row.theo_state))


def run_scenario(s: Scenario) -> DemuxReport:
    """Run the full pipeline and assemble a :class:`DemuxReport`."""
    setup = resolve(s)
    modes = setup.modes
    signal, escort = signal_escort(s)
    budget = mode_budget(signal.sigma, escort.sigma, s.chirp)
    rel_mode_taus = [m.tau - setup.escort_delay for m in modes]
    rel_channel_taus = [t - setup.escort_delay for t in setup.channel_taus]
    n_ch = len(rel_channel_taus)
    if n_ch > len(string.ascii_uppercase):
        raise ContractError("too many channels")
    if not s.noiseless and len(s.background_rates) < n_ch:
        raise ContractError(f"need {n_ch} background rates, got {len(s.background_rates)}")
    if s.channel_rates is not None and len(s.channel_rates) < n_ch:
        raise ContractError(f"need {n_ch} channel rates, got {len(s.channel_rates)}")
    exposure = s.exposure
    if exposure is None:
        exposure = get_preparation(s.prep).exposure if s.prep else 360.0

    # leakage of mode j into channel m, relative to mode j's own channel
    xt = crosstalk_matrix(rel_mode_taus, rel_channel_taus, signal.sigma, escort.sigma, s.chirp)
    own = np.array([crosstalk_ratio(t, t, signal.sigma, escort.sigma, s.chirp) for t in rel_mode_taus])
    xt = xt / own[:, None]

    in_theo = slow_detector_state(modes)
    rows = [ChannelRow(name="in", populated=True, weight=1.0, signal_rate=s.in_rate,
                       theo_state=in_theo, expected_state=in_theo,
                       tangle_theo=tangle(in_theo), purity_theo=purity(in_theo))]
    signal_parts = [in_theo]
    for k, tau_rel in enumerate(rel_channel_taus):
        shifted = signal_escort(s, tau_rel)[0]
        comb = sfg_analytic(shifted, escort, k)
        members = [m for m in modes if abs(m.tau - setup.channel_taus[k]) <= 1e-15]
        weight = sum(m.weight for m in members)
        populated = weight > POPULATED_WEIGHT
        mix = _channel_mix(k, modes, xt)
        leak = float(np.trace(mix).real)
        if s.channel_rates is not None:
            sig_rate = float(s.channel_rates[k])
        else:
            sig_rate = s.pair_rate * leak
            if s.include_conversion_efficiency:
                sig_rate *= comb.rel_efficiency
        bkg = 0.0 if s.noiseless else float(s.background_rates[k])
        theo = TwoQubitState.from_ket(members[0].pair_state) if populated else TwoQubitState.maximally_mixed()
        if sig_rate > 0 and leak > POPULATED_WEIGHT:
            part = TwoQubitState.from_matrix(mix)
            expected = channel_state(k, modes, xt, bkg / (bkg + sig_rate))
        else:
            part = TwoQubitState.maximally_mixed()
            sig_rate = 0.0
            expected = part if bkg > 0 else None
        signal_parts.append(part)
        rows.append(ChannelRow(
            name=string.ascii_uppercase[k],
            populated=populated,
            weight=weight,
            tau=tau_rel,
            signal_rate=sig_rate,
            background_rate=bkg,
            center_omega=comb.center_omega,
            center_wavelength_nm=omega_to_wavelength(comb.center_omega) * 1e9,
            rms_width=comb.rms_width,
            fwhm_ghz=comb.rms_width * FWHM_PER_RMS / (2 * np.pi) / 1e9,
            rel_efficiency=comb.rel_efficiency,
            sfg_power=sfg_power(shifted, escort),
            crosstalk=[float(v) for v in xt[:, k]],
            theo_state=theo,
            expected_state=expected,
            tangle_theo=tangle(theo),
            purity_theo=purity(theo),
        ))

    for idx, (row, part) in enumerate(zip(rows, signal_parts)):
        if s.noiseless:
            _fill_noiseless(row)
            continue
        exp_s = s.in_exposure if row.name == "in" else exposure
        _measure(row, part, exp_s, s.seed + 100_000 * idx, s)

    return DemuxReport(
        scenario=s.to_dict(),
        hwp2=setup.hwp2,
        idler_phase=setup.idler_phase,
        escort_delay=setup.escort_delay,
        mode_taus=[m.tau for m in modes],
        mode_weights=[m.weight for m in modes],
        budget=dataclasses.asdict(budget),
        rows=rows,
    )
