"""Report containers and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..qmetrics import TwoQubitState
from ..spectral import SpectrumGrid

SPECTRUM_POINTS = 2001
SPECTRUM_HALF_SPAN = 5.0  # in RMS widths

_STATE_FIELDS = ("theo_state", "expected_state", "meas_state")
_METRIC_FIELDS = ("tangle_meas", "purity_meas", "fidelity")


@dataclass
class MetricValue:
    """Point estimate with asymmetric (84th/16th percentile) error bars."""

    value: float
    plus: float = 0.0
    minus: float = 0.0

    def __str__(self):
        return f"{self.value:.3f}+{self.plus:.3f}-{self.minus:.3f}"


@dataclass
class ChannelRow:
    name: str
    populated: bool
    weight: float
    theo_state: TwoQubitState
    tangle_theo: float
    purity_theo: float
    tau: float | None = None
    signal_rate: float = 0.0
    background_rate: float = 0.0
    center_omega: float | None = None
    center_wavelength_nm: float | None = None
    rms_width: float | None = None
    fwhm_ghz: float | None = None
    rel_efficiency: float | None = None
    sfg_power: float | None = None
    crosstalk: list = field(default_factory=list)
    expected_state: TwoQubitState | None = None
    exposure: float | None = None
    counts_per_setting: float | None = None
    meas_state: TwoQubitState | None = None
    tangle_meas: MetricValue | None = None
    purity_meas: MetricValue | None = None
    fidelity: MetricValue | None = None
    diagnostics: dict | None = None

    @property
    def center_frequency_ghz(self) -> float | None:
        if self.center_omega is None:
            return None
        return self.center_omega / (2 * np.pi) / 1e9

    @property
    def background_only(self) -> bool:
        return not self.populated

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in _STATE_FIELDS:
                v = None if v is None else v.to_json_dict()
            elif f.name in _METRIC_FIELDS:
                v = None if v is None else dataclasses.asdict(v)
            d[f.name] = v
        d["center_frequency_ghz"] = self.center_frequency_ghz
        d["background_only"] = self.background_only
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelRow":
        kw = {}
        for f in dataclasses.fields(cls):
            v = d.get(f.name)
            if v is not None and f.name in _STATE_FIELDS:
                v = TwoQubitState.from_json_dict(v)
            elif v is not None and f.name in _METRIC_FIELDS:
                v = MetricValue(**v)
            if f.name in d:
                kw[f.name] = v
        return cls(**kw)

    def spectrum(self, n_points: int = SPECTRUM_POINTS) -> SpectrumGrid:
        """Gaussian generated-photon spectrum of this channel's comb line."""
        if self.center_omega is None or self.rms_width is None:
            raise ValueError(f"channel {self.name} has no comb line")
        lo = self.center_omega - SPECTRUM_HALF_SPAN * self.rms_width
        hi = self.center_omega + SPECTRUM_HALF_SPAN * self.rms_width
        return gaussian_lines([self], lo, hi, n_points)


def gaussian_lines(rows, omega_min: float, omega_max: float, n_points: int) -> SpectrumGrid:
    """Sum of the channels' comb lines, each scaled by its weight and SFG power."""
    omega = np.linspace(omega_min, omega_max, n_points)
    total = np.zeros_like(omega)
    for r in rows:
        power = r.weight * (1.0 if r.sfg_power is None else r.sfg_power)
        norm = power / (np.sqrt(2 * np.pi) * r.rms_width)
        total += norm * np.exp(-((omega - r.center_omega) ** 2) / (2 * r.rms_width**2))
    # SpectrumGrid holds amplitudes; store sqrt so that intensity is the line sum
    return SpectrumGrid(omega_min, omega_max, n_points, np.sqrt(total).astype(complex))


@dataclass
class DemuxReport:
    scenario: dict
    hwp2: float | None
    idler_phase: float
    escort_delay: float
    mode_taus: list
    mode_weights: list
    budget: dict
    rows: list[ChannelRow]

    def row(self, name: str) -> ChannelRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def channels(self) -> list[ChannelRow]:
        return [r for r in self.rows if r.name != "in"]

    def combined_spectrum(self, n_points: int = SPECTRUM_POINTS) -> SpectrumGrid:
        lines = [r for r in self.channels if r.populated]
        if not lines:
            raise ValueError("no populated channels")
        lo = min(r.center_omega - SPECTRUM_HALF_SPAN * r.rms_width for r in lines)
        hi = max(r.center_omega + SPECTRUM_HALF_SPAN * r.rms_width for r in lines)
        return gaussian_lines(lines, lo, hi, n_points)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "rows"}
        d["rows"] = [r.to_dict() for r in self.rows]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DemuxReport":
        kw = {f.name: d[f.name] for f in dataclasses.fields(cls) if f.name != "rows"}
        return cls(rows=[ChannelRow.from_dict(r) for r in d["rows"]], **kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DemuxReport":
        return cls.from_dict(json.loads(text))


SUMMARY_COLUMNS = (
    "channel", "background_only", "counts",
    "tangle_meas", "tangle_plus", "tangle_minus", "tangle_theo",
    "purity_meas", "purity_plus", "purity_minus", "purity_theo",
    "fidelity", "fidelity_plus", "fidelity_minus",
)


def _metric_cells(m: MetricValue | None) -> list:
    return ["", "", ""] if m is None else [m.value, m.plus, m.minus]


def summary_rows(report: DemuxReport) -> list[list]:
    out = []
    for r in report.rows:
        counts = r.signal_rate + r.background_rate
        out.append(
            [r.name, int(r.background_only), counts]
            + _metric_cells(r.tangle_meas) + [r.tangle_theo]
            + _metric_cells(r.purity_meas) + [r.purity_theo]
            + _metric_cells(r.fidelity)
        )
    return out


def emit_report(report: DemuxReport, out_dir) -> dict[str, Path]:
    """Write report.json, summary.csv and one spectrum_<channel>.csv per comb line."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "report.json", "summary": out / "summary.csv"}
    paths["json"].write_text(report.to_json())
    with paths["summary"].open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows(report))
    for r in report.channels:
        if r.center_omega is None:
            continue
        path = out / f"spectrum_{r.name}.csv"
        r.spectrum().to_csv(path)
        paths[f"spectrum_{r.name}"] = path
    return paths
