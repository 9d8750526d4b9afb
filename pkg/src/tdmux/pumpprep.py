"""Jones-calculus model of the pump preparation line.

A single pump pulse passes through wave plates and birefringent crystals.
Each crystal splits the field onto its slow and fast axes and delays the
slow component, so the output is a train of polarized pulses.

Angle conventions: a crystal at angle 0 has its slow axis horizontal; wave
plates at angle 0 have their fast axis horizontal.  Global phases carry no
physical meaning here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Union

import numpy as np

from .errors import ContractError

TAU_MERGE_TOL = 1e-15
# entries with |h|^2 + |v|^2 below this are numerically empty
_EMPTY_NORM2 = 1e-28


@dataclass(frozen=True)
class JonesVector:
    h: complex
    v: complex

    @classmethod
    def from_array(cls, arr) -> "JonesVector":
        arr = np.asarray(arr, dtype=complex)
        return cls(complex(arr[0]), complex(arr[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)

    @property
    def norm2(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2

    def normalized(self) -> "JonesVector":
        n = np.sqrt(self.norm2)
        if n == 0:
            raise ContractError("cannot normalize a zero Jones vector")
        return JonesVector(self.h / n, self.v / n)

    def inner(self, other: "JonesVector") -> complex:
        """<self|other>."""
        return np.vdot(self.as_array(), other.as_array())


H = JonesVector(1.0, 0.0)
V = JonesVector(0.0, 1.0)
D = JonesVector(1 / np.sqrt(2), 1 / np.sqrt(2))


@dataclass(frozen=True)
class PulseEntry:
    tau: float
    jones: JonesVector

    @property
    def intensity(self) -> float:
        return self.jones.norm2


@dataclass(frozen=True)
class PulseTrain:
    entries: tuple[PulseEntry, ...]

    def __post_init__(self):
        taus = [e.tau for e in self.entries]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ContractError(f"pulse delays must be strictly increasing, got {taus}")

    @classmethod
    def single(cls, jones: JonesVector = H, tau: float = 0.0) -> "PulseTrain":
        return cls((PulseEntry(tau, jones),))

    @property
    def taus(self) -> list[float]:
        return [e.tau for e in self.entries]

    @property
    def total_norm(self) -> float:
        return float(sum(e.intensity for e in self.entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i) -> PulseEntry:
        return self.entries[i]


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _retarder(theta: float, diag) -> np.ndarray:
    r = _rotation(theta)
    return r @ np.diag(diag) @ r.T


@dataclass(frozen=True)
class HalfWave:
    angle: float

    def matrix(self) -> np.ndarray:
        return _retarder(self.angle, [1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class QuarterWave:
    angle: float

    def matrix(self) -> np.ndarray:
        return _retarder(self.angle, [1.0, 1j])


@dataclass(frozen=True)
class Birefringent:
    """Delay line: the slow-axis component lags by ``delay`` seconds.

    ``phase`` is an extra optical phase on the slow axis, used to model
    wavelength-scale length mismatch between nominally identical crystals.
    """

    delay: float
    angle: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.delay > 0:
            raise ContractError(f"birefringent delay must be positive, got {self.delay}")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([c, s]), np.array([-s, c])


OpticalElement = Union[HalfWave, QuarterWave, Birefringent]


def _merge(pairs: Iterable[tuple[float, np.ndarray]]) -> PulseTrain:
    merged: list[list] = []
    for tau, vec in sorted(pairs, key=lambda p: p[0]):
        if merged and abs(tau - merged[-1][0]) <= TAU_MERGE_TOL:
            merged[-1][1] = merged[-1][1] + vec
        else:
            merged.append([tau, vec])
    entries = tuple(
        PulseEntry(tau, JonesVector.from_array(vec))
        for tau, vec in merged
        if np.vdot(vec, vec).real > _EMPTY_NORM2
    )
    return PulseTrain(entries)


def apply_element(train: PulseTrain, elem: OpticalElement) -> PulseTrain:
    """Propagate every pulse of ``train`` through one optical element."""
    if isinstance(elem, (HalfWave, QuarterWave)):
        m = elem.matrix()
        return PulseTrain(
            tuple(PulseEntry(e.tau, JonesVector.from_array(m @ e.jones.as_array())) for e in train)
        )
    if isinstance(elem, Birefringent):
        slow, fast = elem.axes()
        slow_phase = np.exp(1j * elem.phase)
        pieces = []
        for e in train:
            vec = e.jones.as_array()
            pieces.append((e.tau, (fast @ vec) * fast))
            pieces.append((e.tau + elem.delay, slow_phase * (slow @ vec) * slow))
        return _merge(pieces)
    raise ContractError(f"unknown optical element {elem!r}")


def prepare_pump(elements: Iterable[OpticalElement], input: JonesVector = H) -> PulseTrain:
    """Fold :func:`apply_element` over ``elements`` in beam order."""
    return reduce(apply_element, elements, PulseTrain.single(input))


def pulse_count_bounds(n_crystals: int, identical: bool) -> int:
    """Upper bound on distinct delays produced by ``n_crystals`` crystals."""
    if n_crystals < 0:
        raise ContractError("number of crystals must be non-negative")
    return n_crystals + 1 if identical else 2**n_crystals


def standard_elements(
    crystal_1: float,
    crystal_2: float,
    qwp: float,
    hwp: float,
    delay: float,
    residual_phase: float = 0.0,
) -> list[OpticalElement]:
    """Element list HWP-1(0), alpha-BBO-1, alpha-BBO-2, QWP-1, HWP-2."""
    return [
        HalfWave(0.0),
        Birefringent(delay, crystal_1),
        Birefringent(delay, crystal_2, residual_phase),
        QuarterWave(qwp),
        HalfWave(hwp),
    ]


def element_from_dict(d: dict) -> OpticalElement:
    kind = d.get("kind", "").lower()
    if kind in ("hwp", "halfwave", "half_wave"):
        return HalfWave(float(d["angle"]))
    if kind in ("qwp", "quarterwave", "quarter_wave"):
        return QuarterWave(float(d["angle"]))
    if kind in ("birefringent", "crystal", "bbo"):
        return Birefringent(float(d["delay"]), float(d["angle"]), float(d.get("phase", 0.0)))
    raise ContractError(f"unknown element kind {kind!r} in {d}")


def element_to_dict(elem: OpticalElement) -> dict:
    if isinstance(elem, HalfWave):
        return {"kind": "hwp", "angle": elem.angle}
    if isinstance(elem, QuarterWave):
        return {"kind": "qwp", "angle": elem.angle}
    return {"kind": "birefringent", "delay": elem.delay, "angle": elem.angle, "phase": elem.phase}
