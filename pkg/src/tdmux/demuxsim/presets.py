"""The eight pump preparations and their target pair states.

Angles are for alpha-BBO-1, alpha-BBO-2, QWP-1 and HWP-2 (HWP-1 sits at 0).
Targets name the expected pair state in channels A, B, C (``None`` marks a
channel with no pump pulse).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import ContractError
from ..pumpprep import prepare_pump, standard_elements
from ..qmetrics import NAMED_KETS
from ..spdc import spdc_from_pump

pi = np.pi


@dataclass(frozen=True)
class Preparation:
    name: str
    crystal_1: float
    crystal_2: float
    qwp: float
    hwp: float
    targets: tuple
    # which free parameter absorbs the uncharacterized inter-crystal phase
    fit: str | None = None
    exposure: float = 360.0


PREPARATIONS = {
    p.name: p
    for p in (
        Preparation("i", 0, 0, pi / 2, pi / 8, (None, None, "phi+"), exposure=180.0),
        Preparation("ii", pi / 2, 0, pi / 2, pi / 8, (None, "phi+", None), exposure=180.0),
        Preparation("iii", pi / 2, pi / 2, pi / 2, pi / 8, ("phi+", None, None), exposure=180.0),
        Preparation("iv", pi / 2, pi / 4, 3 * pi / 4, pi / 8, ("hh", "vv", None)),
        # A carries phi+i and B phi-i
        Preparation("v", pi / 2, pi / 4, pi / 2, pi / 8, ("phi+i", "phi-i", None)),
        Preparation("vi", pi / 4, 0, 3 * pi / 4, 3 * pi / 8, ("phi-i", "vv", "phi+i"), fit="hwp2"),
        Preparation("vii", pi / 4, 0, 3 * pi / 4, pi / 4, ("phi-i", "phi+", "phi+i"), fit="hwp2"),
        Preparation("viii", pi / 4, 0, pi / 2, 0, ("vv", "phi-", "hh"), fit="idler"),
    )
}


def get_preparation(name: str) -> Preparation:
    key = str(name).strip().lower().strip("()")
    if key not in PREPARATIONS:
        raise ContractError(f"unknown preparation {name!r}; choose from {sorted(PREPARATIONS)}")
    return PREPARATIONS[key]


def channel_index(tau: float, delay: float) -> int:
    k = int(round(tau / delay))
    if abs(tau - k * delay) > 1e-9 * delay:
        raise ContractError(f"pulse at {tau:.4e} s is not on the {delay:.4e} s channel grid")
    return k


def target_overlap(prep: Preparation, delay: float, hwp: float, idler_phase: float, convention: str = "swapped") -> float:
    """Sum over targeted channels of |<target|pair state>|^2."""
    train = prepare_pump(standard_elements(prep.crystal_1, prep.crystal_2, prep.qwp, hwp, delay))
    modes = {channel_index(m.tau, delay): m for m in spdc_from_pump(train, convention, idler_phase)}
    total = 0.0
    for k, name in enumerate(prep.targets):
        if name is not None and k in modes:
            total += abs(np.vdot(NAMED_KETS[name], modes[k].pair_state)) ** 2
    return total


def _fit_angle(objective, start: float, period: float) -> float:
    grid = start + np.linspace(-period / 2, period / 2, 361)
    values = np.array([objective(x) for x in grid])
    best = values.max()
    # among equally good grid points take the one nearest the tabulated setting
    candidates = grid[values >= best - 1e-9]
    x0 = candidates[np.argmin(np.abs(candidates - start))]
    step = period / 360

    # the objective is flat to rounding near its peak, so locate the zero of
    # its central-difference slope instead of maximizing it directly
    def slope(x, h=1e-5):
        return (objective(x + h) - objective(x - h)) / (2 * h)

    lo, hi = x0 - step, x0 + step
    if slope(lo) > 0 > slope(hi):
        return float(brentq(slope, lo, hi, xtol=1e-15))
    return float(x0)


def fit_preparation(prep: Preparation, delay: float, convention: str = "swapped") -> tuple[float, float]:
    """Return (HWP-2 angle, idler phase) for ``prep``.

    Preparations flagged for fitting get the free parameter tuned to best
    match their target states; others keep the tabulated angle and zero
    idler phase.
    """
    if prep.fit == "hwp2":
        hwp = _fit_angle(lambda x: target_overlap(prep, delay, x, 0.0, convention), prep.hwp, pi)
        return hwp, 0.0
    if prep.fit == "idler":
        phase = _fit_angle(lambda x: target_overlap(prep, delay, prep.hwp, x, convention), 0.0, 2 * pi)
        return prep.hwp, phase
    return prep.hwp, 0.0
