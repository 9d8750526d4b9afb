"""Two-qubit density matrices and entanglement/quality metrics.

All matrices use the ordered basis HH, HV, VH, VV (signal first, idler
second).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError

BASIS_LABELS = ("HH", "HV", "VH", "VV")

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
# eigenvalues this far below the largest are rounding noise and treated as zero
NULL_TOL = 64 * np.finfo(float).eps

_SIGMA_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def ket(hh=0.0, hv=0.0, vh=0.0, vv=0.0) -> np.ndarray:
    v = np.array([hh, hv, vh, vv], dtype=complex)
    return v / np.linalg.norm(v)


def bell_phi(nu: complex) -> np.ndarray:
    """(|HH> + nu |VV>)/sqrt(2) for a unit-modulus ``nu``."""
    return ket(hh=1.0, vv=nu)


PHI_PLUS = bell_phi(1)
PHI_MINUS = bell_phi(-1)
PHI_PLUS_I = bell_phi(1j)
PHI_MINUS_I = bell_phi(-1j)
KET_HH = ket(hh=1)
KET_VV = ket(vv=1)

NAMED_KETS = {
    "phi+": PHI_PLUS,
    "phi-": PHI_MINUS,
    "phi+i": PHI_PLUS_I,
    "phi-i": PHI_MINUS_I,
    "hh": KET_HH,
    "vv": KET_VV,
}


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ContractError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ContractError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ContractError(f"density matrix trace is {np.trace(rho).real:.3g}, not 1")
        if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
            raise ContractError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_matrix(cls, m) -> "TwoQubitState":
        """Hermitize and trace-normalize ``m`` before validating it."""
        m = _hermitize(np.asarray(m, dtype=complex))
        return cls(m / np.trace(m).real)

    @classmethod
    def maximally_mixed(cls) -> "TwoQubitState":
        return cls(np.eye(4, dtype=complex) / 4)

    def to_json_dict(self) -> dict:
        return {
            "basis": list(BASIS_LABELS),
            "rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.rho],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TwoQubitState":
        if tuple(d.get("basis", BASIS_LABELS)) != BASIS_LABELS:
            raise ContractError(f"unsupported basis ordering {d.get('basis')}")
        arr = np.asarray(d["rho"], dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1])

    def __repr__(self):
        return f"TwoQubitState(purity={purity(self):.4f}, tangle={tangle(self):.4f})"


def as_rho(state) -> np.ndarray:
    if isinstance(state, TwoQubitState):
        return state.rho
    arr = np.asarray(state, dtype=complex)
    if arr.shape == (4,):
        return np.outer(arr, arr.conj()) / np.vdot(arr, arr).real
    if arr.shape != (4, 4):
        raise ContractError(f"expected a 4-vector or 4x4 matrix, got shape {arr.shape}")
    return arr


def _check_psd(rho: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(_hermitize(rho))
    if w[0] < -PSD_TOL:
        raise ContractError(f"state is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    return w


def _psd_factor(rho: np.ndarray) -> np.ndarray:
    """W with rho = W W^dag.

    Working with W instead of sqrt(rho) keeps rounding noise in null
    eigenvalues at second order in the metrics below.  Eigenvalues at the
    rounding level are zeroed: their square roots would otherwise enter
    fidelity at ~1e-8.
    """
    w, v = np.linalg.eigh(_hermitize(rho))
    w = np.where(w > NULL_TOL * w[-1], w, 0.0)
    return v * np.sqrt(w)


def mix(states: Sequence, weights: Sequence[float]) -> TwoQubitState:
    """Incoherent mixture sum_k w_k rho_k."""
    weights = np.asarray(weights, dtype=float)
    if len(states) != len(weights) or len(states) == 0:
        raise ContractError("states and weights must be non-empty and of equal length")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise ContractError(f"weights must be non-negative and sum to 1, got {weights}")
    rho = sum(w * as_rho(s) for w, s in zip(weights, states))
    return TwoQubitState(_hermitize(rho))


def concurrence(state) -> float:
    """Wootters concurrence."""
    rho = as_rho(state)
    _check_psd(rho)
    w = _psd_factor(rho)
    # singular values of W^T (sy x sy) W are the square roots of the
    # eigenvalues of rho rho_tilde
    lam = np.linalg.svd(w.T @ _SIGMA_YY @ w, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def tangle(state) -> float:
    return concurrence(state) ** 2


def purity(state) -> float:
    rho = as_rho(state)
    return float(np.real(np.trace(rho @ rho)))


def fidelity(state, target) -> float:
    """Jozsa fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    A pure ``target`` given as a 4-vector reduces to <psi|rho|psi>.
    """
    rho = as_rho(state)
    _check_psd(rho)
    tgt = np.asarray(target, dtype=complex) if not isinstance(target, TwoQubitState) else None
    if tgt is not None and tgt.shape == (4,):
        psi = tgt / np.linalg.norm(tgt)
        return float(np.clip(np.vdot(psi, rho @ psi).real, 0.0, 1.0))
    sigma = as_rho(target)
    _check_psd(sigma)
    # trace norm of W_rho^dag W_sigma equals Tr sqrt(sqrt(rho) sigma sqrt(rho))
    s = np.linalg.svd(_psd_factor(rho).conj().T @ _psd_factor(sigma), compute_uv=False)
    return float(np.clip(np.sum(s) ** 2, 0.0, 1.0))


def trace_distance(a, b) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(_hermitize(as_rho(a) - as_rho(b))))))
