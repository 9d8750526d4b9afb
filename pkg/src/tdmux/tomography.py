"""Two-photon polarization tomography with 36 projective settings.

Each photon is projected on one of H, V, +, -, +i, -i, giving 36 rank-one
two-qubit projectors.  They fall into nine complete bases (one single-qubit
basis per photon), each summing to the identity.

Reconstruction follows the usual route: a linear least-squares inversion
provides a starting point, then the Poisson (or per-basis multinomial)
likelihood is maximized over physical states written as rho = T^dag T / Tr
with T lower triangular.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import ContractError, ConvergenceError, DegenerateDataError
from .qmetrics import TwoQubitState, as_rho, fidelity, purity, tangle

log = logging.getLogger(__name__)

_S = 1 / np.sqrt(2)
SINGLE_QUBIT_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "+i": np.array([_S, 1j * _S], dtype=complex),
    "-i": np.array([_S, -1j * _S], dtype=complex),
}
SETTING_LABELS = tuple(SINGLE_QUBIT_KETS)
_SINGLE_BASES = (("H", "V"), ("+", "-"), ("+i", "-i"))

LIKELIHOODS = ("poisson", "multinomial")


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    labels: tuple[tuple[str, str], ...]
    kets: np.ndarray  # (36, 4)

    @classmethod
    def standard(cls) -> "ProjectorSet":
        labels = tuple(product(SETTING_LABELS, SETTING_LABELS))
        kets = np.array([np.kron(SINGLE_QUBIT_KETS[a], SINGLE_QUBIT_KETS[b]) for a, b in labels])
        return cls(labels, kets)

    @property
    def projectors(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.kets, self.kets.conj())

    @property
    def basis_groups(self) -> list[list[int]]:
        """Indices of the nine complete bases."""
        index = {lab: k for k, lab in enumerate(self.labels)}
        return [
            [index[(a, b)] for a in ba for b in bb]
            for ba, bb in product(_SINGLE_BASES, _SINGLE_BASES)
        ]

    def index(self, a: str, b: str) -> int:
        return self.labels.index((a, b))

    def probabilities(self, state) -> np.ndarray:
        rho = as_rho(state)
        return np.real(np.einsum("ki,ij,kj->k", self.kets.conj(), rho, self.kets))

    def __len__(self):
        return len(self.labels)


PROJECTORS = ProjectorSet.standard()


@dataclass
class TomographyDataset:
    """Coincidence counts for the 36 settings in ``PROJECTORS`` order.

    Counts may be real-valued, which is how noiseless expectation data are
    represented.
    """

    counts: np.ndarray
    exposure: float = 1.0
    mean_rate: float | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.shape != (len(PROJECTORS),):
            raise ContractError(f"expected {len(PROJECTORS)} counts, got shape {self.counts.shape}")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise ContractError("counts must be finite and non-negative")
        if not self.exposure > 0:
            raise ContractError("exposure must be positive")

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def scaled(self, factor: float) -> "TomographyDataset":
        return TomographyDataset(self.counts * factor, self.exposure * factor, self.mean_rate)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["setting_a", "setting_b", "counts", "exposure_s"])
            for (a, b), n in zip(PROJECTORS.labels, self.counts):
                w.writerow([a, b, int(n) if float(n).is_integer() else repr(float(n)), repr(self.exposure)])
        return path

    @classmethod
    def from_csv(cls, path) -> "TomographyDataset":
        counts = {}
        exposures = set()
        with Path(path).open(newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["setting_a"].strip(), row["setting_b"].strip())
                if key not in PROJECTORS.labels:
                    raise ContractError(f"unknown setting {key} in {path}")
                if key in counts:
                    raise ContractError(f"duplicate setting {key} in {path}")
                counts[key] = float(row["counts"])
                exposures.add(float(row["exposure_s"]))
        missing = [lab for lab in PROJECTORS.labels if lab not in counts]
        if missing:
            raise ContractError(f"dataset {path} is missing settings {missing}")
        if len(exposures) != 1:
            raise ContractError(f"dataset {path} mixes exposures {sorted(exposures)}")
        return cls(np.array([counts[lab] for lab in PROJECTORS.labels]), exposures.pop())


def expected_counts(state, rate: float, exposure: float, background_rate: float = 0.0) -> np.ndarray:
    """Mean counts: exposure * (rate * Tr(rho P) + background_rate / 4)."""
    if rate < 0 or exposure <= 0 or background_rate < 0:
        raise ContractError("rate and background must be non-negative, exposure positive")
    p = np.clip(PROJECTORS.probabilities(state), 0.0, None)
    return exposure * (rate * p + background_rate / 4.0)


def simulate_counts(
    state,
    rate: float,
    exposure: float,
    background_rate: float = 0.0,
    seed=None,
) -> TomographyDataset:
    """Poisson counts for every setting; white-noise background at ``background_rate``."""
    mean = expected_counts(state, rate, exposure, background_rate)
    rng = np.random.default_rng(seed)
    return TomographyDataset(rng.poisson(mean).astype(float), exposure, rate)


def _normalized_probabilities(dataset: TomographyDataset) -> np.ndarray:
    p = np.zeros(len(PROJECTORS))
    for group in PROJECTORS.basis_groups:
        tot = dataset.counts[group].sum()
        if tot > 0:
            p[group] = dataset.counts[group] / tot
    return p


_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
_PAULI2 = np.array([np.kron(a, b) for a in _PAULI for b in _PAULI])


def linear_inversion(dataset: TomographyDataset) -> np.ndarray:
    """Least-squares Hermitian, unit-trace matrix reproducing the basis-normalized data.

    The result need not be positive semidefinite; that case is logged at
    debug level.
    """
    if dataset.total <= 0:
        raise DegenerateDataError("all counts are zero")
    p = _normalized_probabilities(dataset)
    # Tr(rho P_k) = 1/4 sum_m r_m Tr(S_m P_k) with r_0 = 1
    design = np.real(np.einsum("ki,mij,kj->km", PROJECTORS.kets.conj(), _PAULI2, PROJECTORS.kets)) / 4
    groups_present = np.zeros(len(PROJECTORS), dtype=bool)
    for group in PROJECTORS.basis_groups:
        groups_present[group] = dataset.counts[group].sum() > 0
    rhs = p[groups_present] - design[groups_present, 0]
    r, *_ = np.linalg.lstsq(design[groups_present, 1:], rhs, rcond=None)
    rho = (_PAULI2[0] + np.einsum("m,mij->ij", r, _PAULI2[1:])) / 4
    rho = 0.5 * (rho + rho.conj().T)
    if np.linalg.eigvalsh(rho)[0] < -1e-12:
        log.debug("linear inversion is not positive semidefinite (min eigenvalue %.3g)",
                    np.linalg.eigvalsh(rho)[0])
    return rho


def project_to_physical(rho: np.ndarray) -> TwoQubitState:
    """Clip negative eigenvalues and renormalize."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise DegenerateDataError("matrix has no positive part")
    return TwoQubitState.from_matrix((v * w) @ v.conj().T)


# --- likelihood on the triangular parameterization -------------------------

_TRIL = np.tril_indices(4, -1)
N_PARAMS = 16


def params_to_t(params: np.ndarray) -> np.ndarray:
    """16 reals -> lower-triangular T (real diagonal, complex below)."""
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = params[:4]
    t[_TRIL] = params[4:10] + 1j * params[10:16]
    return t


def t_to_params(t: np.ndarray) -> np.ndarray:
    return np.concatenate([np.real(np.diag(t)), np.real(t[_TRIL]), np.imag(t[_TRIL])])


def params_from_state(state, scale: float = 1.0, floor: float = 1e-6) -> np.ndarray:
    """Parameters whose T^dag T equals ``scale`` times a slightly mixed ``state``."""
    rho = as_rho(state)
    rho = (1 - floor) * rho + floor * np.eye(4) / 4
    j = np.eye(4)[::-1]
    # rho = T^dag T with T lower triangular: Cholesky of the index-reversed matrix
    low = np.linalg.cholesky(j @ (scale * rho) @ j)
    t = (j @ low @ j).conj().T
    return t_to_params(t)


def params_to_state(params: np.ndarray) -> TwoQubitState:
    t = params_to_t(params)
    m = t.conj().T @ t
    return TwoQubitState.from_matrix(m)


def negative_log_likelihood(params: np.ndarray, dataset: TomographyDataset, model: str = "poisson"):
    """Objective and analytic gradient, both divided by the total count.

    Poisson:      sum_k mu_k - n_k log mu_k, mu_k = <k|T^dag T|k>.
    Multinomial:  -sum_k n_k log mu_k + N log Tr(T^dag T)  (per-basis
                  normalization; each basis sums to the identity).
    """
    n = dataset.counts
    total = dataset.total
    t = params_to_t(params)
    tk = PROJECTORS.kets @ t.T  # row k is T|k>
    mu = np.sum(np.abs(tk) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmu = np.where(n > 0, np.log(mu), 0.0)
        ratio = np.where(n > 0, n / mu, 0.0)
    if model == "poisson":
        value = np.sum(mu) - np.sum(n * logmu)
        w = 1.0 - ratio
        extra = 0.0
    elif model == "multinomial":
        trace = np.sum(np.abs(t) ** 2)
        value = -np.sum(n * logmu) + total * np.log(trace)
        w = -ratio
        extra = total / trace
    else:
        raise ContractError(f"unknown likelihood model {model!r}; use one of {LIKELIHOODS}")
    g = (PROJECTORS.kets.T * w) @ PROJECTORS.kets.conj() + extra * np.eye(4)
    m = t @ g
    grad_t = 2.0 * m
    grad = np.concatenate([np.real(np.diag(grad_t)), np.real(grad_t[_TRIL]), np.imag(grad_t[_TRIL])])
    return value / total, grad / total


def log_likelihood(state, dataset: TomographyDataset, model: str = "poisson") -> float:
    """Log-likelihood of ``state`` (additive constants dropped).

    For the Poisson model the intensity is profiled out: with 36 projectors
    summing to 9 I the best intensity is N/9.
    """
    rho = as_rho(state)
    p = np.clip(PROJECTORS.probabilities(rho), 0.0, None)
    n = dataset.counts
    if np.any((p == 0) & (n > 0)):
        return -np.inf
    with np.errstate(divide="ignore"):
        logp = np.where(n > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
    if model == "poisson":
        intensity = dataset.total / 9.0
        mu = intensity * p
        return float(np.sum(n * (np.log(intensity) + logp)) - np.sum(mu))
    if model == "multinomial":
        return float(np.sum(n * logp))
    raise ContractError(f"unknown likelihood model {model!r}")


@dataclass
class MLEResult:
    state: TwoQubitState
    log_likelihood: float
    n_iter: int
    grad_norm: float
    converged: bool
    message: str
    params: np.ndarray = field(repr=False)

    def diagnostics(self) -> dict:
        return {
            "log_likelihood": self.log_likelihood,
            "n_iter": self.n_iter,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "message": self.message,
        }


REL_TOL = 1e-12
GRAD_TOL = 1e-8


def mle_fit(
    dataset: TomographyDataset,
    model: str = "poisson",
    max_iter: int = 5000,
    initial=None,
) -> MLEResult:
    """Maximum-likelihood physical state with convergence diagnostics.

    Stops when the relative objective change falls below 1e-12 or the
    gradient norm below 1e-8 (objective and gradient are per total count).
    Raises :class:`ConvergenceError` if neither happens within ``max_iter``
    iterations.
    """
    if dataset.total <= 0:
        raise DegenerateDataError("all counts are zero")
    if model not in LIKELIHOODS:
        raise ContractError(f"unknown likelihood model {model!r}")
    if initial is None:
        initial = project_to_physical(linear_inversion(dataset))
    # with the Poisson model Tr(T^dag T) estimates counts per basis; work per total count
    scale = 1.0 / 9.0 if model == "poisson" else 1.0
    x = params_from_state(initial, scale=scale, floor=1e-6)
    ds = TomographyDataset(dataset.counts, dataset.exposure, dataset.mean_rate)
    # objective is invariant under n -> c n, mu -> c mu; normalizing keeps mu = O(1)
    ds.counts = dataset.counts / dataset.total

    def fun(p):
        return negative_log_likelihood(p, ds, model)

    n_iter = 0
    converged = False
    message = ""
    best = x
    # L-BFGS-B can stop on a failed line search close to the optimum;
    # restarting from the best iterate resets its curvature memory.
    for _ in range(20):
        start_value = fun(best)[0]
        res = minimize(
            fun, best, jac=True, method="L-BFGS-B",
            options={"maxiter": max(max_iter - n_iter, 1), "ftol": REL_TOL, "gtol": GRAD_TOL, "maxcor": 30},
        )
        n_iter += int(res.nit)
        best = res.x
        message = str(res.message)
        improvement = abs(start_value - res.fun) / max(abs(res.fun), 1.0)
        if res.success or np.linalg.norm(res.jac) < GRAD_TOL or improvement < REL_TOL:
            converged = True
            break
        if n_iter >= max_iter:
            break
    value, grad = fun(best)
    gnorm = float(np.linalg.norm(grad))
    state = params_to_state(best)
    diag = {"n_iter": n_iter, "grad_norm": gnorm, "objective": value, "message": message}
    if not converged:
        raise ConvergenceError(
            f"MLE did not converge in {max_iter} iterations (grad norm {gnorm:.3g})",
            best=state,
            diagnostics=diag,
        )
    return MLEResult(
        state=state,
        log_likelihood=log_likelihood(state, dataset, model),
        n_iter=n_iter,
        grad_norm=gnorm,
        converged=True,
        message=message,
        params=best,
    )


def mle_reconstruct(dataset: TomographyDataset, model: str = "poisson", max_iter: int = 5000) -> TwoQubitState:
    return mle_fit(dataset, model=model, max_iter=max_iter).state


# --- Monte Carlo error bars ----------------------------------------------

@dataclass
class MetricSummary:
    median: float
    plus: float
    minus: float
    samples: np.ndarray = field(repr=False)

    @property
    def spread(self) -> float:
        """Half the 16th-84th percentile range."""
        return 0.5 * (self.plus + self.minus)

    def to_dict(self) -> dict:
        return {"median": self.median, "plus": self.plus, "minus": self.minus}


def summarize(samples) -> MetricSummary:
    samples = np.asarray(samples, dtype=float)
    lo, med, hi = np.percentile(samples, [16, 50, 84])
    return MetricSummary(float(med), float(hi - med), float(med - lo), samples)


def _mc_sample(args):
    counts, exposure, seed, model, target = args
    rng = np.random.default_rng(seed)
    resampled = TomographyDataset(rng.poisson(counts).astype(float), exposure)
    try:
        state = mle_reconstruct(resampled, model=model)
    except (ConvergenceError, DegenerateDataError):
        return None
    out = (tangle(state), purity(state))
    if target is not None:
        out += (fidelity(state, target),)
    return out


def monte_carlo_uncertainty(
    dataset: TomographyDataset,
    n_samples: int = 200,
    seed: int = 0,
    target=None,
    model: str = "poisson",
    n_workers: int = 1,
) -> dict[str, MetricSummary]:
    """Poisson-resample the counts and refit to get metric distributions.

    Sample ``i`` draws from ``default_rng(seed + i)``, so results do not
    depend on ``n_workers``.  Returns median with 84th/16th percentile
    offsets for tangle, purity and (if ``target`` is given) fidelity.
    """
    if n_samples < 100:
        raise ContractError("Monte Carlo needs at least 100 samples")
    tgt = None if target is None else (target.rho if isinstance(target, TwoQubitState) else np.asarray(target))
    jobs = [(dataset.counts, dataset.exposure, seed + i, model, tgt) for i in range(n_samples)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_mc_sample, jobs, chunksize=max(1, n_samples // (4 * n_workers))))
    else:
        results = [_mc_sample(j) for j in jobs]
    ok = [r for r in results if r is not None]
    failed = n_samples - len(ok)
    if failed > 0.1 * n_samples:
        raise ConvergenceError(f"{failed} of {n_samples} Monte Carlo reconstructions failed")
    arr = np.array(ok)
    out = {"tangle": summarize(arr[:, 0]), "purity": summarize(arr[:, 1])}
    if target is not None:
        out["fidelity"] = summarize(arr[:, 2])
    return out
