import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import approx_fprime

from tdmux.errors import ContractError, ConvergenceError, DegenerateDataError
from tdmux.qmetrics import KET_HH, PHI_PLUS, TwoQubitState, fidelity, purity, tangle, trace_distance
from tdmux.tomography import (
    N_PARAMS,
    PROJECTORS,
    TomographyDataset,
    expected_counts,
    linear_inversion,
    log_likelihood,
    mle_fit,
    mle_reconstruct,
    monte_carlo_uncertainty,
    negative_log_likelihood,
    params_from_state,
    params_to_state,
    project_to_physical,
    simulate_counts,
    summarize,
)

seeds = st.integers(0, 2**32 - 1)


def random_rho(rng, rank=4):
    a = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    r = a @ a.conj().T
    return r / np.trace(r).real


def noiseless(state, rate=1000.0):
    return TomographyDataset(expected_counts(state, rate, 1.0), 1.0, rate)


def test_projector_set_structure():
    assert len(PROJECTORS) == 36
    assert len(set(PROJECTORS.labels)) == 36
    np.testing.assert_allclose(np.linalg.norm(PROJECTORS.kets, axis=1), 1.0, atol=1e-15)
    # informationally complete: the projectors span all 16 Hermitian directions
    flat = PROJECTORS.projectors.reshape(36, 16)
    assert np.linalg.matrix_rank(flat) == 16
    for group in PROJECTORS.basis_groups:
        assert len(group) == 4
        np.testing.assert_allclose(PROJECTORS.projectors[group].sum(axis=0), np.eye(4), atol=1e-15)
    assert len(PROJECTORS.basis_groups) == 9


def test_expected_counts_examples():
    mean = expected_counts(PHI_PLUS, rate=1000.0, exposure=1.0)
    assert mean[PROJECTORS.index("H", "H")] == pytest.approx(500.0)
    assert mean[PROJECTORS.index("+", "-")] == pytest.approx(0.0, abs=1e-12)
    bg = expected_counts(PHI_PLUS, rate=0.0, exposure=2.0, background_rate=4.0)
    np.testing.assert_allclose(bg, 2.0)


def test_simulated_totals_match_count_rate():
    ds = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=1)
    # each complete basis collects the full rate, so total / (9 T) is the count rate
    rate = ds.total / (9 * ds.exposure)
    assert rate == pytest.approx(13.9 + 0.34, rel=0.02)


def test_simulation_deterministic_per_seed():
    a = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=7)
    b = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=7)
    c = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=8)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_linear_inversion_exact_examples():
    np.testing.assert_allclose(
        linear_inversion(noiseless(PHI_PLUS)), np.outer(PHI_PLUS, PHI_PLUS.conj()), atol=1e-10
    )
    np.testing.assert_allclose(linear_inversion(noiseless(np.eye(4) / 4)), np.eye(4) / 4, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(seed=seeds)
def test_linear_inversion_identity_on_expectations(seed):
    rho = random_rho(np.random.default_rng(seed))
    assert trace_distance(linear_inversion(noiseless(rho)), rho) < 1e-8


def test_linear_inversion_noisy_is_hermitian_unit_trace():
    ds = simulate_counts(PHI_PLUS, 2.0, 10.0, 0.0, seed=3)
    rho = linear_inversion(ds)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-14)
    assert np.trace(rho).real == pytest.approx(1.0)
    # with this few counts the raw estimate leaves the physical set
    assert np.linalg.eigvalsh(rho)[0] < 0
    assert purity(project_to_physical(rho)) <= 1.0


def test_zero_counts_are_degenerate():
    ds = TomographyDataset(np.zeros(36))
    with pytest.raises(DegenerateDataError):
        linear_inversion(ds)
    with pytest.raises(DegenerateDataError):
        mle_reconstruct(ds)


def test_mle_noiseless_phi_plus():
    state = mle_reconstruct(noiseless(PHI_PLUS))
    assert fidelity(state, PHI_PLUS) >= 0.9999


def test_mle_maximally_mixed_high_counts():
    ds = simulate_counts(np.eye(4) / 4, 4e6, 1.0, seed=11)
    assert ds.counts.mean() == pytest.approx(1e6, rel=1e-2)
    assert purity(mle_reconstruct(ds)) == pytest.approx(0.25, abs=0.01)


@pytest.mark.parametrize("model", ["poisson", "multinomial"])
def test_mle_nominal_rates_within_error_bars(model):
    signal = TwoQubitState.from_ket(PHI_PLUS)
    ds = simulate_counts(signal, 13.9, 360.0, 0.34, seed=42)
    fit = mle_fit(ds, model=model)
    mc = monte_carlo_uncertainty(ds, 100, seed=1, target=PHI_PLUS, model=model)
    f = 0.34 / (0.34 + 13.9)
    truth = tangle((1 - f) * signal.rho + f * np.eye(4) / 4)
    sigma = mc["tangle"].spread
    assert 0.002 < sigma < 0.03
    assert abs(tangle(fit.state) - truth) < 4 * sigma


@settings(max_examples=20, deadline=None)
@given(seed=seeds, model=st.sampled_from(["poisson", "multinomial"]))
def test_mle_beats_projected_linear_inversion(seed, model):
    rng = np.random.default_rng(seed)
    ds = simulate_counts(random_rho(rng, rank=int(rng.integers(1, 5))), 5.0, 60.0, 0.3, seed=seed)
    fit = mle_fit(ds, model=model)
    start = project_to_physical(linear_inversion(ds))
    assert fit.log_likelihood >= log_likelihood(start, ds, model) - 1e-9
    # the result always satisfies the state invariants
    TwoQubitState(fit.state.rho)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, model=st.sampled_from(["poisson", "multinomial"]))
def test_gradient_matches_central_differences(seed, model):
    rng = np.random.default_rng(seed)
    ds = simulate_counts(random_rho(rng), 10.0, 30.0, 0.5, seed=seed)
    x = rng.normal(size=N_PARAMS)
    _, grad = negative_log_likelihood(x, ds, model)
    h = 1e-6
    fd = np.array([
        (negative_log_likelihood(x + h * e, ds, model)[0] - negative_log_likelihood(x - h * e, ds, model)[0]) / (2 * h)
        for e in np.eye(N_PARAMS)
    ])
    assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) < 1e-5
    # forward differences from scipy agree at their own lower accuracy
    fwd = approx_fprime(x, lambda p: negative_log_likelihood(p, ds, model)[0], 1e-7)
    assert np.linalg.norm(grad - fwd) / np.linalg.norm(fd) < 1e-3


def test_parameterization_round_trip():
    rng = np.random.default_rng(5)
    rho = random_rho(rng)
    back = params_to_state(params_from_state(TwoQubitState(rho), floor=0.0))
    np.testing.assert_allclose(back.rho, rho, atol=1e-12)


def test_iteration_cap_raises_with_best_iterate():
    ds = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=2)
    with pytest.raises(ConvergenceError) as info:
        mle_fit(ds, max_iter=1)
    assert isinstance(info.value.best, TwoQubitState)
    assert info.value.diagnostics["n_iter"] >= 1
    assert "grad_norm" in info.value.diagnostics


def test_unknown_model_rejected():
    with pytest.raises(ContractError):
        mle_fit(noiseless(PHI_PLUS), model="gaussian")


def test_mc_deterministic_and_worker_independent():
    ds = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=4)
    a = monte_carlo_uncertainty(ds, 100, seed=9, target=PHI_PLUS)
    b = monte_carlo_uncertainty(ds, 100, seed=9, target=PHI_PLUS)
    c = monte_carlo_uncertainty(ds, 100, seed=9, target=PHI_PLUS, n_workers=2)
    for key in ("tangle", "purity", "fidelity"):
        np.testing.assert_array_equal(a[key].samples, b[key].samples)
        np.testing.assert_array_equal(a[key].samples, c[key].samples)


def test_mc_spread_shrinks_with_counts():
    base = TomographyDataset(expected_counts(PHI_PLUS, 13.9, 360.0, 0.34), 360.0)
    small = monte_carlo_uncertainty(base, 100, seed=0)["purity"].spread
    big = monte_carlo_uncertainty(base.scaled(100.0), 100, seed=0)["purity"].spread
    # Poisson scaling: 100 times the counts gives a tenth of the spread
    assert big / small == pytest.approx(0.1, rel=0.35)


def test_mc_zero_tangle_lower_bar_clipped():
    ds = simulate_counts(KET_HH, 7.0, 360.0, 0.5, seed=6)
    mc = monte_carlo_uncertainty(ds, 100, seed=0)
    assert mc["tangle"].median == 0.0
    assert mc["tangle"].minus == 0.0
    assert mc["tangle"].plus >= 0.0


def test_mc_needs_enough_samples():
    with pytest.raises(ContractError):
        monte_carlo_uncertainty(noiseless(PHI_PLUS), 50)


def test_summarize_percentiles():
    s = summarize(np.arange(101, dtype=float))
    assert (s.median, s.plus, s.minus) == (50.0, 34.0, 34.0)
    assert s.spread == 34.0


def test_csv_round_trip_and_validation(tmp_path):
    ds = simulate_counts(PHI_PLUS, 13.9, 360.0, 0.34, seed=1)
    path = ds.to_csv(tmp_path / "counts.csv")
    header = path.read_text().splitlines()[0]
    assert header == "setting_a,setting_b,counts,exposure_s"
    back = TomographyDataset.from_csv(path)
    np.testing.assert_array_equal(back.counts, ds.counts)
    assert back.exposure == ds.exposure

    lines = path.read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(lines[:-1]))
    with pytest.raises(ContractError, match="missing"):
        TomographyDataset.from_csv(tmp_path / "short.csv")
    mixed = lines[:-1] + [lines[-1].rsplit(",", 1)[0] + ",1.0"]
    (tmp_path / "mixed.csv").write_text("\n".join(mixed))
    with pytest.raises(ContractError, match="exposure"):
        TomographyDataset.from_csv(tmp_path / "mixed.csv")


def test_dataset_validation():
    with pytest.raises(ContractError):
        TomographyDataset(np.ones(35))
    with pytest.raises(ContractError):
        TomographyDataset(-np.ones(36))
    with pytest.raises(ContractError):
        TomographyDataset(np.ones(36), exposure=0.0)
