import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdmux.errors import ContractError
from tdmux.pumpprep import D, H, V, JonesVector, PulseEntry, PulseTrain, prepare_pump, standard_elements
from tdmux.qmetrics import KET_HH, KET_VV, NAMED_KETS, PHI_MINUS, PHI_MINUS_I, PHI_PLUS, PHI_PLUS_I
from tdmux.spdc import TemporalMode, narrowband_validity, pair_from_pump, spdc_from_pump
from tdmux.spectral import fwhm_wavelength_to_rms_omega

T = 2.69e-12
pi = np.pi


def overlap2(a, b):
    return abs(np.vdot(a, b)) ** 2


def modes_for(c1, c2, qwp, hwp, idler_phase=0.0):
    return spdc_from_pump(prepare_pump(standard_elements(c1, c2, qwp, hwp, T)), idler_phase=idler_phase)


def test_vertical_pump_gives_hh():
    (mode,) = spdc_from_pump(PulseTrain.single(V))
    assert mode.weight == 1.0
    assert overlap2(mode.pair_state, KET_HH) == pytest.approx(1.0)


def test_diagonal_pump_gives_phi_plus():
    (mode,) = spdc_from_pump(PulseTrain.single(D))
    assert overlap2(mode.pair_state, PHI_PLUS) == pytest.approx(1.0, abs=1e-15)


def test_direct_convention_drops_swap():
    psi = pair_from_pump(1.0, 0.0, convention="direct")
    assert overlap2(psi, KET_HH) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        pair_from_pump(1.0, 0.0, convention="other")


def test_idler_phase_multiplies_vv():
    psi = pair_from_pump(1 / np.sqrt(2), 1 / np.sqrt(2), idler_phase=pi / 2)
    assert overlap2(psi, PHI_PLUS_I) == pytest.approx(1.0)


def test_prep_vii_modes():
    modes = modes_for(pi / 4, 0, 3 * pi / 4, pi / 4)
    assert [m.tau for m in modes] == pytest.approx([0, T, 2 * T])
    assert [m.weight for m in modes] == pytest.approx([0.25, 0.5, 0.25], abs=1e-15)
    for m, target in zip(modes, (PHI_MINUS_I, PHI_PLUS, PHI_PLUS_I)):
        assert overlap2(m.pair_state, target) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "setting, targets",
    [
        ((0, 0, pi / 2, pi / 8), {2: PHI_PLUS}),
        ((pi / 2, 0, pi / 2, pi / 8), {1: PHI_PLUS}),
        ((pi / 2, pi / 2, pi / 2, pi / 8), {0: PHI_PLUS}),
        ((pi / 2, pi / 4, 3 * pi / 4, pi / 8), {0: KET_HH, 1: KET_VV}),
        # A carries phi+i and B phi-i
        ((pi / 2, pi / 4, pi / 2, pi / 8), {0: PHI_PLUS_I, 1: PHI_MINUS_I}),
    ],
    ids=["i", "ii", "iii", "iv", "v"],
)
def test_preset_targets_reproduced(setting, targets):
    modes = {int(round(m.tau / T)): m for m in modes_for(*setting)}
    assert set(modes) == set(targets)
    for k, target in targets.items():
        assert overlap2(modes[k].pair_state, target) == pytest.approx(1.0, abs=1e-8)


def test_prep_viii_with_idler_phase():
    modes = modes_for(pi / 4, 0, pi / 2, 0, idler_phase=-pi / 2)
    assert [m.weight for m in modes] == pytest.approx([0.25, 0.5, 0.25])
    assert overlap2(modes[1].pair_state, PHI_MINUS) == pytest.approx(1.0, abs=1e-8)
    # outer modes are the two product states, orthogonal to each other
    outer = {round(overlap2(modes[k].pair_state, KET_HH)) for k in (0, 2)}
    assert outer == {0, 1}


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0, pi), phi=st.floats(0, 2 * pi), idler=st.floats(0, 2 * pi))
def test_orthogonal_pumps_give_orthogonal_pairs(theta, phi, idler):
    a = JonesVector(np.cos(theta), np.exp(1j * phi) * np.sin(theta))
    b = JonesVector(-np.exp(-1j * phi) * np.sin(theta), np.cos(theta))
    assert abs(a.inner(b)) < 1e-12
    for conv in ("swapped", "direct"):
        pa = pair_from_pump(a.h, a.v, conv, idler)
        pb = pair_from_pump(b.h, b.v, conv, idler)
        assert abs(np.vdot(pa, pb)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(c1=st.floats(0, pi), c2=st.floats(0, pi), q=st.floats(0, pi), h=st.floats(0, pi))
def test_weights_are_intensity_fractions(c1, c2, q, h):
    train = prepare_pump(standard_elements(c1, c2, q, h, T))
    modes = spdc_from_pump(train)
    assert sum(m.weight for m in modes) == pytest.approx(1.0, abs=1e-10)
    fractions = {e.tau: e.intensity / train.total_norm for e in train}
    for m in modes:
        assert m.weight == pytest.approx(fractions[m.tau], abs=1e-15)
        # only HH and VV are produced
        assert m.pair_state[1] == 0 and m.pair_state[2] == 0


def test_zero_intensity_entry_skipped_with_warning():
    train = PulseTrain((PulseEntry(0.0, JonesVector(0, 0)), PulseEntry(T, H)))
    with pytest.warns(UserWarning, match="zero-intensity"):
        modes = spdc_from_pump(train)
    assert [m.tau for m in modes] == [T]


def test_temporal_mode_validation():
    with pytest.raises(ContractError):
        TemporalMode(0.0, 0.5, np.array([1.0, 0, 0]))
    with pytest.raises(ContractError):
        TemporalMode(0.0, 0.5, np.array([1.0, 0, 0, 1.0]))
    with pytest.raises(ContractError):
        TemporalMode(0.0, 1.5, PHI_PLUS)


def test_named_kets_cover_table_targets():
    assert set(NAMED_KETS) == {"phi+", "phi-", "phi+i", "phi-i", "hh", "vv"}


def test_narrowband_validity():
    assert narrowband_validity(0.0, 1e12).valid
    assert not narrowband_validity(10e12, 1e12).valid
    assert narrowband_validity(10e12, 1e12).ratio == pytest.approx(10.0)
    sigma_f = fwhm_wavelength_to_rms_omega(809.06e-9, 3.9e-9)
    sigma_p = fwhm_wavelength_to_rms_omega(394.7e-9, 1.45e-9)
    check = narrowband_validity(sigma_f, sigma_p)
    assert check.ratio == pytest.approx(sigma_f / sigma_p)
    assert check.ratio == pytest.approx(0.640, abs=1e-3)
    assert check.valid
    assert not narrowband_validity(sigma_f, sigma_p, threshold=0.5).valid
    with pytest.raises(ContractError):
        narrowband_validity(1.0, 0.0)
