import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmpass.beamforming import rate_report, zf_precoder
from mmpass.channel import effective_channel, waveguide_vector, wireless_gain
from mmpass.cmt import radiation_profile
from mmpass.errors import LayoutError
from mmpass.scenario import Regime, UserLayout, default_scenario, sample_user_layout

LAM = 1.070687e-2


def spaced(n, start=1.0, gap=0.05):
    return start + gap * np.arange(n)


def test_gain_directly_above_user():
    h = wireless_gain(4.0, 4.0, 0.0, 2.5, LAM)
    assert abs(h) == pytest.approx(LAM / (10 * math.pi))


def test_gain_at_five_metres():
    h = wireless_gain(0.0, 3.0, 4.0, 0.0, 1.0707e-2)
    assert abs(h) == pytest.approx(1.0707e-2 / (20 * math.pi), rel=1e-14)
    # lambda / (20 pi) = 1.70407e-4; the rounded 1.7043e-4 only holds to rel 2e-4
    assert abs(h) == pytest.approx(1.7043e-4, rel=2e-4)


@given(st.floats(0.5, 50))
def test_gain_inverse_distance(r):
    h1 = wireless_gain(0.0, r, 0.0, 0.0, LAM)
    h2 = wireless_gain(0.0, 2 * r, 0.0, 0.0, LAM)
    assert abs(h2) == pytest.approx(abs(h1) / 2)


def test_waveguide_vector_properties():
    rho = np.array([0.5, 0.7, 1.0])
    beta = 999.0
    np.testing.assert_allclose(waveguide_vector(rho, beta, np.zeros(3)), rho)
    x = np.array([1.0, 2.3, 7.7])
    g = waveguide_vector(rho, beta, x)
    np.testing.assert_allclose(np.abs(g), rho)
    shift = 0.123
    np.testing.assert_allclose(waveguide_vector(rho, beta, x + shift), g * np.exp(-1j * beta * shift), atol=1e-12)


def test_reduced_single_pa_form():
    cfg = default_scenario(Regime.NON_LEAKAGE, users=UserLayout((5.0, 11.0), (4.0, 6.0)))
    x = np.array([5.2, 10.8])
    ch = effective_channel(cfg, x)
    lam = cfg.wavelength
    for m in range(2):
        for k in range(2):
            R = ch.distances[m, k]
            expect = lam / (4 * math.pi * R) * np.exp(-1j * (2 * math.pi * R / lam + cfg.betas[m] * x[m]))
            assert ch.H_eff[k, m] == pytest.approx(expect, abs=1e-15)


def test_composition_matches_double_sum():
    cfg = default_scenario(Regime.WEAK_LEAKAGE, group_sizes=(6, 6), users=sample_user_layout(11))
    x = spaced(12, start=3.0, gap=0.37)
    ch = effective_channel(cfg, x)
    prof = radiation_profile(cfg)
    users = cfg.users
    lam, k0 = cfg.wavelength, cfg.wavenumber
    scale = np.max(np.abs(ch.H_eff))
    for k in range(2):
        for m in range(2):
            acc = 0j
            for n in range(12):
                R = math.sqrt((x[n] - users.along_axis[k]) ** 2 + users.lateral[k] ** 2 + 2.5**2)
                acc += lam / (4 * math.pi * R) * prof.rho[n, m] * np.exp(-1j * (k0 * R + cfg.betas[m] * x[n]))
            assert abs(ch.H_eff[k, m] - acc) <= 1e-10 * scale
    np.testing.assert_allclose(ch.H_eff, ch.H.conj().T @ ch.G, rtol=0, atol=1e-12 * scale)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_regime_degeneracy(seed):
    users = sample_user_layout(seed)
    nl = default_scenario(Regime.NON_LEAKAGE, group_sizes=(3, 3), users=users)
    wl = default_scenario(Regime.WEAK_LEAKAGE, group_sizes=(3, 3), users=users, unmatched_field_selectivity=0.0)
    x = np.sort(np.random.default_rng(seed).uniform(0, 19, 6)) + np.arange(6) * 0.006
    np.testing.assert_allclose(effective_channel(nl, x).H_eff, effective_channel(wl, x).H_eff, rtol=0, atol=1e-12)


def test_user_swap_permutes_rows():
    a = UserLayout((5.0, 11.0), (4.0, 6.0))
    b = UserLayout((11.0, 5.0), (6.0, 4.0))
    x = np.array([5.1, 10.9])
    ha = effective_channel(default_scenario(users=a), x).H_eff
    hb = effective_channel(default_scenario(users=b), x).H_eff
    np.testing.assert_array_equal(ha[::-1], hb)


def test_global_column_phase_leaves_rate_unchanged():
    cfg = default_scenario(Regime.WEAK_LEAKAGE, users=sample_user_layout(1))
    H = effective_channel(cfg, np.array([6.0, 12.0])).H_eff
    P, s2 = cfg.power.max_power, cfg.power.noise_power
    base = rate_report(H, zf_precoder(H, P).W, s2).sum_rate
    Hp = H * np.exp(1j * np.array([0.4, -2.1]))
    assert rate_report(Hp, zf_precoder(Hp, P).W, s2).sum_rate == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize(
    "x",
    [np.array([12.0, 6.0]), np.array([6.0, 6.001]), np.array([-0.1, 6.0]), np.array([6.0, 20.5]), np.array([1.0, 2.0, 3.0])],
)
def test_bad_layouts_rejected(x):
    with pytest.raises(LayoutError):
        effective_channel(default_scenario(), x)


def test_distances_at_least_pa_height():
    ch = effective_channel(default_scenario(), np.array([6.0, 12.0]))
    assert np.all(ch.distances >= 2.5)
