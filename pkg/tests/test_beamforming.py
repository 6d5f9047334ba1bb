import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmpass.beamforming import (
    compute_sinr,
    mrt_waterfilling,
    rate_report,
    sum_rate,
    water_filling,
    wmmse_precoder,
    zf_precoder,
)
from mmpass.errors import DegenerateChannelError, NearSingularChannelError


def random_channel(seed, K=2, M=2, scale=1e-4):
    rng = np.random.default_rng(seed)
    return scale * (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M)))


def sinr_oracle(H, W, noise):
    # received y_k = sum_j (h_k^H w_j) s_j + n_k, evaluated term by term
    K = H.shape[0]
    out = []
    for k in range(K):
        terms = [sum(H[k, m] * W[m, j] for m in range(H.shape[1])) for j in range(K)]
        sig = abs(terms[k]) ** 2
        intf = sum(abs(terms[j]) ** 2 for j in range(K) if j != k)
        out.append(sig / (intf + noise))
    return np.array(out)


def test_zero_beamformer_gives_zero_sinr():
    np.testing.assert_array_equal(compute_sinr(random_channel(0), np.zeros((2, 2)), 1e-12), [0.0, 0.0])


@pytest.mark.parametrize("seed", range(5))
def test_sinr_matches_signal_model(seed):
    H = random_channel(seed, K=2, M=3)
    W = random_channel(seed + 100, K=3, M=2, scale=1.0)
    np.testing.assert_allclose(compute_sinr(H, W, 1e-9), sinr_oracle(H, W, 1e-9), rtol=1e-12)


def test_sinr_batched_matches_loop():
    Hs = np.stack([random_channel(s) for s in range(4)])
    W = random_channel(9, scale=1.0)
    batched = compute_sinr(Hs, W, 1e-9)
    for i in range(4):
        np.testing.assert_allclose(batched[i], compute_sinr(Hs[i], W, 1e-9))


def test_sum_rate_examples():
    assert sum_rate([1.0, 1.0]) == pytest.approx(2.0)
    assert sum_rate([0.0, 0.0]) == 0.0
    assert sum_rate([3.0, 1.0]) == pytest.approx(3.0)


def test_rate_report_consistency():
    H = random_channel(3)
    W = zf_precoder(H, 1.0).W
    rep = rate_report(H, W, 1e-9, min_sinr=1.0)
    np.testing.assert_allclose(rep.rates, np.log2(1 + rep.sinr))
    assert rep.sum_rate == pytest.approx(rep.rates.sum())
    assert rep.feasible == bool(np.all(rep.sinr >= 1.0))


def test_orthogonal_mrt_has_no_interference():
    H = np.array([[2e-4, 0.0], [0.0, 1e-4j]])
    bf = mrt_waterfilling(H, 0.5, 1e-12)
    HW = H @ bf.W
    assert HW[0, 1] == 0 and HW[1, 0] == 0
    sinr = compute_sinr(H, bf.W, 1e-12)
    np.testing.assert_allclose(sinr, bf.power_allocation * np.array([4e-8, 1e-8]) / 1e-12)


def test_water_filling_symmetry():
    p, _ = water_filling([3.0, 3.0], 2.0, 1.0)
    np.testing.assert_allclose(p, [1.0, 1.0])


def test_water_filling_inactive_user():
    p, mu = water_filling([1.0, 1e-6], 1.0, 1.0)
    np.testing.assert_allclose(p, [1.0, 0.0])
    assert mu < 1.0 / 1e-6


def test_water_filling_all_zero():
    with pytest.raises(DegenerateChannelError):
        water_filling([0.0, 0.0], 1.0, 1.0)
    with pytest.raises(DegenerateChannelError):
        mrt_waterfilling(np.zeros((2, 2)), 1.0, 1.0)


@given(
    st.lists(st.floats(1e-6, 1e3), min_size=1, max_size=6),
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 10),
)
def test_water_filling_kkt(gains, P, noise):
    g = np.array(gains)
    p, mu = water_filling(g, P, noise)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(P, rel=1e-9)
    floors = noise / g
    active = p > 0
    np.testing.assert_allclose((mu - floors - p)[active], 0.0, atol=1e-9 * max(mu, 1.0))
    assert np.all(floors[~active] >= mu - 1e-9 * max(mu, 1.0))


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 0.95))
def test_water_filling_beats_simplex_perturbation(g1, g2, _):
    P, noise = 1.0, 0.5
    p, _ = water_filling([g1, g2], P, noise)

    def rate(q):
        return np.log2(1 + q[0] * g1 / noise) + np.log2(1 + q[1] * g2 / noise)

    best = rate(p)
    for d in (0.01 * P, -0.01 * P):
        q = np.clip(p + np.array([d, -d]), 0.0, P)
        q *= P / q.sum()
        assert rate(q) <= best + 1e-12


def test_zf_identity_channel():
    bf = zf_precoder(np.eye(2), 4.0)
    np.testing.assert_allclose(bf.W, np.sqrt(2.0) * np.eye(2), atol=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 10))
def test_zf_nulls_interference(seed, P):
    H = random_channel(seed)
    W = zf_precoder(H, P, diagonal_loading=0.0).W
    HW = H @ W
    off = np.abs(HW[0, 1]) + np.abs(HW[1, 0])
    assert off <= 1e-9 * np.linalg.norm(HW)
    assert np.sum(np.abs(W) ** 2) == pytest.approx(P, rel=1e-12)


def test_zf_singular_channel():
    H = np.array([[1.0, 2.0], [2.0, 4.0]]) * 1e-4
    with pytest.raises(NearSingularChannelError):
        zf_precoder(H, 1.0, diagonal_loading=0.0)
    bf = zf_precoder(H, 1.0)
    assert bf.diagonal_loading > 0
    assert np.all(np.isfinite(bf.W))


def test_scaling_covariance():
    H = random_channel(5)
    W = zf_precoder(H, 1.0).W
    c = 3.0 - 4.0j
    np.testing.assert_allclose(zf_precoder(c * H, 1.0).W * c / abs(c), W, atol=1e-12)
    np.testing.assert_allclose(
        compute_sinr(c * H, W, 1.0), abs(c) ** 2 * compute_sinr(H, W, 1.0), rtol=1e-6
    )
    # interference-free SINRs scale exactly by |c|^2 at fixed W
    noise = 1e-12
    s1, s2 = compute_sinr(H, W, noise), compute_sinr(c * H, W, noise * abs(c) ** 2)
    np.testing.assert_allclose(s1, s2, rtol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_wmmse_monotone_and_feasible(seed):
    H = random_channel(seed, K=2, M=4)
    res = wmmse_precoder(H, 0.5, 1e-9)
    diffs = np.diff(res.trace)
    assert np.all(diffs >= -1e-9 * np.abs(res.trace[1:]))
    assert res.beamformer.total_power <= 0.5 * (1 + 1e-9)
    assert sum_rate(compute_sinr(H, res.beamformer.W, 1e-9)) == pytest.approx(max(res.trace))


def test_wmmse_orthogonal_equal_gain_matches_mrt_waterfilling():
    H = 1e-4 * np.array([[1.0, 0.0], [0.0, 1.0j]])
    P, noise = 0.5, 1e-9
    target = rate_report(H, mrt_waterfilling(H, P, noise).W, noise).sum_rate
    got = rate_report(H, wmmse_precoder(H, P, noise).beamformer.W, noise).sum_rate
    assert got == pytest.approx(target, abs=1e-6)


def test_wmmse_single_user_is_full_power_mrt():
    h = random_channel(2, K=1, M=3)
    P, noise = 0.5, 1e-9
    res = wmmse_precoder(h, P, noise)
    expect = np.log2(1 + P * np.linalg.norm(h) ** 2 / noise)
    assert res.trace[-1] == pytest.approx(expect, rel=1e-9)
    assert res.beamformer.total_power == pytest.approx(P, rel=1e-9)
