"""Tests for the directional link model.

Oracles: closed-form kernel values at hand-picked angles, moment identities
of the Gamma fading law, and the main-lobe hit probability 2/M.
"""

import numpy as np
import pytest

from hetsleep.channel import (
    ChannelParams,
    kernel_actual,
    kernel_cosine,
    sample_link_gain,
    sinr_at_typical,
)


def test_kernel_actual_peak_and_zeros():
    m = 8
    assert kernel_actual(0.0, m) == pytest.approx(1.0)
    assert kernel_actual(1.0, m) == pytest.approx(1.0)  # periodic peak
    # first null of the array factor at x = 1/M
    assert kernel_actual(1.0 / m, m) == pytest.approx(0.0, abs=1e-12)
    x = 0.37
    expect = (np.sin(np.pi * m * x) / (m * np.sin(np.pi * x))) ** 2
    assert kernel_actual(x, m) == pytest.approx(expect, rel=1e-12)


def test_kernel_cosine_support_and_shape():
    m = 16
    assert kernel_cosine(0.0, m) == pytest.approx(1.0)
    assert kernel_cosine(1.0 / m, m) == pytest.approx(0.0, abs=1e-12)
    assert kernel_cosine(1.0 / m + 1e-6, m) == 0.0
    assert kernel_cosine(-0.5 / m, m) == pytest.approx(np.cos(np.pi / 4) ** 2)
    arr = kernel_cosine(np.linspace(-1, 1, 101), m)
    assert (arr >= 0).all() and (arr <= 1).all()


def test_kernel_cosine_tracks_actual_in_main_lobe():
    # the approximation stays within a tenth of the true pattern in the lobe
    m = 64
    x = np.linspace(-0.9 / m, 0.9 / m, 41)
    assert np.max(np.abs(kernel_cosine(x, m) - kernel_actual(x, m))) < 0.1


def test_aligned_gain_moments():
    rng = np.random.default_rng(2)
    params = ChannelParams(m_nakagami=3)
    g = sample_link_gain(rng, params, n_antennas=32, aligned=True, size=200_000)
    assert g.mean() == pytest.approx(32.0, rel=0.01)
    # Gamma(m, 1/m): var of |rho|^2 is 1/m, so var(g) = M^2 / m
    assert g.var() == pytest.approx(32.0 ** 2 / 3.0, rel=0.03)


def test_interferer_gain_hit_probability():
    # beam offset uniform on [-1, 1] with spacing ratio 1/2: the pattern
    # argument theta/2 lands in the main lobe with probability 2/M
    rng = np.random.default_rng(7)
    params = ChannelParams(m_nakagami=1)
    for m_ant in (8, 64):
        g = sample_link_gain(rng, params, n_antennas=m_ant, aligned=False, size=400_000)
        assert np.mean(g > 0) == pytest.approx(2.0 / m_ant, rel=0.05)


def test_interferer_gain_mean_matches_kernel_integral():
    # E[g] = M * E[G_cos(theta/2)] = M * (1/2) int_{-2/M}^{2/M} cos^2(pi M u/4) du
    # = M * 2/M * 1/2 = 1
    rng = np.random.default_rng(17)
    params = ChannelParams(m_nakagami=2)
    g = sample_link_gain(rng, params, n_antennas=16, aligned=False, size=600_000)
    assert g.mean() == pytest.approx(1.0, rel=0.02)


def test_sinr_assembly_with_los_ball():
    params = ChannelParams(beta=2.0, alpha=4.0, noise_power=0.1)
    sinr = sinr_at_typical(
        p_serv_w=10.0, gain_serv=5.0, dist_serv=2.0,
        p_int_w=[10.0, 10.0], gains_int=[1.0, 8.0], dists_int=[4.0, 500.0],
        params=params, r_max=400.0,
    )
    signal = 2.0 * 10.0 * 5.0 * 2.0 ** -4
    interf = 2.0 * 10.0 * 1.0 * 4.0 ** -4  # second interferer beyond the ball
    assert sinr == pytest.approx(signal / (0.1 + interf), rel=1e-12)
    # serving link beyond the ball cannot cover
    assert sinr_at_typical(10.0, 5.0, 401.0, [], [], [], params, r_max=400.0) == 0.0


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(alpha=2.0)
    with pytest.raises(ValueError):
        ChannelParams(m_nakagami=0)
