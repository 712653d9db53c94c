"""Tests for point-process sampling and scenario plumbing.

Oracles: Poisson count statistics (counts in disjoint regions, variance of
the MCP count inherits the parent randomness) and pair-distance symmetry
under the toroidal wrap.
"""

import math

import numpy as np
import pytest

from hetsleep.channel import ChannelParams
from hetsleep.pointproc import (
    BsTier,
    NetworkRealization,
    Scenario,
    UeTier,
    dist_to_point,
    make_typical_user,
    realize_network,
    sample_hppp,
    sample_mcp,
)


def small_scenario(window=400.0):
    return Scenario(
        bs_tiers=(
            BsTier(tier_id=1, kind="base", intensity=1e-4, tx_power_w=19.95, n_antennas=64),
            BsTier(tier_id=2, kind="hotspot", intensity=2.5e-5, tx_power_w=19.95, n_antennas=64),
        ),
        ue_tiers=(
            UeTier(tier_id=2, category=2, coupled_bs_tier=2, mean_cluster=40.0, cluster_radius=20.0),
            UeTier(tier_id=3, category=1, parent_intensity=1e-4, mean_cluster=10.0, cluster_radius=20.0),
            UeTier(tier_id=4, category=3, intensity=1e-3),
        ),
        channel=ChannelParams(),
        r_min=1.0,
        r_max=400.0,
        window_side=window,
    )


def test_hppp_count_moments():
    rng = np.random.default_rng(11)
    lam, side = 5e-4, 1000.0
    counts = [len(sample_hppp(rng, lam, side)) for _ in range(1000)]
    mean = lam * side * side  # 500
    assert np.mean(counts) == pytest.approx(mean, rel=0.02)
    assert np.var(counts) == pytest.approx(mean, rel=0.2)


def test_hppp_points_inside_window():
    rng = np.random.default_rng(0)
    pts = sample_hppp(rng, 1e-3, 500.0)
    assert pts.shape[1] == 2
    assert (pts >= 0).all() and (pts <= 500.0).all()


def test_mcp_mean_count_toroidal():
    rng = np.random.default_rng(5)
    lam_p, mbar, r_cl, side = 1e-4, 10.0, 20.0, 1000.0
    counts = [len(sample_mcp(rng, lam_p, mbar, r_cl, side)[0]) for _ in range(300)]
    assert np.mean(counts) == pytest.approx(lam_p * mbar * side * side, rel=0.05)


def test_mcp_daughters_stay_near_parent_without_wrap():
    rng = np.random.default_rng(9)
    parents = np.array([[500.0, 500.0]])
    pts, _ = sample_mcp(rng, 0.0, 200.0, 20.0, 1000.0, wrap="guard", parents=parents)
    d = np.hypot(pts[:, 0] - 500.0, pts[:, 1] - 500.0)
    assert (d <= 20.0 + 1e-9).all()
    assert len(pts) > 120  # Poisson(200), overwhelmingly likely


def test_mcp_toroidal_wraps_across_border():
    rng = np.random.default_rng(13)
    parents = np.array([[1.0, 1.0]])
    pts, _ = sample_mcp(rng, 0.0, 400.0, 20.0, 100.0, wrap="toroidal", parents=parents)
    assert (pts >= 0).all() and (pts <= 100.0).all()
    d = dist_to_point(pts, [1.0, 1.0], 100.0, "toroidal")
    assert (d <= 20.0 + 1e-9).all()


def test_dist_to_point_min_image():
    d = dist_to_point(np.array([[99.0, 0.0]]), [1.0, 0.0], 100.0, "toroidal")
    assert d[0] == pytest.approx(2.0)
    d2 = dist_to_point(np.array([[99.0, 0.0]]), [1.0, 0.0], 100.0, "guard")
    assert d2[0] == pytest.approx(98.0)


def test_scenario_window_default_and_densities():
    sc = small_scenario(window=None)
    # 20 / sqrt(1.25e-4) = 1788.85 beats 2 * r_max = 800
    assert sc.side == pytest.approx(20.0 / math.sqrt(1.25e-4))
    assert sc.total_bs_intensity == pytest.approx(1.25e-4)
    # 40 * 2.5e-5 + 10 * 1e-4 + 1e-3 = 3e-3
    assert sc.total_ue_density == pytest.approx(3e-3)
    assert sc.mean_cell_area == pytest.approx(1.0 / (math.pi * 1.25e-4))


def test_scenario_rejects_bad_coupling():
    with pytest.raises(ValueError):
        Scenario(
            bs_tiers=(BsTier(1, "base", 1e-4, 10.0, 8),),
            ue_tiers=(UeTier(tier_id=9, category=2, coupled_bs_tier=1,
                             mean_cluster=5.0, cluster_radius=10.0),),
        )


def test_realize_network_counts_and_coupling():
    sc = small_scenario(window=2000.0)
    rng = np.random.default_rng(21)
    real = realize_network(rng, sc)
    area = 2000.0 ** 2
    assert len(real.bs_xy) == pytest.approx(1.25e-4 * area, rel=0.25)
    hot = real.bs_of_tier(sc, 2)
    # every category-2 user lies within the cluster radius of some hotspot BS
    ue2 = real.ue_xy[2]
    if len(ue2) and len(hot):
        dmin = np.min(
            np.array([dist_to_point(hot, p, real.side, real.wrap).min() for p in ue2[:50]])
        )
        assert dmin <= 20.0 + 1e-9
    for tid, expect in ((2, 40.0 * len(hot)), (4, 1e-3 * area)):
        assert len(real.ue_xy[tid]) == pytest.approx(expect, rel=0.3)


def test_typical_user_category2_center_distance_law():
    sc = small_scenario(window=1000.0)
    rng = np.random.default_rng(3)
    real = realize_network(rng, sc)
    ds = []
    for _ in range(4000):
        tu = make_typical_user(rng, sc, real, 2)
        assert tu.center_is_bs
        ds.append(dist_to_point(tu.center_xy[None, :], tu.xy, real.side, real.wrap)[0])
    ds = np.asarray(ds)
    assert ds.max() <= 20.0 + 1e-9
    # pdf 2r/r_cl^2: mean 2/3 r_cl, median r_cl/sqrt(2)
    assert ds.mean() == pytest.approx(2.0 / 3.0 * 20.0, rel=0.03)
    assert np.median(ds) == pytest.approx(20.0 / math.sqrt(2.0), rel=0.03)


def test_typical_user_category3_has_no_cluster():
    sc = small_scenario(window=1000.0)
    rng = np.random.default_rng(4)
    real = realize_network(rng, sc)
    tu = make_typical_user(rng, sc, real, 4)
    assert tu.center_xy is None and len(tu.sibling_xy) == 0


def test_typical_user_sibling_count_poisson():
    sc = small_scenario(window=1000.0)
    rng = np.random.default_rng(8)
    real = realize_network(rng, sc)
    counts = [len(make_typical_user(rng, sc, real, 3).sibling_xy) for _ in range(2000)]
    assert np.mean(counts) == pytest.approx(10.0, rel=0.05)
    assert np.var(counts) == pytest.approx(10.0, rel=0.12)
