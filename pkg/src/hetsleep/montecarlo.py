"""Network-level Monte-Carlo engine.

This module implements:
  - Voronoi cell loads of the joint station process (all tiers pooled,
    toroidal metric) and vectorized sleep application
  - a trial-table design: every trial freezes one network realization
    together with the per-station fading power, beam offset and sleep
    uniform, plus the Palm-adjusted loads each user category sees; any
    operating point (sleep policy, threshold, transmit power, antenna
    count, SINR threshold) is then evaluated on identical randomness,
    giving common random numbers across whole sweep grids
  - empirical load pmfs, activity-averaged coverage with confidence
    intervals, and energy-efficiency sweeps reusing one table set

Conventions baked into the tables:
  - the probe user sits at the window center; realizations are redrawn
    until no station falls inside the r_min disc around it, and the
    category-2 cluster center is redrawn the same way, which reproduces
    the conditioned serving-distance laws of the analytic engine
  - per-station gains are drawn once per trial and reused in both roles
    (aligned when serving, beam-offset when interfering)
  - trials with no awake station inside the line-of-sight ball count as
    not covered, never dropped
  - per-trial substream default_rng([seed, stream, trial]) and a fixed
    reduction order make every estimate reproducible bit for bit
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri

from .analytic import (
    MetricReport,
    PowerModel,
    ase,
    energy_efficiency,
    power_net,
)
from .channel import ChannelParams
from .load import LoadPmf, SleepPolicy, TierSleep
from .pointproc import (
    NetworkRealization,
    Scenario,
    dist_to_point,
    make_typical_user,
    realize_network,
)

__all__ = [
    "McConfig",
    "McEstimate",
    "TrialTables",
    "CoverageTable",
    "cell_loads",
    "apply_sleep",
    "empirical_load_pmf",
    "build_tables",
    "aakcp_from_tables",
    "serving_distances",
    "strategic_policy_from_tables",
    "run_aakcp",
    "run_metrics",
    "run_sweep",
]


@dataclass(frozen=True)
class McConfig:
    """Simulation controls.

    trials: number of independent network realizations
    seed: substream root; per-trial generators are default_rng([seed,
        stream, trial])
    batch: accumulator consolidation cadence during table builds
    policy: SleepPolicy evaluated by run_aakcp/run_metrics (None keeps
        every station awake)
    kernel: "cosine" (main-lobe approximation, matches the analytic
        engine) or "actual" (full array pattern)
    confidence: two-sided level of the reported intervals
    ue_tier: fix the probe user's tier instead of mixing by density
    count_typical_in_load: add the probe user itself to its cell load
    """

    trials: int = 10000
    seed: int = 1
    batch: int = 4096
    policy: SleepPolicy | None = None
    kernel: str = "cosine"
    confidence: float = 0.95
    ue_tier: int | None = None
    count_typical_in_load: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.kernel not in ("cosine", "actual"):
            raise ValueError(f"kernel must be 'cosine' or 'actual', got {self.kernel!r}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class McEstimate:
    """Point estimate with a symmetric normal-approximation interval."""

    value: float
    ci_halfwidth: float
    trials: int

    def __post_init__(self):
        if self.ci_halfwidth < 0:
            raise ValueError("ci_halfwidth must be >= 0")


def _trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stream), int(trial)])


def _wrap_coords(xy: np.ndarray, side: float) -> np.ndarray:
    # cKDTree with boxsize insists on [0, side); np.mod can land on side
    return np.where(xy >= side, xy - side, np.where(xy < 0.0, xy + side, xy))


def _tree(bs_xy: np.ndarray, side: float, wrap: str):
    if wrap == "toroidal":
        return cKDTree(_wrap_coords(bs_xy, side), boxsize=side)
    return cKDTree(bs_xy)


def _nearest(tree, pts: np.ndarray, n_bs: int, side: float, wrap: str,
             tie_exact: bool = True):
    """Nearest station per point with ties broken toward the lower index.

    tie_exact=False skips the second-neighbor lookup; exact ties have
    probability zero under continuous sampling, so the bulk simulation
    path uses the cheaper query.
    """
    if wrap == "toroidal":
        pts = _wrap_coords(pts, side)
    if n_bs == 1 or not tie_exact:
        d, i = tree.query(pts)
        if n_bs == 1:
            i = np.zeros(len(pts), dtype=np.int64)
        return np.asarray(d, dtype=float), np.asarray(i, dtype=np.int64)
    d, i = tree.query(pts, k=2)
    tie = d[:, 0] == d[:, 1]
    idx = np.where(tie, np.minimum(i[:, 0], i[:, 1]), i[:, 0])
    return d[:, 0], idx.astype(np.int64)


def cell_loads(realization: NetworkRealization) -> np.ndarray:
    """Per-station user counts of the joint Voronoi tessellation.

    Users of every tier are pooled and assigned to their nearest station
    regardless of tier, pre-sleep; the metric follows realization.wrap.
    """
    n_bs = len(realization.bs_xy)
    if n_bs < 1:
        raise ValueError("realization has no stations")
    tree = _tree(realization.bs_xy, realization.side, realization.wrap)
    counts = np.zeros(n_bs, dtype=np.int64)
    for pts in realization.ue_xy.values():
        if len(pts) == 0:
            continue
        _, idx = _nearest(tree, pts, n_bs, realization.side, realization.wrap)
        counts += np.bincount(idx, minlength=n_bs)
    return counts


def _awake_rule(ts: TierSleep, loads: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized TierSleep.awake_given_load."""
    if ts.mode == "none":
        return np.ones(loads.shape, dtype=bool)
    if ts.mode == "random":
        return u < ts.q
    if math.isinf(ts.mu):
        return np.zeros(loads.shape, dtype=bool)
    awake = loads >= ts.mu
    if ts.boundary_prob > 0.0:
        awake = awake | ((loads == ts.mu - 1) & (u < ts.boundary_prob))
    return awake


def apply_sleep(loads, policy, tier_ids, rng: np.random.Generator) -> np.ndarray:
    """Awake flags for one realization's loads.

    policy is a SleepPolicy, or a bare float for tier-blind Bernoulli
    sleeping (tier_ids may then be None).  One uniform is drawn per
    station whatever the mode, so streams stay aligned across policies.
    """
    loads = np.asarray(loads)
    u = rng.uniform(size=loads.shape)
    if np.isscalar(policy):
        return u < float(policy)
    tier_ids = np.asarray(tier_ids)
    awake = np.zeros(loads.shape, dtype=bool)
    for tid in np.unique(tier_ids):
        sel = tier_ids == tid
        awake[sel] = _awake_rule(policy.tier(int(tid)), loads[sel], u[sel])
    return awake


def empirical_load_pmf(scenario: Scenario, bs_tier_id: int, cfg: McConfig) -> LoadPmf:
    """Histogram of joint-Voronoi loads for one station tier.

    cfg.trials independent realizations on substream 1; no probe user is
    planted, so this estimates the stationary (unconditioned) law.
    """
    pos = [i for i, t in enumerate(scenario.bs_tiers) if t.tier_id == bs_tier_id]
    if not pos:
        raise KeyError(f"no bs tier with id {bs_tier_id}")
    hist = np.zeros(1, dtype=np.int64)
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, trial, stream=1)
        real = realize_network(rng, scenario)
        if len(real.bs_xy) == 0:
            continue
        counts = cell_loads(real)[real.bs_tier_idx == pos[0]]
        if len(counts) == 0:
            continue
        h = np.bincount(counts)
        if len(h) > len(hist):
            hist = np.concatenate([hist, np.zeros(len(h) - len(hist), dtype=np.int64)])
        hist[: len(h)] += h
    total = hist.sum()
    if total == 0:
        raise ValueError(f"no cells of tier {bs_tier_id} observed; enlarge the window")
    return LoadPmf(probs=hist / total, raw_sum=1.0)


# ===== trial tables =====

@dataclass
class TrialTables:
    """Frozen randomness of cfg.trials realizations, probe at the center.

    Flat per-station rows cover the stations inside the line-of-sight
    ball, sorted by distance within each trial; offsets[t]:offsets[t+1]
    slices trial t.  loads holds one column per user tier (Palm-adjusted
    view); center holds the category-2 cluster-center station draws.
    load_hist accumulates the stationary base loads per station tier.
    """

    trials: int
    offsets: np.ndarray
    dist: np.ndarray
    tier_pos: np.ndarray
    gain_pw: np.ndarray
    beam_u: np.ndarray
    sleep_u: np.ndarray
    loads: dict
    center: dict
    load_hist: dict
    weights: dict
    seed: int
    kernel: str


def _trial_draw(rng: np.random.Generator, sc: Scenario, cfg: McConfig,
                keep_geometry: bool = False) -> dict:
    """One trial's frozen draws; see build_tables for the field layout."""
    ch = sc.channel if sc.channel is not None else ChannelParams()
    side, wrap = sc.side, sc.wrap
    center = np.array([side / 2.0, side / 2.0])

    # station field conditioned on an empty r_min disc around the probe
    while True:
        real = realize_network(rng, sc)
        n_bs = len(real.bs_xy)
        if n_bs == 0:
            d_bs = np.empty(0)
            break
        d_bs = dist_to_point(real.bs_xy, center, side, wrap)
        if sc.r_min <= 0.0 or float(d_bs.min()) >= sc.r_min:
            break

    tree = _tree(real.bs_xy, side, wrap) if n_bs else None
    ue_all = [real.ue_xy[u.tier_id] for u in sc.ue_tiers]
    all_xy = np.concatenate([p for p in ue_all if len(p)], axis=0) \
        if any(len(p) for p in ue_all) else np.empty((0, 2))
    if n_bs and len(all_xy):
        d_near, i_near = _nearest(tree, all_xy, n_bs, side, wrap, tie_exact=False)
        base = np.bincount(i_near, minlength=n_bs)
    else:
        d_near = np.full(len(all_xy), np.inf)
        i_near = np.zeros(len(all_xy), dtype=np.int64)
        base = np.zeros(n_bs, dtype=np.int64)

    # probe users, one per tier, sharing the realization
    typicals = {}
    for u in sorted(sc.ue_tiers, key=lambda t: t.tier_id):
        typ = make_typical_user(rng, sc, real, u.tier_id,
                                cfg.count_typical_in_load)
        if u.category == 2 and sc.r_min > 0.0:
            if sc.r_min >= u.cluster_radius:
                raise ValueError(
                    f"r_min {sc.r_min} >= cluster radius {u.cluster_radius} "
                    f"of ue tier {u.tier_id}: no category-2 center support")
            while float(dist_to_point(typ.center_xy[None, :], center,
                                      side, wrap)[0]) < sc.r_min:
                typ = make_typical_user(rng, sc, real, u.tier_id,
                                        cfg.count_typical_in_load)
        typicals[u.tier_id] = typ

    # line-of-sight ball, sorted by distance
    if n_bs:
        ball = np.flatnonzero(d_bs <= sc.r_max)
        ball = ball[np.argsort(d_bs[ball], kind="stable")]
    else:
        ball = np.empty(0, dtype=np.int64)
    n_ball = len(ball)
    m_fad = ch.m_nakagami
    gam = rng.gamma(m_fad, 1.0 / m_fad, size=n_ball)
    ub = rng.uniform(-1.0, 1.0, size=n_ball)
    us = rng.uniform(size=n_ball)

    # Palm-adjusted loads per probe view (no randomness below)
    loads = {}
    center_geo = {}
    for tid, typ in typicals.items():
        counts = base.copy()
        if typ.category == 1:
            if n_bs and len(typ.sibling_xy):
                _, i_s = _nearest(tree, typ.sibling_xy, n_bs, side, wrap,
                                  tie_exact=False)
                counts += np.bincount(i_s, minlength=n_bs)
            if typ.counts_in_load and n_bs:
                counts[int(np.argmin(d_bs))] += 1
        elif typ.category == 2:
            t0 = float(dist_to_point(typ.center_xy[None, :], center, side, wrap)[0])
            d_c = dist_to_point(all_xy, typ.center_xy, side, wrap) \
                if len(all_xy) else np.empty(0)
            stolen = d_c < d_near
            if stolen.any():
                counts -= np.bincount(i_near[stolen], minlength=n_bs)
            c_load = int(stolen.sum())
            if len(typ.sibling_xy):
                if n_bs:
                    d_s, i_s = _nearest(tree, typ.sibling_xy, n_bs, side, wrap,
                                        tie_exact=False)
                else:
                    d_s = np.full(len(typ.sibling_xy), np.inf)
                    i_s = np.zeros(len(typ.sibling_xy), dtype=np.int64)
                d_cs = dist_to_point(typ.sibling_xy, typ.center_xy, side, wrap)
                to_c = d_cs < d_s
                if n_bs and (~to_c).any():
                    counts += np.bincount(i_s[~to_c], minlength=n_bs)
                c_load += int(to_c.sum())
            if typ.counts_in_load:
                if n_bs == 0 or t0 < float(d_bs.min()):
                    c_load += 1
                else:
                    counts[int(np.argmin(d_bs))] += 1
            center_geo[tid] = (t0, c_load)
        else:
            if typ.counts_in_load and n_bs:
                counts[int(np.argmin(d_bs))] += 1
        loads[tid] = counts[ball].astype(np.uint32)

    # cluster-center station draws, after the shared per-station block
    center_rows = {}
    for tid in sorted(center_geo):
        t0, c_load = center_geo[tid]
        g0 = float(rng.gamma(m_fad, 1.0 / m_fad))
        u0 = float(rng.uniform(-1.0, 1.0))
        s0 = float(rng.uniform())
        center_rows[tid] = (t0, g0, u0, s0, c_load)

    out = {
        "n": n_ball,
        "dist": d_bs[ball].astype(np.float32),
        "tier": real.bs_tier_idx[ball].astype(np.uint8),
        "gam": gam.astype(np.float32),
        "ub": ub.astype(np.float32),
        "us": us.astype(np.float32),
        "loads": loads,
        "center": center_rows,
        "base_counts": base,
        "bs_tier_idx": real.bs_tier_idx,
    }
    if keep_geometry:
        out["geometry"] = (real, typicals)
    return out


def build_tables(scenario: Scenario, cfg: McConfig) -> TrialTables:
    """Run cfg.trials realizations and freeze them into flat tables."""
    sc = scenario
    ue_ids = sorted(u.tier_id for u in sc.ue_tiers)
    cat2_ids = sorted(u.tier_id for u in sc.ue_tiers if u.category == 2)
    cols = {k: [] for k in ("dist", "tier", "gam", "ub", "us")}
    load_cols = {tid: [] for tid in ue_ids}
    center_cols = {tid: ([], [], [], [], []) for tid in cat2_ids}
    n_per_trial = np.zeros(cfg.trials, dtype=np.int64)
    hist = {t.tier_id: np.zeros(1, dtype=np.int64) for t in sc.bs_tiers}

    def consolidate():
        for k in cols:
            if len(cols[k]) > 1:
                cols[k] = [np.concatenate(cols[k])]
        for tid in load_cols:
            if len(load_cols[tid]) > 1:
                load_cols[tid] = [np.concatenate(load_cols[tid])]

    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, trial, stream=0)
        d = _trial_draw(rng, sc, cfg)
        n_per_trial[trial] = d["n"]
        for k in cols:
            cols[k].append(d[k])
        for tid in ue_ids:
            load_cols[tid].append(d["loads"][tid])
        for tid in cat2_ids:
            row = d["center"][tid]
            for j in range(5):
                center_cols[tid][j].append(row[j])
        for pos, tier in enumerate(sc.bs_tiers):
            c = d["base_counts"][d["bs_tier_idx"] == pos]
            if len(c) == 0:
                continue
            h = np.bincount(c)
            if len(h) > len(hist[tier.tier_id]):
                hist[tier.tier_id] = np.concatenate(
                    [hist[tier.tier_id],
                     np.zeros(len(h) - len(hist[tier.tier_id]), dtype=np.int64)])
            hist[tier.tier_id][: len(h)] += h
        if (trial + 1) % cfg.batch == 0:
            consolidate()
    consolidate()

    offsets = np.concatenate([[0], np.cumsum(n_per_trial)]).astype(np.int64)
    center = {}
    for tid in cat2_ids:
        t0, g0, u0, s0, ld = center_cols[tid]
        center[tid] = {
            "dist": np.array(t0, dtype=np.float32),
            "gain_pw": np.array(g0, dtype=np.float32),
            "beam_u": np.array(u0, dtype=np.float32),
            "sleep_u": np.array(s0, dtype=np.float32),
            "load": np.array(ld, dtype=np.uint32),
        }
    total = sc.total_ue_density
    weights = {u.tier_id: u.density(sc) / total for u in sc.ue_tiers}
    return TrialTables(
        trials=cfg.trials,
        offsets=offsets,
        dist=cols["dist"][0] if cols["dist"] else np.empty(0, np.float32),
        tier_pos=cols["tier"][0] if cols["tier"] else np.empty(0, np.uint8),
        gain_pw=cols["gam"][0],
        beam_u=cols["ub"][0],
        sleep_u=cols["us"][0],
        loads={tid: load_cols[tid][0] for tid in ue_ids},
        center=center,
        load_hist=hist,
        weights=weights,
        seed=cfg.seed,
        kernel=cfg.kernel,
    )


# ===== evaluation on frozen tables =====

def _beam_gain(x: np.ndarray, m_arr: np.ndarray, kind: str) -> np.ndarray:
    """Array pattern at offset x with per-row antenna count."""
    if kind == "cosine":
        inside = np.abs(x) <= 1.0 / m_arr
        return np.where(inside, np.cos(0.5 * np.pi * m_arr * x) ** 2, 0.0)
    s = np.sin(np.pi * x)
    peak = np.abs(s) < 1e-12
    safe = np.where(peak, 1.0, s)
    return np.where(peak, 1.0, (np.sin(np.pi * m_arr * x) / (m_arr * safe)) ** 2)


def _segment_first_sum(offsets, awake, contrib):
    """Per-trial (first awake row index, sum of awake contributions)."""
    n = len(awake)
    cand = np.where(awake, np.arange(n, dtype=np.int64), n)
    first = np.minimum.reduceat(np.append(cand, n), offsets[:-1])
    tot = np.add.reduceat(np.append(np.where(awake, contrib, 0.0), 0.0),
                          offsets[:-1])
    empty = offsets[:-1] == offsets[1:]
    return np.where(empty, n, first), np.where(empty, 0.0, tot)


def _per_tier_arrays(scenario, antennas, powers):
    """Antenna and power vectors indexed by tier position, with overrides."""
    m_by_pos = np.array([float(t.n_antennas) for t in scenario.bs_tiers])
    p_by_pos = np.array([t.tx_power_w for t in scenario.bs_tiers])
    if antennas is not None:
        if np.isscalar(antennas):
            m_by_pos[:] = float(antennas)
        else:
            for pos, t in enumerate(scenario.bs_tiers):
                m_by_pos[pos] = float(antennas.get(t.tier_id, t.n_antennas))
    if powers is not None:
        if np.isscalar(powers):
            p_by_pos[:] = float(powers)
        else:
            for pos, t in enumerate(scenario.bs_tiers):
                p_by_pos[pos] = float(powers.get(t.tier_id, t.tx_power_w))
    return m_by_pos, p_by_pos


def _sinr_views(tables: TrialTables, scenario: Scenario, policy: SleepPolicy,
                antennas=None, powers=None, kernel=None) -> dict:
    """SINR per trial for each probe tier under one operating point.

    Returns {ue_tier_id: (sinr, serving_distance)}; uncovered trials get
    sinr 0 and distance inf.
    """
    sc = scenario
    ch = sc.channel if sc.channel is not None else ChannelParams()
    kind = kernel or tables.kernel
    m_pos, p_pos = _per_tier_arrays(sc, antennas, powers)
    t_pos = tables.tier_pos
    dist = tables.dist.astype(np.float64)
    gam = tables.gain_pw.astype(np.float64)
    m_row = m_pos[t_pos]
    c = ch.beta * p_pos[t_pos] * m_row * gam * dist ** -ch.alpha
    g = _beam_gain(tables.beam_u.astype(np.float64) * ch.d_over_wavelength,
                   m_row, kind)
    i = c * g
    us = tables.sleep_u.astype(np.float64)
    offsets = tables.offsets
    n = len(dist)
    noise = ch.noise_power
    tiers_by_pos = list(sc.bs_tiers)

    out = {}
    for u in sorted(sc.ue_tiers, key=lambda t: t.tier_id):
        tid = u.tier_id
        loads = tables.loads[tid]
        awake = np.zeros(n, dtype=bool)
        for pos, tier in enumerate(tiers_by_pos):
            sel = t_pos == pos
            awake[sel] = _awake_rule(policy.tier(tier.tier_id),
                                     loads[sel], us[sel])
        first, itot = _segment_first_sum(offsets, awake, i)
        has = first < n
        sidx = np.where(has, first, 0)
        s_sig = np.where(has, c[sidx], 0.0)
        s_int = itot - np.where(has, i[sidx], 0.0)
        s_dist = np.where(has, dist[sidx], np.inf)

        cen = tables.center.get(tid)
        if cen is None:
            with np.errstate(divide="ignore", invalid="ignore"):
                sinr = np.where(has, s_sig / (noise + s_int), 0.0)
            out[tid] = (sinr, s_dist)
            continue

        bs0 = sc.bs_tier(u.coupled_bs_tier)
        pos0 = tiers_by_pos.index(bs0)
        ts0 = policy.tier(bs0.tier_id)
        cdist = cen["dist"].astype(np.float64)
        aw0 = _awake_rule(ts0, cen["load"],
                          cen["sleep_u"].astype(np.float64))
        aw0 = aw0 & (cdist <= sc.r_max)
        c0 = ch.beta * p_pos[pos0] * m_pos[pos0] \
            * cen["gain_pw"].astype(np.float64) * cdist ** -ch.alpha
        g0 = _beam_gain(cen["beam_u"].astype(np.float64) * ch.d_over_wavelength,
                        np.full(tables.trials, m_pos[pos0]), kind)
        i0 = np.where(aw0, c0 * g0, 0.0)
        c_serves = aw0 & (cdist < s_dist)
        covered = c_serves | has
        sig = np.where(c_serves, c0, s_sig)
        den = noise + np.where(c_serves, itot, s_int + i0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = np.where(covered, sig / den, 0.0)
        out[tid] = (sinr, np.where(c_serves, cdist, s_dist))
    return out


@dataclass
class CoverageTable:
    """Coverage estimates over a threshold grid from one table set."""

    taus: np.ndarray
    mix: list
    by_tier: dict


def aakcp_from_tables(tables: TrialTables, scenario: Scenario,
                      policy: SleepPolicy, taus, antennas=None, powers=None,
                      kernel=None, confidence: float = 0.95,
                      ue_tier: int | None = None) -> CoverageTable:
    """Activity-averaged coverage at each threshold, mixed by density.

    The SINR field is computed once per operating point, so the whole
    threshold grid shares one set of draws (per-trial indicators are
    monotone in tau by construction).
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    sinrs = _sinr_views(tables, scenario, policy, antennas, powers, kernel)
    z = float(ndtri(0.5 * (1.0 + confidence)))
    t_count = tables.trials

    def estimate(x: np.ndarray) -> McEstimate:
        mean = float(x.mean())
        var = float(x.var(ddof=1)) if t_count > 1 else 0.0
        return McEstimate(mean, z * math.sqrt(var / t_count), t_count)

    by_tier = {tid: [] for tid in sinrs}
    mix = []
    for tau in taus:
        covs = {tid: (s > tau).astype(np.float64)
                for tid, (s, _) in sinrs.items()}
        for tid, cov in covs.items():
            by_tier[tid].append(estimate(cov))
        if ue_tier is not None:
            mix.append(estimate(covs[ue_tier]))
        else:
            x = sum(tables.weights[tid] * covs[tid] for tid in covs)
            mix.append(estimate(x))
    return CoverageTable(taus=taus, mix=mix, by_tier=by_tier)


def serving_distances(tables: TrialTables, scenario: Scenario,
                      policy: SleepPolicy, ue_tier: int) -> np.ndarray:
    """Distance to the serving (nearest awake, in-ball) station per trial."""
    return _sinr_views(tables, scenario, policy)[ue_tier][1]


def strategic_policy_from_tables(tables: TrialTables, scenario: Scenario,
                                 q_by_tier) -> SleepPolicy:
    """Load thresholds achieving q from the tables' own empirical pmfs.

    Deriving thresholds from the same law the simulated loads follow
    makes the realized awake fraction converge to q exactly.
    """
    pmfs = {}
    for tid, h in tables.load_hist.items():
        total = h.sum()
        if total == 0:
            raise ValueError(f"no load samples for tier {tid}")
        pmfs[tid] = LoadPmf(probs=h / total, raw_sum=1.0)
    return SleepPolicy.strategic(scenario, q_by_tier, pmfs=pmfs)


# ===== public entry points =====

def run_aakcp(scenario: Scenario, cfg: McConfig, tau: float,
              tables: TrialTables | None = None):
    """Coverage estimate at one threshold.

    Returns (mixture McEstimate, {ue_tier_id: McEstimate}).
    """
    if tables is None:
        tables = build_tables(scenario, cfg)
    policy = cfg.policy if cfg.policy is not None else SleepPolicy.always_on(scenario)
    grid = aakcp_from_tables(tables, scenario, policy, [tau],
                             kernel=cfg.kernel, confidence=cfg.confidence,
                             ue_tier=cfg.ue_tier)
    return grid.mix[0], {tid: ests[0] for tid, ests in grid.by_tier.items()}


def run_metrics(scenario: Scenario, cfg: McConfig, tau: float | None = None,
                power_model: PowerModel | None = None,
                tables: TrialTables | None = None,
                policy_label: str = ""):
    """Empirical coverage with the exact power model (engine "mc").

    Returns (MetricReport, mixture McEstimate).
    """
    if tau is None:
        tau = 10.0 ** (scenario.tau_db / 10.0)
    pm = power_model or PowerModel()
    policy = cfg.policy if cfg.policy is not None else SleepPolicy.always_on(scenario)
    est, by_tier = run_aakcp(scenario, cfg, tau, tables=tables)
    ase_v = ase(scenario, tau, est.value)
    p_v = power_net(scenario, policy, pm)
    report = MetricReport(
        tau_db=10.0 * math.log10(tau),
        policy_label=policy_label,
        aakcp=est.value,
        aakcp_by_ue_tier={tid: e.value for tid, e in by_tier.items()},
        ase_bps_hz_m2=ase_v,
        power_w_m2=p_v,
        ee_bits_joule=energy_efficiency(ase_v, p_v),
        engine="mc",
    )
    return report, est


def _scenario_with(sc: Scenario, antennas=None, powers=None) -> Scenario:
    tiers = []
    for t in sc.bs_tiers:
        m = t.n_antennas
        p = t.tx_power_w
        if antennas is not None:
            m = int(antennas) if np.isscalar(antennas) \
                else int(antennas.get(t.tier_id, m))
        if powers is not None:
            p = float(powers) if np.isscalar(powers) \
                else float(powers.get(t.tier_id, p))
        tiers.append(replace(t, n_antennas=m, tx_power_w=p))
    return replace(sc, bs_tiers=tuple(tiers))


def _policy_for(tables, scenario, mode: str, q: float) -> SleepPolicy:
    if mode == "none":
        return SleepPolicy.always_on(scenario)
    if mode == "random":
        return SleepPolicy.random(scenario, q)
    if mode == "strategic":
        return strategic_policy_from_tables(tables, scenario, q)
    raise ValueError(f"unknown sleep mode {mode!r}")


def run_sweep(scenario: Scenario, cfg: McConfig, param: str, values,
              q_grid=(0.25, 0.5, 0.75, 1.0), modes=("strategic", "random"),
              tau_db: float | None = None,
              power_model: PowerModel | None = None,
              tables: TrialTables | None = None) -> list:
    """Energy-efficiency sweep over one design parameter.

    param is one of tau_db | q | power_dbm | antennas | epsilon; values
    is its grid.  One row (dict) per value per (mode, q) curve, with the
    coverage estimated on shared tables and ASE / net power / EE from
    the exact formulas.  epsilon rescales p_sleep_w against p_stat_w.
    """
    if param not in ("tau_db", "q", "power_dbm", "antennas", "epsilon"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    sc = scenario
    if tables is None:
        tables = build_tables(sc, cfg)
    pm = power_model or PowerModel()
    base_tau_db = sc.tau_db if tau_db is None else float(tau_db)
    base_tau = 10.0 ** (base_tau_db / 10.0)
    values = list(values)
    rows = []

    def add_row(value, mode, q, tdb, est, sc_v, pol, pm_v):
        tau = 10.0 ** (tdb / 10.0)
        ase_v = ase(sc_v, tau, est.value)
        p_v = power_net(sc_v, pol, pm_v)
        rows.append({
            "param": param, "value": value, "mode": mode, "q": q,
            "tau_db": tdb, "aakcp": est.value,
            "ci_halfwidth": est.ci_halfwidth, "trials": est.trials,
            "ase_bps_hz_m2": ase_v, "power_w_m2": p_v,
            "ee_bits_joule": energy_efficiency(ase_v, p_v),
        })

    curves = [(mode, q) for mode in modes for q in q_grid]
    if param == "q":
        curves = [(mode, None) for mode in modes]

    for mode, q in curves:
        if param == "q":
            for v in values:
                pol = _policy_for(tables, sc, mode, float(v))
                grid = aakcp_from_tables(tables, sc, pol, [base_tau],
                                         kernel=cfg.kernel,
                                         confidence=cfg.confidence)
                add_row(float(v), mode, float(v), base_tau_db,
                        grid.mix[0], sc, pol, pm)
            continue
        pol = _policy_for(tables, sc, mode, float(q))
        if param == "tau_db":
            taus = [10.0 ** (float(v) / 10.0) for v in values]
            grid = aakcp_from_tables(tables, sc, pol, taus,
                                     kernel=cfg.kernel,
                                     confidence=cfg.confidence)
            for v, est in zip(values, grid.mix):
                add_row(float(v), mode, float(q), float(v), est, sc, pol, pm)
        elif param == "power_dbm":
            for v in values:
                p_w = 10.0 ** (float(v) / 10.0 - 3.0)
                grid = aakcp_from_tables(tables, sc, pol, [base_tau],
                                         powers=p_w, kernel=cfg.kernel,
                                         confidence=cfg.confidence)
                add_row(float(v), mode, float(q), base_tau_db, grid.mix[0],
                        _scenario_with(sc, powers=p_w), pol, pm)
        elif param == "antennas":
            for v in values:
                grid = aakcp_from_tables(tables, sc, pol, [base_tau],
                                         antennas=float(v), kernel=cfg.kernel,
                                         confidence=cfg.confidence)
                add_row(int(v), mode, float(q), base_tau_db, grid.mix[0],
                        _scenario_with(sc, antennas=int(v)), pol, pm)
        else:  # epsilon: coverage is power-model independent
            grid = aakcp_from_tables(tables, sc, pol, [base_tau],
                                     kernel=cfg.kernel,
                                     confidence=cfg.confidence)
            for v in values:
                pm_v = PowerModel(p_stat_w=pm.p_stat_w,
                                  p_sleep_w=float(v) * pm.p_stat_w,
                                  p_a_w=pm.p_a_w, delta_p=pm.delta_p)
                add_row(float(v), mode, float(q), base_tau_db,
                        grid.mix[0], sc, pol, pm_v)
    return rows
