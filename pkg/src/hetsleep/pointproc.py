"""Spatial model: tiers, scenarios and point-process sampling.

This module implements:
  - tier descriptions (base-station tiers, user tiers of three categories)
  - the Scenario container with window sizing and validation
  - samplers for homogeneous Poisson and Matern-cluster processes on a
    square window with toroidal wrap or a guard band
  - full network realizations and the typical-user construction (cluster
    center and siblings for clustered categories, with the cluster center
    acting as an extra candidate base station for category 2)

Category conventions for user tiers:
  1  Matern cluster process with its own parent process
  2  Matern cluster process whose parents are the base stations of one
     hotspot tier (users gather around those stations)
  3  homogeneous Poisson users
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BsTier",
    "UeTier",
    "Scenario",
    "NetworkRealization",
    "TypicalUser",
    "sample_hppp",
    "sample_mcp",
    "realize_network",
    "make_typical_user",
    "dist_to_point",
]


@dataclass(frozen=True)
class BsTier:
    """One base-station tier (a homogeneous PPP).

    tier_id: positive integer label used across the package
    kind: "base" (macro-like, no attached user cluster) or "hotspot"
    intensity: stations per m^2
    tx_power_w: transmit power [W]
    n_antennas: array size M, integer >= 1
    """

    tier_id: int
    kind: str
    intensity: float
    tx_power_w: float
    n_antennas: int

    def __post_init__(self):
        if self.kind not in ("base", "hotspot"):
            raise ValueError(f"kind must be 'base' or 'hotspot', got {self.kind!r}")
        if self.tier_id <= 0:
            raise ValueError("tier_id must be positive (0 is reserved)")
        if self.intensity <= 0 or self.tx_power_w <= 0 or self.n_antennas < 1:
            raise ValueError("intensity, tx_power_w and n_antennas must be positive")


@dataclass(frozen=True)
class UeTier:
    """One user tier.

    category selects the geometry; only the matching fields are read:
      1: parent_intensity [m^-2], mean_cluster, cluster_radius [m]
      2: coupled_bs_tier (id of a hotspot BS tier), mean_cluster,
         cluster_radius [m]
      3: intensity [m^-2]
    """

    tier_id: int
    category: int
    intensity: float = 0.0
    parent_intensity: float = 0.0
    mean_cluster: float = 0.0
    cluster_radius: float = 0.0
    coupled_bs_tier: int | None = None

    def __post_init__(self):
        if self.category not in (1, 2, 3):
            raise ValueError(f"category must be 1, 2 or 3, got {self.category}")
        if self.category == 1 and (self.parent_intensity <= 0 or self.mean_cluster <= 0
                                   or self.cluster_radius <= 0):
            raise ValueError("category 1 needs parent_intensity, mean_cluster, cluster_radius")
        if self.category == 2 and (self.coupled_bs_tier is None or self.mean_cluster <= 0
                                   or self.cluster_radius <= 0):
            raise ValueError("category 2 needs coupled_bs_tier, mean_cluster, cluster_radius")
        if self.category == 3 and self.intensity <= 0:
            raise ValueError("category 3 needs intensity")

    def density(self, scenario: "Scenario") -> float:
        """Mean users per m^2 contributed by this tier."""
        if self.category == 1:
            return self.parent_intensity * self.mean_cluster
        if self.category == 2:
            return scenario.bs_tier(self.coupled_bs_tier).intensity * self.mean_cluster
        return self.intensity


@dataclass(frozen=True)
class Scenario:
    """Static description of one network configuration.

    window_side None picks max(2 r_max, 20 / sqrt(total BS intensity)) so
    the window holds the whole line-of-sight ball and enough stations for
    stable Voronoi loads.  wrap is "toroidal" (exact stationarity) or
    "guard" (dilated parent window, plain distances).
    """

    bs_tiers: tuple
    ue_tiers: tuple
    channel: object = None
    r_min: float = 1.0
    r_max: float = 400.0
    window_side: float | None = None
    wrap: str = "toroidal"
    tau_db: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "bs_tiers", tuple(self.bs_tiers))
        object.__setattr__(self, "ue_tiers", tuple(self.ue_tiers))
        if self.wrap not in ("toroidal", "guard"):
            raise ValueError(f"wrap must be 'toroidal' or 'guard', got {self.wrap!r}")
        if not (0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")
        ids = [t.tier_id for t in self.bs_tiers]
        if len(set(ids)) != len(ids) or not ids:
            raise ValueError("bs tier ids must be unique and nonempty")
        uids = [u.tier_id for u in self.ue_tiers]
        if len(set(uids)) != len(uids) or not uids:
            raise ValueError("ue tier ids must be unique and nonempty")
        for u in self.ue_tiers:
            if u.category == 2:
                bs = self.bs_tier(u.coupled_bs_tier)
                if bs.kind != "hotspot":
                    raise ValueError(
                        f"ue tier {u.tier_id} couples to bs tier {bs.tier_id} "
                        f"of kind {bs.kind!r}; hotspot required"
                    )

    def bs_tier(self, tier_id: int) -> BsTier:
        for t in self.bs_tiers:
            if t.tier_id == tier_id:
                return t
        raise KeyError(f"no bs tier with id {tier_id}")

    def ue_tier(self, tier_id: int) -> UeTier:
        for u in self.ue_tiers:
            if u.tier_id == tier_id:
                return u
        raise KeyError(f"no ue tier with id {tier_id}")

    @property
    def total_bs_intensity(self) -> float:
        return sum(t.intensity for t in self.bs_tiers)

    @property
    def total_ue_density(self) -> float:
        return sum(u.density(self) for u in self.ue_tiers)

    @property
    def side(self) -> float:
        if self.window_side is not None:
            return float(self.window_side)
        return max(2.0 * self.r_max, 20.0 / math.sqrt(self.total_bs_intensity))

    @property
    def mean_cell_area(self) -> float:
        """Spread parameter of the circular-cell radius model, 1/(pi total)."""
        return 1.0 / (math.pi * self.total_bs_intensity)


@dataclass
class NetworkRealization:
    """One sampled network: stations of every tier plus users of every tier."""

    side: float
    wrap: str
    bs_xy: np.ndarray            # (n_bs, 2)
    bs_tier_idx: np.ndarray      # (n_bs,) index into scenario.bs_tiers
    ue_xy: dict = field(default_factory=dict)   # ue tier_id -> (n, 2)

    def bs_of_tier(self, scenario: Scenario, tier_id: int) -> np.ndarray:
        pos = [i for i, t in enumerate(scenario.bs_tiers) if t.tier_id == tier_id]
        if not pos:
            raise KeyError(f"no bs tier with id {tier_id}")
        return self.bs_xy[self.bs_tier_idx == pos[0]]


@dataclass
class TypicalUser:
    """Typical-user attachment sampled on top of a realization.

    xy: user position (window center)
    ue_tier_id / category: which tier the user belongs to
    center_xy: cluster center for categories 1 and 2, None for 3
    center_is_bs: True for category 2 (the center is a candidate station)
    sibling_xy: other users of the same cluster, (n, 2)
    counts_in_load: whether the user itself adds 1 to its serving cell load
    """

    xy: np.ndarray
    ue_tier_id: int
    category: int
    center_xy: np.ndarray | None
    center_is_bs: bool
    sibling_xy: np.ndarray
    counts_in_load: bool


def sample_hppp(rng: np.random.Generator, intensity: float, side: float) -> np.ndarray:
    """Homogeneous PPP on [0, side]^2, returned as an (n, 2) array."""
    if intensity < 0 or side <= 0:
        raise ValueError("intensity must be >= 0 and side > 0")
    n = rng.poisson(intensity * side * side)
    return rng.uniform(0.0, side, size=(n, 2))


def _daughters(rng, parents, mean_cluster, cluster_radius):
    counts = rng.poisson(mean_cluster, size=len(parents))
    total = int(counts.sum())
    radii = cluster_radius * np.sqrt(rng.uniform(size=total))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=total)
    offsets = np.column_stack((radii * np.cos(ang), radii * np.sin(ang)))
    return np.repeat(parents, counts, axis=0) + offsets


def sample_mcp(rng: np.random.Generator, parent_intensity: float, mean_cluster: float,
               cluster_radius: float, side: float, wrap: str = "toroidal",
               parents: np.ndarray | None = None):
    """Matern cluster process on [0, side]^2.

    Daughters are Poisson(mean_cluster) per parent, uniform on a disc of
    cluster_radius.  With toroidal wrap the parents live on the window and
    daughters wrap around, which is exactly stationary on the torus.  With
    a guard band the parent window is dilated by cluster_radius and only
    daughters inside the window are kept.  Pass parents to reuse existing
    points (hotspot stations) as cluster centers.

    Returns (daughters, parents).
    """
    if wrap not in ("toroidal", "guard"):
        raise ValueError(f"wrap must be 'toroidal' or 'guard', got {wrap!r}")
    if parents is None:
        if wrap == "toroidal":
            parents = sample_hppp(rng, parent_intensity, side)
        else:
            lo, hi = -cluster_radius, side + cluster_radius
            n = rng.poisson(parent_intensity * (hi - lo) ** 2)
            parents = rng.uniform(lo, hi, size=(n, 2))
    pts = _daughters(rng, parents, mean_cluster, cluster_radius)
    if wrap == "toroidal":
        pts = np.mod(pts, side)
    else:
        inside = ((pts >= 0.0) & (pts <= side)).all(axis=1)
        pts = pts[inside]
    return pts, parents


def dist_to_point(points: np.ndarray, xy, side: float, wrap: str) -> np.ndarray:
    """Distances from each row of points to xy, min-image under toroidal wrap."""
    delta = np.atleast_2d(points) - np.asarray(xy, dtype=float)
    if wrap == "toroidal":
        delta -= side * np.round(delta / side)
    return np.hypot(delta[:, 0], delta[:, 1])


def realize_network(rng: np.random.Generator, scenario: Scenario) -> NetworkRealization:
    """Sample stations of every BS tier and users of every UE tier."""
    side = scenario.side
    xs, idx = [], []
    for i, tier in enumerate(scenario.bs_tiers):
        pts = sample_hppp(rng, tier.intensity, side)
        xs.append(pts)
        idx.append(np.full(len(pts), i, dtype=np.int64))
    bs_xy = np.concatenate(xs, axis=0) if xs else np.empty((0, 2))
    bs_tier_idx = np.concatenate(idx) if idx else np.empty(0, dtype=np.int64)
    real = NetworkRealization(side=side, wrap=scenario.wrap,
                              bs_xy=bs_xy, bs_tier_idx=bs_tier_idx)
    for u in scenario.ue_tiers:
        if u.category == 3:
            real.ue_xy[u.tier_id] = sample_hppp(rng, u.intensity, side)
        elif u.category == 1:
            pts, _ = sample_mcp(rng, u.parent_intensity, u.mean_cluster,
                                u.cluster_radius, side, scenario.wrap)
            real.ue_xy[u.tier_id] = pts
        else:
            centers = real.bs_of_tier(scenario, u.coupled_bs_tier)
            pts, _ = sample_mcp(rng, 0.0, u.mean_cluster, u.cluster_radius,
                                side, scenario.wrap, parents=centers)
            real.ue_xy[u.tier_id] = pts
    return real


def make_typical_user(rng: np.random.Generator, scenario: Scenario,
                      realization: NetworkRealization, ue_tier_id: int,
                      count_typical_in_load: bool = False) -> TypicalUser:
    """Attach the typical user of one tier at the window center.

    For clustered categories the cluster center sits at a radius with
    density 2r/r_cl^2 from the user (the user being uniform in its own
    cluster) and the remaining cluster members are Poisson(mean_cluster)
    uniform on the disc around that center.  For category 2 the center is
    a station of the coupled tier and is reported as such.
    """
    u = scenario.ue_tier(ue_tier_id)
    side = realization.side
    xy = np.array([side / 2.0, side / 2.0])
    if u.category == 3:
        return TypicalUser(xy=xy, ue_tier_id=ue_tier_id, category=3,
                           center_xy=None, center_is_bs=False,
                           sibling_xy=np.empty((0, 2)),
                           counts_in_load=count_typical_in_load)
    t = u.cluster_radius * math.sqrt(rng.uniform())
    ang = rng.uniform(0.0, 2.0 * math.pi)
    center = xy + t * np.array([math.cos(ang), math.sin(ang)])
    if realization.wrap == "toroidal":
        center = np.mod(center, side)
    sib, _ = sample_mcp(rng, 0.0, u.mean_cluster, u.cluster_radius,
                        side, realization.wrap, parents=center[None, :])
    return TypicalUser(xy=xy, ue_tier_id=ue_tier_id, category=u.category,
                       center_xy=center, center_is_bs=(u.category == 2),
                       sibling_xy=sib, counts_in_load=count_typical_in_load)
