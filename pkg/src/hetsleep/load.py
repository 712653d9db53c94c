"""Per-cell load statistics under the circular-cell approximation.

A cell of radius r_c collects every user inside the disc b(0, r_c); the
cell radius follows a Nakagami law with shape 3.575 and spread equal to
the mean cell area of the joint station process.  Each user tier enters
the load generating function through an independent factor:

  - clustered tiers through the parent-averaged cluster overlap (with an
    exclusion radius chi around the cell for parents that are stations of
    the cell's own tier)
  - the cell's own cluster, when the stations of this tier carry user
    clusters, through a linked factor without parent averaging
  - Poisson tiers through the plain void functional

The pmf is recovered by sampling the generating function on the unit
circle and inverting with a DFT.  Sleep policies map a target awake ratio
q to a load threshold with a randomized boundary so the achieved ratio is
exactly q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special as _sps

from .pointproc import Scenario
from .specfun import inverse_dft_real, nakagami_pdf

__all__ = [
    "LoadModelConfig",
    "LoadPmf",
    "TierSleep",
    "SleepPolicy",
    "NormalizationError",
    "xi",
    "pgf_cat12",
    "pgf_cat2_linked",
    "pgf_cat3",
    "pgf_total",
    "load_pmf",
    "awake_prob_given_distance",
    "threshold_from_ratio",
]

CELL_SHAPE = 3.575  # Nakagami shape of the circular-cell radius law


class NormalizationError(ValueError):
    """Pmf mass check failed or a conditioning event has negligible mass."""


@dataclass(frozen=True)
class LoadModelConfig:
    """Numerical policy for load-pmf evaluation.

    chi_mode: exclusion radius around a cell for same-tier cluster parents;
      "zero" (no exclusion), "two_rc" (twice the cell radius, the circular
      cell consistent choice) or "fixed" (chi_fixed meters)
    dft_size: generating-function samples on the unit circle (pmf length)
    radius_nodes / ring_nodes: Gauss-Legendre resolution of the cell-radius
      average and the parent-ring integral (per panel)
    tail_eps: ignored relative mass in the cell-radius upper tail
    min_tail_mass: conditioning events with less mass raise an error
    cell_shape: Nakagami shape of the cell radius law
    """

    chi_mode: str = "two_rc"
    chi_fixed: float = 0.0
    dft_size: int = 512
    radius_nodes: int = 192
    ring_nodes: int = 64
    tail_eps: float = 1e-10
    min_tail_mass: float = 1e-12
    cell_shape: float = CELL_SHAPE

    def __post_init__(self):
        if self.chi_mode not in ("zero", "two_rc", "fixed"):
            raise ValueError(f"unknown chi_mode {self.chi_mode!r}")
        if self.dft_size < 16:
            raise ValueError("dft_size must be at least 16")

    def chi_of(self, r_c):
        if self.chi_mode == "zero":
            return np.zeros_like(np.asarray(r_c, dtype=float))
        if self.chi_mode == "two_rc":
            return 2.0 * np.asarray(r_c, dtype=float)
        return np.full_like(np.asarray(r_c, dtype=float), self.chi_fixed)


@dataclass
class LoadPmf:
    """Load pmf on 0..len(probs)-1 with its pre-clamp mass for diagnostics."""

    probs: np.ndarray
    raw_sum: float

    def mean(self) -> float:
        return float(np.arange(len(self.probs)) @ self.probs)

    def tail(self, mu) -> float:
        """P(load >= mu)."""
        if math.isinf(mu):
            return 0.0
        mu = max(int(mu), 0)
        if mu >= len(self.probs):
            return 0.0
        return float(self.probs[mu:].sum())

    def awake_prob(self, mu, boundary_prob: float = 0.0) -> float:
        """P(awake) when the station sleeps below load mu, with the boundary
        load mu-1 kept awake with probability boundary_prob."""
        if math.isinf(mu):
            return 0.0
        mu = int(mu)
        if mu <= 0:
            return 1.0
        p = self.tail(mu)
        if boundary_prob > 0.0 and 1 <= mu <= len(self.probs):
            p += boundary_prob * float(self.probs[mu - 1])
        return min(p, 1.0)


@dataclass(frozen=True)
class TierSleep:
    """Sleep behaviour of one station tier.

    mode: "strategic" (load threshold), "random" (Bernoulli), "none"
    q: target long-run awake ratio
    mu: load threshold (strategic mode); math.inf means never awake
    boundary_prob: awake probability at load exactly mu-1
    """

    mode: str
    q: float
    mu: float = 0.0
    boundary_prob: float = 0.0

    def awake_given_load(self, load: int, u: float) -> bool:
        """Decide awake state from the load and one uniform draw u."""
        if self.mode == "none":
            return True
        if self.mode == "random":
            return u < self.q
        if math.isinf(self.mu):
            return False
        if load >= self.mu:
            return True
        return load == self.mu - 1 and u < self.boundary_prob


@dataclass
class SleepPolicy:
    """Per-tier sleep behaviour; tier ids map to TierSleep entries."""

    tiers: dict = field(default_factory=dict)

    def tier(self, tier_id: int) -> TierSleep:
        return self.tiers[tier_id]

    def awake_ratio(self, tier_id: int) -> float:
        t = self.tiers[tier_id]
        return 1.0 if t.mode == "none" else t.q

    @classmethod
    def always_on(cls, scenario: Scenario) -> "SleepPolicy":
        return cls({t.tier_id: TierSleep("none", 1.0) for t in scenario.bs_tiers})

    @classmethod
    def random(cls, scenario: Scenario, q_by_tier) -> "SleepPolicy":
        q_by_tier = _expand_q(scenario, q_by_tier)
        return cls({tid: TierSleep("random", q) for tid, q in q_by_tier.items()})

    @classmethod
    def strategic(cls, scenario: Scenario, q_by_tier,
                  cfg: "LoadModelConfig | None" = None,
                  pmfs: "dict | None" = None) -> "SleepPolicy":
        """Thresholded sleeping achieving awake ratio q per tier exactly.

        pmfs may supply precomputed unconditional LoadPmf objects per tier
        (analytic ones by default; empirical ones reproduce the same policy
        inside the simulator).
        """
        cfg = cfg or LoadModelConfig()
        q_by_tier = _expand_q(scenario, q_by_tier)
        tiers = {}
        for tid, q in q_by_tier.items():
            pmf = (pmfs or {}).get(tid)
            if pmf is None:
                pmf = load_pmf(scenario, tid, cfg)
            mu, pb = threshold_from_ratio(pmf.probs, q)
            tiers[tid] = TierSleep("strategic", q, mu, pb)
        return cls(tiers)


def _expand_q(scenario: Scenario, q_by_tier) -> dict:
    if np.isscalar(q_by_tier):
        return {t.tier_id: float(q_by_tier) for t in scenario.bs_tiers}
    out = dict(q_by_tier)
    missing = [t.tier_id for t in scenario.bs_tiers if t.tier_id not in out]
    if missing:
        raise ValueError(f"awake ratio missing for tiers {missing}")
    return out


# ===== overlap geometry =====

def xi(r_c, w, cluster_radius: float):
    """Fraction of a radius-cluster_radius disc at distance w that falls
    inside the cell disc b(0, r_c); the two-disc lens area over the cluster
    area.  Broadcasts over r_c and w."""
    a = np.asarray(r_c, dtype=float)
    d = np.asarray(w, dtype=float)
    b = float(cluster_radius)
    a, d = np.broadcast_arrays(a, d)
    out = np.zeros(a.shape)
    far = d >= a + b
    near = d <= np.abs(a - b)
    mid = ~far & ~near
    out[near] = np.minimum(a[near], b) ** 2 / (b * b)
    if mid.any():
        aa, dd = a[mid], d[mid]
        c1 = np.clip((dd * dd + aa * aa - b * b) / (2 * dd * aa), -1.0, 1.0)
        c2 = np.clip((dd * dd + b * b - aa * aa) / (2 * dd * b), -1.0, 1.0)
        prod = ((-dd + aa + b) * (dd + aa - b) * (dd - aa + b) * (dd + aa + b))
        lens = (aa * aa * np.arccos(c1) + b * b * np.arccos(c2)
                - 0.5 * np.sqrt(np.maximum(prod, 0.0)))
        out[mid] = lens / (math.pi * b * b)
    return out if out.ndim else float(out)


@lru_cache(maxsize=32)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panel(lo, hi, n):
    """Gauss-Legendre nodes/weights on [lo, hi] per row; empty panels get
    zero weights.  lo, hi are arrays of equal shape."""
    x, w = _gl(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = np.maximum(hi - lo, 0.0) / 2.0
    nodes = lo + half * (x + 1.0)
    wts = half * w
    return nodes, wts


def _ring_tables(r_nodes: np.ndarray, cluster_radius: float, chi: np.ndarray,
                 n_per_panel: int):
    """Nodes and w-weighted quadrature weights for the parent-ring integral
    over [chi, r_c + cluster_radius], split at the overlap kink |r_c - rm|."""
    hi = r_nodes + cluster_radius
    kink = np.clip(np.abs(r_nodes - cluster_radius), chi, hi)
    lo = np.minimum(chi, hi)
    n1, w1 = _panel(lo, kink, n_per_panel)
    n2, w2 = _panel(kink, hi, n_per_panel)
    nodes = np.concatenate([n1, n2], axis=-1)
    wts = np.concatenate([w1, w2], axis=-1) * nodes  # absorb the w d w factor
    return nodes, wts


# ===== generating-function factors =====

def _cat12_grid(thetas: np.ndarray, xi_mat: np.ndarray, wts: np.ndarray,
                mean_cluster: float, parent_intensity: float,
                chunk: int = 48) -> np.ndarray:
    """exp(-2 pi lambda_p int (1 - exp(-mbar (1-theta) xi)) w dw) on a
    (theta, r_c) grid; xi_mat and wts are (n_r, n_w)."""
    c = mean_cluster * (1.0 - np.asarray(thetas, dtype=complex))
    out = np.empty((len(c), xi_mat.shape[0]), dtype=complex)
    for i in range(0, len(c), chunk):
        blk = c[i:i + chunk, None, None]
        inner = ((1.0 - np.exp(-blk * xi_mat[None, :, :])) * wts[None, :, :]).sum(axis=-1)
        out[i:i + chunk] = np.exp(-2.0 * math.pi * parent_intensity * inner)
    return out


def pgf_cat12(theta, r_c: float, parent_intensity: float, mean_cluster: float,
              cluster_radius: float, chi: float = 0.0,
              cfg: LoadModelConfig | None = None):
    """Load generating function of one clustered tier at a cell of radius
    r_c, parents farther than chi from the cell center.  theta may be a
    complex scalar or array."""
    cfg = cfg or LoadModelConfig()
    thetas = np.atleast_1d(np.asarray(theta, dtype=complex))
    r = np.asarray([float(r_c)])
    nodes, wts = _ring_tables(r, cluster_radius, np.asarray([float(chi)]),
                              cfg.ring_nodes)
    xi_mat = xi(r[:, None], nodes, cluster_radius)
    out = _cat12_grid(thetas, xi_mat, wts, mean_cluster, parent_intensity)[:, 0]
    return out if np.ndim(theta) else complex(out[0])


def pgf_cat2_linked(theta, r_c: float, mean_cluster: float, cluster_radius: float):
    """Generating function of the cell's own cluster members: the cluster
    center is the station itself, so the overlap is xi(r_c, 0)."""
    theta = np.asarray(theta, dtype=complex)
    frac = min(float(r_c), cluster_radius) ** 2 / cluster_radius ** 2
    out = np.exp(-mean_cluster * (1.0 - theta) * frac)
    return out if out.ndim else complex(out)


def pgf_cat3(theta, r_c: float, intensity: float):
    """Generating function of a Poisson user tier inside the cell."""
    theta = np.asarray(theta, dtype=complex)
    out = np.exp(-math.pi * intensity * (1.0 - theta) * float(r_c) ** 2)
    return out if out.ndim else complex(out)


def _tier_factors(scenario: Scenario, bs_tier_id: int):
    """Describe each user tier's factor for cells of one station tier.

    Yields tuples (kind, params) where kind is "cat3", "cat12" or "linked".
    Category-2 parents are stations of the joint process, so their ring
    integral starts at the exclusion radius chi for cells of every tier
    (no other station fits inside a circular cell); the cell's own cluster
    appears as the linked factor when the cell belongs to the coupled tier.
    Category-1 parents are not stations and carry no exclusion.
    """
    for u in scenario.ue_tiers:
        if u.category == 3:
            yield ("cat3", {"intensity": u.intensity})
        elif u.category == 1:
            yield ("cat12", {"parent_intensity": u.parent_intensity,
                             "mean_cluster": u.mean_cluster,
                             "cluster_radius": u.cluster_radius,
                             "excluded": False})
        else:
            lam = scenario.bs_tier(u.coupled_bs_tier).intensity
            if u.coupled_bs_tier == bs_tier_id:
                yield ("linked", {"mean_cluster": u.mean_cluster,
                                  "cluster_radius": u.cluster_radius})
            yield ("cat12", {"parent_intensity": lam,
                             "mean_cluster": u.mean_cluster,
                             "cluster_radius": u.cluster_radius,
                             "excluded": True})


def _pgf_grid(scenario: Scenario, bs_tier_id: int, thetas: np.ndarray,
              r_nodes: np.ndarray, cfg: LoadModelConfig) -> np.ndarray:
    """Joint generating function on a (theta, r_c) grid."""
    out = np.ones((len(thetas), len(r_nodes)), dtype=complex)
    zero_chi = np.zeros_like(r_nodes)
    for kind, p in _tier_factors(scenario, bs_tier_id):
        if kind == "cat3":
            out *= np.exp(-math.pi * p["intensity"]
                          * np.outer(1.0 - thetas, r_nodes ** 2))
        elif kind == "linked":
            frac = np.minimum(r_nodes, p["cluster_radius"]) ** 2 / p["cluster_radius"] ** 2
            out *= np.exp(-p["mean_cluster"] * np.outer(1.0 - thetas, frac))
        else:
            chi = cfg.chi_of(r_nodes) if p["excluded"] else zero_chi
            nodes, wts = _ring_tables(r_nodes, p["cluster_radius"], chi, cfg.ring_nodes)
            xi_mat = xi(r_nodes[:, None], nodes, p["cluster_radius"])
            out *= _cat12_grid(thetas, xi_mat, wts,
                               p["mean_cluster"], p["parent_intensity"])
    return out


def pgf_total(theta, r_c: float, scenario: Scenario, bs_tier_id: int,
              cfg: LoadModelConfig | None = None):
    """Joint load generating function of a radius-r_c cell of one tier."""
    cfg = cfg or LoadModelConfig()
    thetas = np.atleast_1d(np.asarray(theta, dtype=complex))
    out = _pgf_grid(scenario, bs_tier_id, thetas, np.asarray([float(r_c)]), cfg)[:, 0]
    return out if np.ndim(theta) else complex(out[0])


# ===== pmf recovery =====

def _radius_quadrature(scenario: Scenario, cfg: LoadModelConfig,
                       min_radius: float | None):
    m_c = cfg.cell_shape
    omega = scenario.mean_cell_area
    lo = 0.0 if min_radius is None else float(min_radius)
    q_lo = 1.0 if lo == 0.0 else float(_sps.gammaincc(m_c, m_c * lo * lo / omega))
    if q_lo < cfg.min_tail_mass:
        raise NormalizationError(
            f"cell radius >= {lo:.2f} m has mass {q_lo:.2e}, below "
            f"{cfg.min_tail_mass:.0e}; conditional pmf is degenerate"
        )
    hi = math.sqrt(omega / m_c * float(_sps.gammainccinv(m_c, cfg.tail_eps * q_lo)))
    x, w = _gl(cfg.radius_nodes)
    half = (hi - lo) / 2.0
    r = lo + half * (x + 1.0)
    wts = half * w * nakagami_pdf(r, m_c, omega) / q_lo
    return r, wts


def load_pmf(scenario: Scenario, bs_tier_id: int,
             cfg: LoadModelConfig | None = None,
             min_radius: float | None = None) -> LoadPmf:
    """Pmf of the number of users in a cell of the given station tier.

    min_radius conditions the cell radius on being at least that large
    (the view of a user who knows its nearest station's distance).
    """
    cfg = cfg or LoadModelConfig()
    scenario.bs_tier(bs_tier_id)  # validates the id
    r, wts = _radius_quadrature(scenario, cfg, min_radius)
    n = cfg.dft_size
    half = n // 2
    thetas = np.exp(2j * math.pi * np.arange(half + 1) / n)
    grid = _pgf_grid(scenario, bs_tier_id, thetas, r, cfg)
    samples = np.empty(n, dtype=complex)
    samples[: half + 1] = grid @ wts
    samples[half + 1:] = np.conj(samples[1:half][::-1])
    return _pmf_from_samples(samples)


def _pmf_from_samples(samples: np.ndarray) -> LoadPmf:
    probs = inverse_dft_real(samples)
    raw = float(probs.sum())
    if probs.min() < -1e-9:
        raise NormalizationError(
            f"pmf has an entry {probs.min():.3e} below the -1e-9 clamp limit"
        )
    probs = np.maximum(probs, 0.0)
    if abs(raw - 1.0) > 1e-4:
        raise NormalizationError(f"pmf mass {raw:.6f} outside 1 +/- 1e-4")
    return LoadPmf(probs=probs, raw_sum=raw)


def _mean_load_at_radius(scenario: Scenario, bs_tier_id: int, r_c: float,
                         cfg: LoadModelConfig) -> float:
    """Mean cell load at a fixed cell radius (derivative of the generating
    function at theta = 1)."""
    r = np.asarray([float(r_c)])
    total = 0.0
    for kind, p in _tier_factors(scenario, bs_tier_id):
        if kind == "cat3":
            total += math.pi * p["intensity"] * r_c * r_c
        elif kind == "linked":
            total += p["mean_cluster"] * min(r_c, p["cluster_radius"]) ** 2 \
                / p["cluster_radius"] ** 2
        else:
            chi = cfg.chi_of(r) if p["excluded"] else np.zeros(1)
            nodes, wts = _ring_tables(r, p["cluster_radius"], chi, cfg.ring_nodes)
            xi_mat = xi(r[:, None], nodes, p["cluster_radius"])
            total += 2.0 * math.pi * p["parent_intensity"] * p["mean_cluster"] \
                * float((xi_mat * wts).sum())
    return total


def awake_prob_given_distance(scenario: Scenario, bs_tier_id: int, mu,
                              r: float, cfg: LoadModelConfig | None = None,
                              boundary_prob: float = 0.0) -> float:
    """P(load >= mu) for a station whose cell radius is at least r.

    Beyond the cell-radius tail (conditioning mass under min_tail_mass) the
    radius distribution is treated as a point mass at r: such a cell is so
    large that either the threshold is far below the mean load (awake with
    probability 1 up to a negligible lower-tail bound) or the pmf at the
    fixed radius decides.
    """
    cfg = cfg or LoadModelConfig()
    if math.isinf(mu):
        return 0.0
    if mu <= 0:
        return 1.0
    m_c = cfg.cell_shape
    omega = scenario.mean_cell_area
    q_lo = float(_sps.gammaincc(m_c, m_c * r * r / omega))
    if q_lo >= cfg.min_tail_mass:
        pmf = load_pmf(scenario, bs_tier_id, cfg, min_radius=r)
        return pmf.awake_prob(mu, boundary_prob)
    mean = _mean_load_at_radius(scenario, bs_tier_id, r, cfg)
    if mu <= 0.25 * mean:
        return 1.0
    size = max(cfg.dft_size, 1 << int(math.ceil(math.log2(max(4.0 * mean, 16.0)))))
    thetas = np.exp(2j * math.pi * np.arange(size) / size)
    samples = pgf_total(thetas, r, scenario, bs_tier_id, cfg)
    pmf = _pmf_from_samples(samples)
    return pmf.awake_prob(mu, boundary_prob)


def threshold_from_ratio(probs, q: float):
    """Load threshold mu and boundary awake probability achieving a target
    awake ratio q against the given load pmf.

    With T(t) = P(load >= t): mu = min{t : T(t) <= q} and the boundary load
    mu-1 stays awake with probability (q - T(mu)) / p(mu-1), so the overall
    awake probability is exactly q.  q = 1 gives mu = 0 (always awake);
    q = 0 gives mu = inf (never awake).
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"awake ratio must lie in [0, 1], got {q}")
    p = np.asarray(probs, dtype=float)
    if q >= 1.0:
        return 0, 0.0
    if q <= 0.0:
        return math.inf, 0.0
    tail = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])  # tail[t], t = 0..n
    mu = int(np.argmax(tail <= q))
    if mu == 0:
        return 0, 0.0
    pboundary = float(p[mu - 1])
    pb = (q - float(tail[mu])) / pboundary if pboundary > 0 else 0.0
    return mu, float(min(max(pb, 0.0), 1.0))
