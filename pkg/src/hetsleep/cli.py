"""Command-line front end: scenario files, figure-style data products,
validation runner, CSV/JSON emission.

Subcommands
  loadpmf   per-cell load pmf of one station tier (analytic; optional
            simulated column) with total-variation footer
  metrics   AAKCP / ASE / net power / EE at one operating point
  sweep     efficiency curves over one design parameter, argmax marked
  mc        metrics restricted to the simulation engine
  validate  cross-validation suite under a wall-clock budget

Conventions
  - scenario files are flat JSON; dB and dBm quantities carry the unit
    in the key name (tau_db, tx_power_dbm) so nothing is converted
    silently; scenarios/table2.json is the canonical fixture
  - every CSV body starts with a "# schema=..." line and parsers reject
    versions they do not know
  - output is byte-stable: rerunning a command with the same seed
    reproduces the identical CSV body
  - exit codes: 0 ok, 1 numerical failure, 2 config error,
    3 validation failure, 4 budget exceeded
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .analytic import (
    AnalyticConfig,
    CoverageEngine,
    PowerModel,
    ase,
    energy_efficiency,
    metrics as analytic_metrics,
    power_net,
)
from .channel import ChannelParams
from .load import (
    LoadModelConfig,
    LoadPmf,
    NormalizationError,
    SleepPolicy,
    TierSleep,
    load_pmf,
)
from .pointproc import BsTier, Scenario, UeTier
from .specfun import ArgumentRangeError, ConvergenceError
from . import montecarlo

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_BUDGET = 4

SCENARIO_SCHEMA = "hetsleep.scenario.v1"
LOADPMF_SCHEMA = "hetsleep.loadpmf.v1"
METRICS_SCHEMA = "hetsleep.metrics.v1"
SWEEP_SCHEMA = "hetsleep.sweep.v1"
VALIDATE_SCHEMA = "hetsleep.validate.v1"

SWEEP_PARAMS = ("tau_db", "q", "power_dbm", "antennas", "epsilon")
SLEEP_MODES = ("strategic", "random", "none")


class ConfigError(ValueError):
    """Scenario or command-line input that cannot be honoured."""


# ===== scenario files =====

def dbm_to_w(dbm: float) -> float:
    return 10.0 ** (float(dbm) / 10.0 - 3.0)


def w_to_dbm(w: float) -> float:
    return 10.0 * math.log10(float(w)) + 30.0


_TOP_KEYS = {
    "schema", "name", "beta", "alpha", "m_nakagami", "noise_power",
    "d_over_wavelength", "r_min_m", "r_max_m", "tau_db", "window_side_m",
    "wrap", "p_stat_w", "p_sleep_w", "p_a_w", "delta_p",
    "bs_tiers", "ue_tiers",
}
_BS_KEYS = {"tier_id", "kind", "intensity_per_m2", "tx_power_dbm",
            "n_antennas"}
_UE_KEYS = {"tier_id", "category", "intensity_per_m2",
            "parent_intensity_per_m2", "mean_cluster", "cluster_radius_m",
            "coupled_bs_tier"}


def scenario_from_dict(d: dict) -> tuple[Scenario, PowerModel]:
    """Build (Scenario, PowerModel) from a flat scenario dictionary.

    Key names mirror the canonical parameter table; unknown keys are
    rejected so typos cannot silently fall back to defaults.
    """
    if not isinstance(d, dict):
        raise ConfigError(f"scenario root must be an object, got {type(d).__name__}")
    unknown = sorted(set(d) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario keys {unknown}")
    schema = d.get("schema", SCENARIO_SCHEMA)
    if schema != SCENARIO_SCHEMA:
        raise ConfigError(
            f"unknown scenario schema {schema!r}; expected {SCENARIO_SCHEMA!r}")
    try:
        channel = ChannelParams(
            beta=d.get("beta", 1.0),
            alpha=d.get("alpha", 4.0),
            m_nakagami=d.get("m_nakagami", 1),
            noise_power=d.get("noise_power", 3e-2),
            d_over_wavelength=d.get("d_over_wavelength", 0.5),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e

    bs_tiers = []
    for i, entry in enumerate(d.get("bs_tiers", [])):
        bad = sorted(set(entry) - _BS_KEYS)
        if bad:
            raise ConfigError(f"bs_tiers[{i}]: unknown keys {bad}")
        try:
            bs_tiers.append(BsTier(
                tier_id=int(entry["tier_id"]),
                kind=entry.get("kind", "base"),
                intensity=float(entry["intensity_per_m2"]),
                tx_power_w=dbm_to_w(entry["tx_power_dbm"]),
                n_antennas=int(entry["n_antennas"]),
            ))
        except KeyError as e:
            raise ConfigError(f"bs_tiers[{i}]: missing key {e.args[0]!r}") from e
        except ValueError as e:
            raise ConfigError(f"bs_tiers[{i}]: {e}") from e

    ue_tiers = []
    for i, entry in enumerate(d.get("ue_tiers", [])):
        bad = sorted(set(entry) - _UE_KEYS)
        if bad:
            raise ConfigError(f"ue_tiers[{i}]: unknown keys {bad}")
        try:
            ue_tiers.append(UeTier(
                tier_id=int(entry["tier_id"]),
                category=int(entry["category"]),
                intensity=float(entry.get("intensity_per_m2", 0.0)),
                parent_intensity=float(entry.get("parent_intensity_per_m2", 0.0)),
                mean_cluster=float(entry.get("mean_cluster", 0.0)),
                cluster_radius=float(entry.get("cluster_radius_m", 0.0)),
                coupled_bs_tier=entry.get("coupled_bs_tier"),
            ))
        except KeyError as e:
            raise ConfigError(f"ue_tiers[{i}]: missing key {e.args[0]!r}") from e
        except ValueError as e:
            raise ConfigError(f"ue_tiers[{i}]: {e}") from e

    try:
        sc = Scenario(
            bs_tiers=tuple(bs_tiers),
            ue_tiers=tuple(ue_tiers),
            channel=channel,
            r_min=float(d.get("r_min_m", 1.0)),
            r_max=float(d.get("r_max_m", 400.0)),
            window_side=d.get("window_side_m"),
            wrap=d.get("wrap", "toroidal"),
            tau_db=float(d.get("tau_db", 5.0)),
        )
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from e
    pm = PowerModel(
        p_stat_w=float(d.get("p_stat_w", 260.0)),
        p_sleep_w=float(d.get("p_sleep_w", 75.0)),
        p_a_w=float(d.get("p_a_w", 1.0)),
        delta_p=float(d.get("delta_p", 4.0)),
    )
    return sc, pm


def scenario_to_dict(sc: Scenario, pm: PowerModel, name: str = "") -> dict:
    """Inverse of scenario_from_dict up to float formatting of dBm."""
    ch = sc.channel
    d = {
        "schema": SCENARIO_SCHEMA,
        "beta": ch.beta,
        "alpha": ch.alpha,
        "m_nakagami": ch.m_nakagami,
        "noise_power": ch.noise_power,
        "d_over_wavelength": ch.d_over_wavelength,
        "r_min_m": sc.r_min,
        "r_max_m": sc.r_max,
        "tau_db": sc.tau_db,
        "window_side_m": sc.window_side,
        "wrap": sc.wrap,
        "p_stat_w": pm.p_stat_w,
        "p_sleep_w": pm.p_sleep_w,
        "p_a_w": pm.p_a_w,
        "delta_p": pm.delta_p,
        "bs_tiers": [
            {
                "tier_id": t.tier_id,
                "kind": t.kind,
                "intensity_per_m2": t.intensity,
                # 1e-10 dBm of rounding kills float dust from the W->dBm trip
                "tx_power_dbm": round(w_to_dbm(t.tx_power_w), 10),
                "n_antennas": t.n_antennas,
            }
            for t in sc.bs_tiers
        ],
        "ue_tiers": [],
    }
    if name:
        d["name"] = name
    for u in sc.ue_tiers:
        entry = {"tier_id": u.tier_id, "category": u.category}
        if u.category == 1:
            entry["parent_intensity_per_m2"] = u.parent_intensity
            entry["mean_cluster"] = u.mean_cluster
            entry["cluster_radius_m"] = u.cluster_radius
        elif u.category == 2:
            entry["coupled_bs_tier"] = u.coupled_bs_tier
            entry["mean_cluster"] = u.mean_cluster
            entry["cluster_radius_m"] = u.cluster_radius
        else:
            entry["intensity_per_m2"] = u.intensity
        d["ue_tiers"].append(entry)
    return d


def load_scenario(path: str) -> tuple[Scenario, PowerModel]:
    if not os.path.exists(path):
        raise ConfigError(f"scenario file not found: {path}")
    with open(path, encoding="utf-8") as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        return scenario_from_dict(d)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e


def save_scenario(path: str, sc: Scenario, pm: PowerModel, name: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(scenario_to_dict(sc, pm, name), f, indent=2)
        f.write("\n")


# ===== CSV emission =====

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(schema: str, header: list, rows: list, out: str | None) -> str:
    """Emit one CSV table (schema line, header, rows) to out or stdout."""
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


def write_json(payload: dict, out: str | None) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text


def read_table(path: str, schema: str) -> tuple[list, list]:
    """Parse a CSV written by write_table, enforcing the schema line."""
    with open(path, encoding="utf-8") as f:
        first = f.readline().strip()
        if not first.startswith("# schema="):
            raise ConfigError(f"{path}: missing schema line")
        found = first.split("=", 1)[1]
        if found != schema:
            raise ConfigError(
                f"{path}: unknown schema {found!r}; expected {schema!r}")
        reader = csv.reader(f)
        rows = [row for row in reader if row]
    return rows[0], rows[1:]


# ===== run configuration =====

@dataclass(frozen=True)
class RunConfig:
    """Validated plumbing common to every subcommand."""

    scenario_path: str
    engine: str = "analytic"
    out: str | None = None
    seed: int = 1
    log_level: str = "warning"
    sweep: tuple | None = None  # (param, values) when sweeping

    def __post_init__(self):
        if self.engine not in ("analytic", "mc", "both"):
            raise ConfigError(f"engine must be analytic|mc|both, got {self.engine!r}")
        if not os.path.exists(self.scenario_path):
            raise ConfigError(f"scenario file not found: {self.scenario_path}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.sweep is not None:
            param, values = self.sweep
            if param not in SWEEP_PARAMS:
                raise ConfigError(
                    f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}")
            if len(values) == 0:
                raise ConfigError("sweep grid is empty")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError("sweep grid must be strictly increasing")


def _run_config(args, sweep=None) -> RunConfig:
    return RunConfig(
        scenario_path=args.scenario,
        engine=getattr(args, "engine", "analytic"),
        out=args.out,
        seed=args.seed,
        log_level=args.log,
        sweep=sweep,
    )


# ===== tier-keyed flag parsing =====

def _parse_tier_map(pairs, flag: str, cast=float):
    """Parse repeated flag values: a bare scalar, or tier:value pairs.

    Returns a float (applies to every tier) or {tier_id: value}.
    """
    if not pairs:
        return None
    as_map = {}
    scalar = None
    for raw in pairs:
        if ":" in raw:
            tid_s, val_s = raw.split(":", 1)
            try:
                as_map[int(tid_s)] = cast(val_s)
            except ValueError as e:
                raise ConfigError(f"{flag} {raw!r}: {e}") from e
        else:
            if len(pairs) > 1:
                raise ConfigError(
                    f"{flag} given several times needs tier:value pairs")
            try:
                scalar = cast(raw)
            except ValueError as e:
                raise ConfigError(f"{flag} {raw!r}: {e}") from e
    if as_map and scalar is not None:
        raise ConfigError(f"{flag}: mix of scalar and tier:value forms")
    return as_map or scalar


def _q_of(q_map, tier_id: int) -> float:
    if q_map is None:
        return 1.0
    if isinstance(q_map, dict):
        return float(q_map[tier_id])
    return float(q_map)


def _map_label(m) -> str:
    if isinstance(m, dict):
        return ",".join(f"{tid}:{v:g}" for tid, v in sorted(m.items()))
    return f"{float(m):g}"


def _policy_label(mode: str, q_map, mu_map) -> str:
    if mu_map is not None:
        return f"ss mu={_map_label(mu_map)}"
    if mode == "none":
        return "always-on"
    tag = "ss" if mode == "strategic" else "rs"
    return f"{tag} q={_map_label(q_map if q_map is not None else 1.0)}"


# ===== policy resolution =====

def _strategic_from_mu(sc: Scenario, mu_map, pmfs: dict) -> SleepPolicy:
    """Fixed thresholds; q is the achieved awake ratio under each pmf."""
    tiers = {}
    for t in sc.bs_tiers:
        mu = float(mu_map[t.tier_id]) if isinstance(mu_map, dict) \
            else float(mu_map)
        achieved = pmfs[t.tier_id].awake_prob(mu, 0.0)
        tiers[t.tier_id] = TierSleep("strategic", achieved, mu, 0.0)
    return SleepPolicy(tiers)


def _analytic_pmfs(sc: Scenario, lcfg: LoadModelConfig) -> dict:
    return {t.tier_id: load_pmf(sc, t.tier_id, lcfg) for t in sc.bs_tiers}


def _empirical_pmfs(tables) -> dict:
    out = {}
    for tid, h in tables.load_hist.items():
        total = h.sum()
        if total == 0:
            raise NormalizationError(f"no cells observed for bs tier {tid}")
        out[tid] = LoadPmf(probs=h / total, raw_sum=1.0)
    return out


def _resolve_policy(sc: Scenario, mode: str, q_map, mu_map,
                    pmfs: dict | None) -> SleepPolicy:
    """Map CLI sleep flags onto a SleepPolicy.

    pmfs supplies the load law used for strategic thresholds: analytic
    pmfs for the closed-form engine, the trial tables' own histograms
    for the simulator, so each engine realizes the requested q exactly.
    """
    if mu_map is not None:
        return _strategic_from_mu(sc, mu_map, pmfs)
    if mode == "none":
        return SleepPolicy.always_on(sc)
    q = q_map if q_map is not None else 1.0
    if mode == "random":
        return SleepPolicy.random(sc, q)
    return SleepPolicy.strategic(sc, q, pmfs=pmfs)


# ===== loadpmf =====

def cmd_loadpmf(args) -> int:
    _run_config(args)
    sc, _ = load_scenario(args.scenario)
    try:
        sc.bs_tier(args.tier)
    except KeyError:
        valid = ", ".join(str(t.tier_id) for t in sc.bs_tiers)
        raise ConfigError(
            f"no bs tier with id {args.tier}; valid tiers: {valid}")
    if args.rows < 1:
        raise ConfigError("--rows must be positive")
    if args.mc_trials and args.min_radius is not None:
        raise ConfigError(
            "--min-radius conditions the analytic pmf only; drop --mc-trials")

    dft = 512
    while dft < args.rows:
        dft *= 2
    chi_modes = ("two_rc", "zero") if args.chi == "both" else (args.chi,)
    cols = []
    for mode in chi_modes:
        lcfg = LoadModelConfig(chi_mode=mode, dft_size=dft)
        pmf = load_pmf(sc, args.tier, lcfg, min_radius=args.min_radius)
        cols.append((f"pmf_chi_{mode}", pmf.probs))
    if args.mc_trials:
        cfg = montecarlo.McConfig(trials=args.mc_trials, seed=args.seed)
        pmf = montecarlo.empirical_load_pmf(sc, args.tier, cfg)
        cols.append(("pmf_mc", pmf.probs))

    n = args.rows
    full = max(len(p) for _, p in cols)
    aligned = [np.pad(p, (0, full - len(p))) for _, p in cols]
    rows = [[i] + [p[i] if i < len(p) else 0.0 for _, p in cols]
            for i in range(n)]
    # footer: total-variation distance of each full pmf against the first
    ref = aligned[0]
    footer = ["tv_vs_first"] + [0.5 * float(np.abs(p - ref).sum())
                                for p in aligned]
    rows.append(footer)
    write_table(LOADPMF_SCHEMA, ["n"] + [name for name, _ in cols], rows,
                args.out)
    return EXIT_OK


# ===== metrics / mc =====

def _metric_columns(sc: Scenario) -> list:
    cols = ["engine", "policy", "tau_db", "aakcp", "ci_halfwidth", "trials",
            "ase_bps_hz_m2", "power_w_m2", "ee_bits_joule"]
    cols += [f"aakcp_ue_{u.tier_id}" for u in sc.ue_tiers]
    cols += [f"achieved_q_{t.tier_id}" for t in sc.bs_tiers]
    return cols


def _metric_row(sc, report, est, policy) -> list:
    row = [report.engine, report.policy_label, report.tau_db, report.aakcp,
           est.ci_halfwidth if est is not None else None,
           est.trials if est is not None else None,
           report.ase_bps_hz_m2, report.power_w_m2, report.ee_bits_joule]
    row += [report.aakcp_by_ue_tier[u.tier_id] for u in sc.ue_tiers]
    row += [policy.awake_ratio(t.tier_id) for t in sc.bs_tiers]
    return row


def cmd_metrics(args, engine: str | None = None) -> int:
    _run_config(args)
    sc, pm = load_scenario(args.scenario)
    engine = engine or args.engine
    q_map = _parse_tier_map(args.q, "--q")
    mu_map = _parse_tier_map(args.mu, "--mu")
    if q_map is not None and mu_map is not None:
        raise ConfigError("give --q or --mu, not both")
    mode = "strategic" if mu_map is not None else args.mode
    tau_db = sc.tau_db if args.tau_db is None else float(args.tau_db)
    tau = 10.0 ** (tau_db / 10.0)
    label = _policy_label(mode, q_map, mu_map)
    lcfg = LoadModelConfig()
    needs_pmfs = mu_map is not None or mode == "strategic"

    rows = []
    if engine in ("analytic", "both"):
        pmfs = _analytic_pmfs(sc, lcfg) if needs_pmfs else None
        pol = _resolve_policy(sc, mode, q_map, mu_map, pmfs)
        rep = analytic_metrics(sc, tau, pol, pm, lcfg, policy_label=label)
        rows.append(_metric_row(sc, rep, None, pol))
    if engine in ("mc", "both"):
        cfg = montecarlo.McConfig(trials=args.trials, seed=args.seed)
        tables = montecarlo.build_tables(sc, cfg)
        pmfs = _empirical_pmfs(tables) if needs_pmfs else None
        pol = _resolve_policy(sc, mode, q_map, mu_map, pmfs)
        rep, est = montecarlo.run_metrics(
            sc, replace(cfg, policy=pol), tau=tau, power_model=pm,
            tables=tables, policy_label=label)
        rows.append(_metric_row(sc, rep, est, pol))

    header = _metric_columns(sc)
    if args.out and args.out.endswith(".json"):
        payload = {
            "schema": METRICS_SCHEMA,
            "rows": [
                {k: (None if v is None else
                     v if isinstance(v, str) else float(v))
                 for k, v in zip(header, row)}
                for row in rows
            ],
        }
        write_json(payload, args.out)
    else:
        write_table(METRICS_SCHEMA, header, rows, args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    return cmd_metrics(args, engine="mc")


# ===== sweep =====

def _sweep_values(args) -> list:
    if (args.values is None) == (args.range is None):
        raise ConfigError("give exactly one of --values or --range")
    if args.values is not None:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as e:
            raise ConfigError(f"--values: {e}") from e
    else:
        parts = args.range.split(":")
        if len(parts) != 3:
            raise ConfigError("--range needs lo:hi:steps")
        try:
            lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as e:
            raise ConfigError(f"--range: {e}") from e
        if steps < 1:
            raise ConfigError("--range needs at least one step")
        if steps > 1 and hi <= lo:
            raise ConfigError("--range bounds must satisfy lo < hi")
        vals = [lo] if steps == 1 else list(np.linspace(lo, hi, steps))
    if args.param == "antennas":
        ints = [int(round(v)) for v in vals]
        if any(abs(v - i) > 1e-9 or i < 1 for v, i in zip(vals, ints)):
            raise ConfigError("antenna counts must be positive integers")
        return ints
    if args.param in ("q", "epsilon") and any(not 0 <= v <= 1 for v in vals):
        raise ConfigError(f"{args.param} values must lie in [0, 1]")
    return vals


def _analytic_sweep(sc, pm, lcfg, acfg, param, values, q_grid, modes,
                    tau_db) -> list:
    """Closed-form counterpart of montecarlo.run_sweep (same row dicts)."""
    rows = []
    base_tau = 10.0 ** (tau_db / 10.0)
    pmfs = _analytic_pmfs(sc, lcfg) if "strategic" in modes else None

    def pol_for(mode, q):
        if mode == "none":
            return SleepPolicy.always_on(sc)
        if mode == "random":
            return SleepPolicy.random(sc, q)
        return SleepPolicy.strategic(sc, q, pmfs=pmfs)

    def add_row(value, mode, q, tdb, mix, sc_v, pol, pm_v):
        tau = 10.0 ** (tdb / 10.0)
        ase_v = ase(sc_v, tau, mix)
        p_v = power_net(sc_v, pol, pm_v)
        rows.append({
            "param": param, "value": value, "mode": mode, "q": q,
            "tau_db": tdb, "aakcp": mix, "ci_halfwidth": None,
            "trials": None, "ase_bps_hz_m2": ase_v, "power_w_m2": p_v,
            "ee_bits_joule": energy_efficiency(ase_v, p_v),
        })

    curves = [(mode, q) for mode in modes
              for q in ((1.0,) if mode == "none" else q_grid)]
    if param == "q":
        curves = [(mode, None) for mode in modes]

    engine = CoverageEngine(sc, lcfg, acfg)
    if param in ("tau_db", "q", "epsilon"):
        for mode, q in curves:
            if param == "q":
                for v in values:
                    pol = pol_for(mode, float(v))
                    mix, _ = engine.aakcp(base_tau, pol)
                    add_row(float(v), mode, float(v), tau_db, mix, sc, pol, pm)
            elif param == "tau_db":
                pol = pol_for(mode, float(q))
                for v in values:
                    mix, _ = engine.aakcp(10.0 ** (float(v) / 10.0), pol)
                    add_row(float(v), mode, float(q), float(v), mix, sc, pol, pm)
            else:
                pol = pol_for(mode, float(q))
                mix, _ = engine.aakcp(base_tau, pol)
                for v in values:
                    pm_v = PowerModel(p_stat_w=pm.p_stat_w,
                                      p_sleep_w=float(v) * pm.p_stat_w,
                                      p_a_w=pm.p_a_w, delta_p=pm.delta_p)
                    add_row(float(v), mode, float(q), tau_db, mix, sc, pol, pm_v)
        return rows

    # power_dbm / antennas change the link budget, not the load law, so
    # every variant engine shares the base engine's conditional-pmf caches
    for v in values:
        if param == "power_dbm":
            sc_v = montecarlo._scenario_with(sc, powers=dbm_to_w(v))
        else:
            sc_v = montecarlo._scenario_with(sc, antennas=int(v))
        eng_v = CoverageEngine(sc_v, lcfg, acfg)
        eng_v._pmf_cache = engine._pmf_cache
        eng_v._mean_cache = engine._mean_cache
        eng_v._pinned_cache = engine._pinned_cache
        for mode, q in curves:
            pol = pol_for(mode, float(q))
            mix, _ = eng_v.aakcp(base_tau, pol)
            add_row(float(v) if param == "power_dbm" else int(v), mode,
                    float(q), tau_db, mix, sc_v, pol, pm)
    return rows


def _mark_argmax(rows: list) -> None:
    """Flag the best-EE row of each (mode, q) curve in place."""
    best = {}
    for i, r in enumerate(rows):
        key = (r["mode"], r["q"] if r["param"] != "q" else None)
        if key not in best or r["ee_bits_joule"] > rows[best[key]]["ee_bits_joule"]:
            best[key] = i
    for i, r in enumerate(rows):
        r["is_argmax"] = 1 if i in best.values() else 0


def cmd_sweep(args) -> int:
    values = _sweep_values(args)
    _run_config(args, sweep=(args.param, values))
    sc, pm = load_scenario(args.scenario)
    if args.engine == "both":
        raise ConfigError("sweep runs one engine at a time: analytic or mc")
    try:
        q_grid = tuple(float(v) for v in args.q_grid.split(",") if v.strip())
        modes = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    except ValueError as e:
        raise ConfigError(f"--q-grid: {e}") from e
    bad = [m for m in modes if m not in SLEEP_MODES]
    if bad:
        raise ConfigError(f"unknown sleep modes {bad}; pick from {SLEEP_MODES}")
    if any(not 0 <= q <= 1 for q in q_grid):
        raise ConfigError("--q-grid values must lie in [0, 1]")
    tau_db = sc.tau_db if args.tau_db is None else float(args.tau_db)

    if args.engine == "mc":
        cfg = montecarlo.McConfig(trials=args.trials, seed=args.seed)
        tables = montecarlo.build_tables(sc, cfg)
        rows = []
        for mode in modes:
            grid = (1.0,) if mode == "none" else q_grid
            rows += montecarlo.run_sweep(
                sc, cfg, args.param, values, q_grid=grid, modes=(mode,),
                tau_db=tau_db, power_model=pm, tables=tables)
        engine_name = "mc"
    else:
        rows = _analytic_sweep(sc, pm, LoadModelConfig(), AnalyticConfig(),
                               args.param, values, q_grid, modes, tau_db)
        engine_name = "analytic"

    _mark_argmax(rows)
    header = ["param", "value", "mode", "q", "tau_db", "engine", "aakcp",
              "ci_halfwidth", "trials", "ase_bps_hz_m2", "power_w_m2",
              "ee_bits_joule", "is_argmax"]
    out_rows = [[r["param"], r["value"], r["mode"], r["q"], r["tau_db"],
                 engine_name, r["aakcp"], r["ci_halfwidth"], r["trials"],
                 r["ase_bps_hz_m2"], r["power_w_m2"], r["ee_bits_joule"],
                 r["is_argmax"]] for r in rows]
    write_table(SWEEP_SCHEMA, header, out_rows, args.out)
    return EXIT_OK


# ===== validate =====

def cmd_validate(args) -> int:
    _run_config(args)
    sc, pm = load_scenario(args.scenario)
    from . import validation

    results, exceeded = validation.run_all(
        sc, pm, seed=args.seed, budget_s=args.budget, trials=args.trials,
        pmf_realizations=args.pmf_realizations, only=args.only,
        echo=print)
    rows = [[r.name, int(r.passed), round(r.seconds, 3), r.detail]
            for r in results]
    if args.out:
        write_table(VALIDATE_SCHEMA, ["criterion", "passed", "seconds",
                                      "detail"], rows, args.out)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    if exceeded:
        print(f"budget of {args.budget:.0f} s exceeded; report is partial",
              file=sys.stderr)
        return EXIT_BUDGET
    if n_pass < len(results):
        return EXIT_VALIDATION
    return EXIT_OK


# ===== argument parsing =====

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario JSON file (see scenarios/table2.json)")
    common.add_argument("--seed", type=int, default=1,
                        help="root seed for every stochastic step")
    common.add_argument("--out", default=None,
                        help="output file (default: stdout)")
    common.add_argument("--engine", choices=("analytic", "mc", "both"),
                        default="analytic", help="evaluation engine")
    common.add_argument("--log", choices=("debug", "info", "warning", "error"),
                        default="warning", help="log level")

    p = argparse.ArgumentParser(
        prog="hetsleep",
        description="Coverage, throughput and energy efficiency of "
                    "sleep-controlled multi-tier networks.")
    sub = p.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("loadpmf", parents=[common],
                        help="per-cell load pmf of one station tier")
    lp.add_argument("--tier", type=int, required=True, help="bs tier id")
    lp.add_argument("--rows", type=int, default=512,
                    help="pmf rows to emit (default 512)")
    lp.add_argument("--min-radius", type=float, default=None,
                    help="condition on cell radius >= this many meters")
    lp.add_argument("--chi", choices=("two_rc", "zero", "both"),
                    default="both", help="parent exclusion-radius mode")
    lp.add_argument("--mc-trials", type=int, default=0,
                    help="add a simulated pmf column from this many trials")
    lp.set_defaults(fn=cmd_loadpmf)

    def metric_flags(sp, with_trials_default):
        sp.add_argument("--q", action="append", default=None,
                        help="awake ratio: scalar or tier:value (repeatable)")
        sp.add_argument("--mu", action="append", default=None,
                        help="load threshold: scalar or tier:value; reports "
                             "the achieved q per tier")
        sp.add_argument("--mode", choices=SLEEP_MODES, default="strategic",
                        help="sleep mode used with --q (default strategic)")
        sp.add_argument("--tau-db", type=float, default=None,
                        help="SINR threshold (default: scenario tau_db)")
        sp.add_argument("--trials", type=int, default=with_trials_default,
                        help="simulation trials (mc engine)")

    mt = sub.add_parser("metrics", parents=[common],
                        help="AAKCP / ASE / net power / EE at one point")
    metric_flags(mt, 10000)
    mt.set_defaults(fn=cmd_metrics)

    mm = sub.add_parser("mc", parents=[common],
                        help="metrics with the simulation engine only")
    metric_flags(mm, 10000)
    mm.set_defaults(fn=cmd_mc)

    sw = sub.add_parser("sweep", parents=[common],
                        help="EE curves over one design parameter")
    sw.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    sw.add_argument("--values", default=None,
                    help="comma-separated grid, e.g. 0.25,0.5,1 "
                         "(use --values=-5,0,5 for negative entries)")
    sw.add_argument("--range", default=None,
                    help="lo:hi:steps inclusive linear grid "
                         "(use --range=-10:25:36 for negative bounds)")
    sw.add_argument("--q-grid", default="0.25,0.5,0.75,1",
                    help="awake ratios, one curve each (default Fig-style)")
    sw.add_argument("--modes", default="strategic,random",
                    help="comma-separated sleep modes per curve")
    sw.add_argument("--tau-db", type=float, default=None,
                    help="fixed SINR threshold for non-tau sweeps")
    sw.add_argument("--trials", type=int, default=10000,
                    help="simulation trials (mc engine)")
    sw.set_defaults(fn=cmd_sweep)

    va = sub.add_parser("validate", parents=[common],
                        help="run the cross-validation suite")
    va.add_argument("--budget", type=float, default=1800.0,
                    help="wall-clock budget in seconds (default 1800)")
    va.add_argument("--trials", type=int, default=100000,
                    help="simulation trials per coverage point")
    va.add_argument("--pmf-realizations", type=int, default=500,
                    help="realizations for the load-pmf criterion")
    va.add_argument("--only", action="append", default=None,
                    help="run only criteria whose name contains this "
                         "substring (repeatable)")
    va.set_defaults(fn=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log.upper()),
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConvergenceError, ArgumentRangeError, NormalizationError,
            ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
