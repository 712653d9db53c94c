"""Command-line front end: scenario codec, CSV schemas, exit codes."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hetsleep.cli import (
    ConfigError,
    LOADPMF_SCHEMA,
    METRICS_SCHEMA,
    SWEEP_SCHEMA,
    load_scenario,
    main,
    read_table,
    scenario_from_dict,
    scenario_to_dict,
    w_to_dbm,
)

TABLE2 = "scenarios/table2.json"


@pytest.fixture(scope="module")
def small_path(tmp_path_factory):
    """A light scenario so simulation-backed commands stay fast."""
    d = {
        "schema": "hetsleep.scenario.v1",
        "alpha": 4.0,
        "noise_power": 0.03,
        "r_min_m": 1.0,
        "r_max_m": 150.0,
        "tau_db": 5.0,
        "window_side_m": 300.0,
        "p_stat_w": 130.0,
        "p_sleep_w": 40.0,
        "bs_tiers": [
            {"tier_id": 1, "kind": "base", "intensity_per_m2": 1.2e-4,
             "tx_power_dbm": 30.0, "n_antennas": 8},
            {"tier_id": 2, "kind": "hotspot", "intensity_per_m2": 8e-5,
             "tx_power_dbm": 30.0, "n_antennas": 8},
        ],
        "ue_tiers": [
            {"tier_id": 1, "category": 1, "parent_intensity_per_m2": 6e-5,
             "mean_cluster": 6.0, "cluster_radius_m": 15.0},
            {"tier_id": 2, "category": 2, "coupled_bs_tier": 2,
             "mean_cluster": 8.0, "cluster_radius_m": 15.0},
            {"tier_id": 3, "category": 3, "intensity_per_m2": 4e-4},
        ],
    }
    path = tmp_path_factory.mktemp("scen") / "small.json"
    path.write_text(json.dumps(d))
    return str(path)


def _cells(path, schema):
    header, rows = read_table(path, schema)
    return header, [dict(zip(header, r)) for r in rows]


# ===== scenario files =====

def test_table2_fixture_matches_canonical_setup():
    sc, pm = load_scenario(TABLE2)
    assert [t.intensity for t in sc.bs_tiers] == [1e-4, 2.5e-5]
    assert [t.kind for t in sc.bs_tiers] == ["base", "hotspot"]
    for t in sc.bs_tiers:
        assert t.tx_power_w == pytest.approx(19.9526, rel=1e-4)
        assert t.n_antennas == 64
    assert sc.total_ue_density / sc.total_bs_intensity == pytest.approx(24.0)
    assert (sc.r_min, sc.r_max, sc.tau_db) == (1.0, 400.0, 5.0)
    assert sc.channel.alpha == 4.0 and sc.channel.noise_power == 0.03
    assert (pm.p_stat_w, pm.p_sleep_w, pm.p_a_w, pm.delta_p) == (260.0, 75.0, 1.0, 4.0)


def test_scenario_round_trip_is_semantically_identical():
    sc, pm = load_scenario(TABLE2)
    sc2, pm2 = scenario_from_dict(scenario_to_dict(sc, pm))
    assert pm2 == pm
    assert sc2.channel == sc.channel
    assert (sc2.r_min, sc2.r_max, sc2.tau_db) == (sc.r_min, sc.r_max, sc.tau_db)
    assert sc2.wrap == sc.wrap and sc2.window_side == sc.window_side
    assert sc2.ue_tiers == sc.ue_tiers
    for a, b in zip(sc2.bs_tiers, sc.bs_tiers):
        assert (a.tier_id, a.kind, a.intensity, a.n_antennas) == \
            (b.tier_id, b.kind, b.intensity, b.n_antennas)
        assert a.tx_power_w == pytest.approx(b.tx_power_w, rel=1e-12)


def test_dbm_round_trip():
    assert w_to_dbm(10.0 ** (43.0 / 10.0 - 3.0)) == pytest.approx(43.0, abs=1e-9)


def test_unknown_scenario_key_rejected():
    d = json.load(open(TABLE2))
    d["p_static_w"] = 1.0
    with pytest.raises(ConfigError, match="p_static_w"):
        scenario_from_dict(d)


def test_unknown_scenario_schema_rejected():
    d = json.load(open(TABLE2))
    d["schema"] = "hetsleep.scenario.v9"
    with pytest.raises(ConfigError, match="v9"):
        scenario_from_dict(d)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "alpha": 4.0,\n}\n')
    with pytest.raises(ConfigError, match=r"broken\.json:3"):
        load_scenario(str(p))


def test_missing_scenario_file_is_config_error(capsys):
    rc = main(["metrics", "--scenario", "/nonexistent.json"])
    assert rc == 2
    assert "not found" in capsys.readouterr().err


# ===== loadpmf =====

def test_loadpmf_rows_footer_and_chi_columns(tmp_path):
    out = str(tmp_path / "pmf.csv")
    rc = main(["loadpmf", "--scenario", TABLE2, "--tier", "1",
               "--rows", "16", "--out", out])
    assert rc == 0
    header, rows = read_table(out, LOADPMF_SCHEMA)
    assert header == ["n", "pmf_chi_two_rc", "pmf_chi_zero"]
    assert len(rows) == 17  # 16 pmf rows + footer
    assert [r[0] for r in rows[:-1]] == [str(i) for i in range(16)]
    footer = rows[-1]
    assert footer[0] == "tv_vs_first" and float(footer[1]) == 0.0
    assert 0.0 < float(footer[2]) < 1.0  # the exclusion radius matters


def test_loadpmf_mc_column_close_to_analytic(small_path, tmp_path):
    out = str(tmp_path / "pmf.csv")
    rc = main(["loadpmf", "--scenario", small_path, "--tier", "1",
               "--rows", "8", "--chi", "two_rc", "--mc-trials", "150",
               "--out", out])
    assert rc == 0
    header, rows = read_table(out, LOADPMF_SCHEMA)
    assert header == ["n", "pmf_chi_two_rc", "pmf_mc"]
    assert float(rows[-1][-1]) < 0.1


def test_loadpmf_unknown_tier_names_valid_ones(capsys):
    rc = main(["loadpmf", "--scenario", TABLE2, "--tier", "9"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "valid tiers: 1, 2" in err


# ===== metrics =====

def test_metrics_q_zero_edge(tmp_path):
    out = str(tmp_path / "m.csv")
    rc = main(["metrics", "--scenario", TABLE2, "--q", "0", "--out", out])
    assert rc == 0
    _, rows = _cells(out, METRICS_SCHEMA)
    r = rows[0]
    assert float(r["aakcp"]) == 0.0 and float(r["ee_bits_joule"]) == 0.0
    assert float(r["power_w_m2"]) == pytest.approx(1.25e-4 * 75.0)


def test_metrics_mu_reports_achieved_q(tmp_path):
    out = str(tmp_path / "m.json")
    rc = main(["metrics", "--scenario", TABLE2, "--mu", "1:4", "--mu", "2:30",
               "--out", out])
    assert rc == 0
    payload = json.load(open(out))
    assert payload["schema"] == METRICS_SCHEMA
    row = payload["rows"][0]
    assert row["policy"] == "ss mu=1:4,2:30"
    assert 0.0 < row["achieved_q_1"] < 1.0
    assert 0.0 < row["achieved_q_2"] <= 1.0
    # larger threshold on the loaded hotspot tier still keeps most awake
    assert row["achieved_q_2"] > 0.9


def test_metrics_both_engines(small_path, tmp_path):
    out = str(tmp_path / "m.csv")
    rc = main(["metrics", "--scenario", small_path, "--engine", "both",
               "--mode", "random", "--q", "0.6", "--trials", "400",
               "--out", out])
    assert rc == 0
    _, rows = _cells(out, METRICS_SCHEMA)
    assert [r["engine"] for r in rows] == ["analytic", "mc"]
    a, m = (float(r["aakcp"]) for r in rows)
    assert rows[0]["ci_halfwidth"] == "" and rows[1]["ci_halfwidth"] != ""
    assert rows[1]["trials"] == "400"
    assert abs(a - m) < 0.1
    for r in rows:
        assert float(r["achieved_q_1"]) == 0.6


def test_mc_subcommand_matches_metrics_mc_engine(small_path, tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    args = ["--scenario", small_path, "--q", "0.5", "--trials", "250"]
    assert main(["mc", *args, "--out", a]) == 0
    assert main(["metrics", *args, "--engine", "mc", "--out", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


# ===== sweep =====

def test_sweep_marks_argmax_once_per_curve(tmp_path):
    out = str(tmp_path / "s.csv")
    rc = main(["sweep", "--scenario", TABLE2, "--param", "tau_db",
               "--values=-5,5,15", "--q-grid", "0.5",
               "--modes", "random,none", "--out", out])
    assert rc == 0
    _, rows = _cells(out, SWEEP_SCHEMA)
    assert len(rows) == 6  # 3 values x (random q=0.5, always-on)
    for mode in ("random", "none"):
        curve = [r for r in rows if r["mode"] == mode]
        flags = [int(r["is_argmax"]) for r in curve]
        assert sum(flags) == 1
        ees = [float(r["ee_bits_joule"]) for r in curve]
        assert ees[flags.index(1)] == max(ees)


def test_sweep_epsilon_reuses_coverage(tmp_path):
    out = str(tmp_path / "s.csv")
    rc = main(["sweep", "--scenario", TABLE2, "--param", "epsilon",
               "--values", "0.1,0.29,0.6", "--q-grid", "0.5",
               "--modes", "random", "--out", out])
    assert rc == 0
    _, rows = _cells(out, SWEEP_SCHEMA)
    assert len({r["aakcp"] for r in rows}) == 1
    powers = [float(r["power_w_m2"]) for r in rows]
    assert powers == sorted(powers) and powers[0] < powers[-1]


def test_sweep_mc_engine_determinism(small_path, tmp_path):
    a, b, c = (str(tmp_path / n) for n in ("a.csv", "b.csv", "c.csv"))
    args = ["sweep", "--scenario", small_path, "--param", "q",
            "--values", "0.5,1", "--modes", "random", "--engine", "mc",
            "--trials", "200"]
    assert main([*args, "--seed", "3", "--out", a]) == 0
    assert main([*args, "--seed", "3", "--out", b]) == 0
    assert main([*args, "--seed", "4", "--out", c]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    assert open(a, "rb").read() != open(c, "rb").read()


def test_sweep_rejects_bad_grids(capsys):
    base = ["sweep", "--scenario", TABLE2, "--param", "tau_db"]
    assert main([*base, "--range", "25:-10:4"]) == 2
    assert main([*base, "--range", "0:10:3", "--values", "1,2"]) == 2
    assert main([*base]) == 2
    assert main(["sweep", "--scenario", TABLE2, "--param", "antennas",
                 "--values", "8,12.5"]) == 2
    assert main([*base, "--values", "0,5", "--engine", "both"]) == 2
    capsys.readouterr()


# ===== schema discipline =====

def test_read_table_rejects_unknown_schema(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# schema=hetsleep.metrics.v9\na,b\n1,2\n")
    with pytest.raises(ConfigError, match="unknown schema"):
        read_table(str(p), METRICS_SCHEMA)
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError, match="missing schema"):
        read_table(str(p), METRICS_SCHEMA)


# ===== validate plumbing =====

def test_validate_refuses_corrupt_alpha(tmp_path, capsys):
    d = json.load(open(TABLE2))
    d["alpha"] = 1.5
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    rc = main(["validate", "--scenario", str(p)])
    assert rc == 2
    assert "alpha must exceed 2" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hetsleep.cli", "metrics",
         "--scenario", TABLE2, "--q", "0", "--mode", "random"],
        capture_output=True, text=True, cwd=".")
    assert proc.returncode == 0
    assert proc.stdout.startswith(f"# schema={METRICS_SCHEMA}\n")
