"""Desk-scale checks of the validation suite plumbing.

The slow criteria are exercised for real by tests/test_acceptance.py;
here we pin the harness behavior (ordering, filtering, budget stop)
and run the cheap closed-form criteria end to end.
"""

from hetsleep import cli, validation


def _scenario():
    return cli.load_scenario("scenarios/table2.json")


def test_fast_criteria_pass_at_desk_scale():
    sc, pm = _scenario()
    results, exceeded = validation.run_all(
        sc, pm, seed=3, budget_s=600.0, trials=50, pmf_realizations=10,
        only=["4-", "5-", "6-"])
    assert not exceeded
    assert [r.name for r in results] == [
        "4-special-functions", "5-theorem-consistency", "6-lt-derivatives"]
    for r in results:
        assert r.passed, f"{r.name}: {r.detail}"
        assert r.detail  # deterministic text, used by cmd_validate output


def test_budget_stop_reports_partial():
    sc, pm = _scenario()
    results, exceeded = validation.run_all(
        sc, pm, seed=3, budget_s=-1.0, trials=50, pmf_realizations=10)
    assert exceeded
    assert results == []


def test_criterion_names_cover_all_nine():
    assert len(validation.CRITERION_NAMES) == 9
    assert validation.CRITERION_NAMES == [n for n, _ in validation.CRITERIA]
    assert [n.split("-")[0] for n in validation.CRITERION_NAMES] == [
        str(i) for i in range(1, 10)]


def test_determinism_criterion_runs_quickly():
    sc, pm = _scenario()
    results, exceeded = validation.run_all(
        sc, pm, seed=3, budget_s=600.0, trials=50, pmf_realizations=10,
        only=["8-"])
    assert not exceeded
    assert results[0].passed, results[0].detail
