"""Acceptance gate: the full validation suite at production scale.

One pass/fail line per criterion, run through the same entry point as
`hetsleep validate`. This is the slow end-to-end check (about ten
minutes); everything here is also covered at desk scale by the unit
and property tests, so day-to-day runs can deselect it with
`-m "not acceptance"`.
"""

import pytest

from hetsleep import cli, validation

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SCENARIO = "scenarios/table2.json"
SEED = 1
TRIALS = 100_000
PMF_REALIZATIONS = 500
BUDGET_S = 1800.0


@pytest.fixture(scope="module")
def suite_report():
    sc, pm = cli.load_scenario(SCENARIO)
    results, exceeded = validation.run_all(
        sc, pm, seed=SEED, budget_s=BUDGET_S, trials=TRIALS,
        pmf_realizations=PMF_REALIZATIONS, echo=print)
    assert not exceeded, "validation suite stopped early on its time budget"
    return {r.name: r for r in results}


@pytest.mark.parametrize("name", validation.CRITERION_NAMES)
def test_criterion(suite_report, name):
    r = suite_report[name]
    assert r.passed, f"{name}: {r.detail}"
