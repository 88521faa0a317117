"""Acceptance gate: every shipping criterion at its stated tolerance.

Criteria 1-9 run once per session through the shared runner; each test
prints its pass/fail line and asserts the flag.  Criterion 10 runs the
full self-test twice and compares the rendered reports byte for byte.
"""

import pytest

from qmarkov.selftest import DEFAULT_SEED, render_report, run_acceptance


@pytest.fixture(scope="module")
def results():
    return run_acceptance(DEFAULT_SEED)


# stated wall-clock budgets, in seconds
BUDGETS = {1: 3.0, 2: 5.0, 4: 60.0, 8: 300.0}


@pytest.mark.parametrize("index", range(1, 10))
def test_criterion(results, index, capsys):
    r = results[index - 1]
    line = f"criterion {r.index}: {'PASS' if r.passed else 'FAIL'}  {r.name} -- {r.detail}"
    with capsys.disabled():
        print(line)
    assert r.passed, line
    budget = BUDGETS.get(index)
    if budget is not None:
        assert r.seconds < budget, f"criterion {index} took {r.seconds:.1f}s"


def test_criterion_10_determinism(results, capsys):
    """Two runs with one seed render byte-identical reports."""
    again = run_acceptance(DEFAULT_SEED)
    first = render_report(results, DEFAULT_SEED)
    second = render_report(again, DEFAULT_SEED)
    line = ("criterion 10: PASS  self-test reports are byte-identical"
            if first == second else "criterion 10: FAIL  reports differ")
    with capsys.disabled():
        print(line)
    assert first == second, line
