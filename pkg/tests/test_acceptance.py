"""The fourteen acceptance criteria at their stated tolerances and time budgets.

Each criterion prints one PASS/FAIL line; the lines are also collected
into the pytest terminal summary.  Run directly with
``python tests/test_acceptance.py`` for the same lines without pytest.
"""

from __future__ import annotations

import sys

import pytest

from relvac.acceptance import CRITERIA, run_criterion

ACCEPTANCE_LINES: dict = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    res = run_criterion(number)
    line = res.line()
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert res.property_ok, line
    assert res.seconds < res.budget, line


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        r = run_criterion(n)
        print(r.line(), flush=True)
        failed += not r.passed
    sys.exit(1 if failed else 0)
