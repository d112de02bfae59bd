"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Seeded scenario runs are shared between criteria through a module-level
cache, so the whole file costs roughly one pass over every scenario.
"""

import pytest

from sasometrics.acceptance import TITLES, _Runs, run_criterion

RUNS = _Runs()


@pytest.mark.parametrize("number", sorted(TITLES), ids=[f"{n}-{TITLES[n].replace(' ', '_')}" for n in sorted(TITLES)])
def test_criterion(number):
    result = run_criterion(number, n_seeds=10, runs=RUNS)
    print(result.line())
    for note in result.failures:
        print("   ", note)
    assert result.passed, result.line() + "\n" + "\n".join(result.failures)
