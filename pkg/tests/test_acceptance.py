"""Acceptance gate: every criterion at its stated tolerance, one line per check."""

import pytest

from conftest import ACCEPTANCE_LINES
from sepsteer import acceptance


@pytest.fixture(scope="session")
def results(pytestconfig):
    out = acceptance.run_all()
    pytestconfig.stash[ACCEPTANCE_LINES] = [r.line() for r in out]
    return out


def checks(results, number):
    found = [r for r in results if r.criterion == number]
    assert found, f"criterion {number} produced no checks"
    return found


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(results, number):
    failed = [r for r in checks(results, number) if not r.passed]
    for r in checks(results, number):
        print(r.line())
    assert not failed, "\n".join(r.line() for r in failed)
