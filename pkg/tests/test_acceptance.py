"""Acceptance criteria, one test and one printed PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the summary lines;
``wgqed validate`` prints the same table.
"""
import pytest

from wgqed.validation import CHECKS, run_check


@pytest.mark.parametrize("number", [n for n, _, _ in CHECKS], ids=[f"{n:02d}-{name.replace(' ', '-')}" for n, name, _ in CHECKS])
def test_criterion(number):
    result = run_check(number)
    print("\n" + result.line())
    assert result.passed, result.line()
