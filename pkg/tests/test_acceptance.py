"""Acceptance criteria 1-12 at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, and also when this file is run as a script.
"""

from __future__ import annotations

import sys

import pytest

from systolic.verify import (SIMPLE_CHECKS, SUITE_CHECKS, VerifyConfig, random_suite)

CONFIG = VerifyConfig()
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="module")
def suite():
    # 100 seeded profiles per beta in {0.5, 0.85, 1.0, 1.6}, on each surface
    return random_suite(CONFIG)


def _record(result):
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, f"{line}\n{result.detail}"


@pytest.mark.parametrize("criterion", sorted(SIMPLE_CHECKS))
def test_direct_criterion(criterion):
    _record(SIMPLE_CHECKS[criterion](CONFIG))


@pytest.mark.parametrize("criterion", sorted(SUITE_CHECKS))
def test_suite_criterion(criterion, suite):
    assert len(suite) == 2 * 4 * CONFIG.trials
    _record(SUITE_CHECKS[criterion](CONFIG, suite))


if __name__ == "__main__":
    from systolic.verify import run_checks

    results = run_checks(CONFIG, progress=lambda r: print(r.line(), flush=True))
    sys.exit(0 if all(r.passed for r in results) else 1)
