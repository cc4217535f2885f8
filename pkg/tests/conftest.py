"""Shared pytest configuration.

Collects the acceptance-criterion verdicts recorded by
tests/test_acceptance.py and prints one summary line per criterion at
the end of the run, so the pass/fail status of each criterion is
visible regardless of output capturing.
"""

import numpy as np
import pytest

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[number] = ("PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[number]
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"ACCEPTANCE {number}: {status}{suffix}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
