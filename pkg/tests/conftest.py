import warnings

import pytest

from postcause.estimands import LowSupportWarning
from postcause.monotone_prob import RatioClampWarning

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    return ACCEPTANCE_LINES


@pytest.fixture(autouse=True)
def _quiet_estimation_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RatioClampWarning)
        warnings.simplefilter("ignore", LowSupportWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
