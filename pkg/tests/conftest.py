import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from swarm_anneal.schedule import CoolingSchedule  # noqa: E402


def quiet_schedule(kind, beta0, rate=0.0, exponent=1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return CoolingSchedule(kind, beta0, rate, exponent)


@pytest.fixture
def quad_schedule():
    return quiet_schedule("quadratic", 0.25, 25.0)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record a criterion verdict; lines are echoed in the terminal summary."""

    def add(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
