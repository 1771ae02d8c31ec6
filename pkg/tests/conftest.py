import numpy as np
import pytest

from evoctrl import game
from evoctrl.control import design_controller
from evoctrl.reference import TREATMENT_BS

# one verdict line per acceptance check, replayed after the run summary
# because capture would otherwise swallow the lines of passing tests
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance gate")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def A():
    return game.PAYOFF_MATRIX


@pytest.fixture(scope="session")
def designs(A):
    return {b: design_controller(A, b) for b in TREATMENT_BS}


@pytest.fixture(scope="session")
def nash1():
    return np.asarray(game.NASH_1, dtype=float)


@pytest.fixture(scope="session")
def nash2():
    return np.asarray(game.NASH_2, dtype=float)
