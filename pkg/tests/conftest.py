import numpy as np
import pytest

from mohardy.grid_forms import Grid

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def grid():
    return Grid(2, 64, 4.0)


@pytest.fixture(scope="session")
def grid3():
    return Grid(3, 32, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
