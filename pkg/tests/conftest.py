import numpy as np
import pytest

from smsim.heatpara import HeatCalculus
from smsim.torus import GridSpec

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture(scope="session")
def calc32(grid32):
    return HeatCalculus(grid32)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def calc16(grid16):
    return HeatCalculus(grid16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
