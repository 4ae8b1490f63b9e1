import numpy as np
import pytest

from bhquench.lattice import build_lattice, mode_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def square8():
    return build_lattice(2, 8)


@pytest.fixture(scope="session")
def square32():
    return build_lattice(2, 32)


@pytest.fixture(scope="session")
def grid32(square32):
    return mode_grid(square32)


@pytest.fixture(scope="session")
def range2_128():
    return build_lattice(2, 128, "range", 2)


@pytest.fixture(scope="session")
def grid_range2_128(range2_128):
    return mode_grid(range2_128)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
