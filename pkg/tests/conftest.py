import math

import numpy as np
import pytest

from nfalias import ParametricCurve


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def toy_ula():
    """1000-wavelength ULA centred at the origin along the x axis."""
    return ParametricCurve.ula(1000.0)


@pytest.fixture(scope="session")
def big_uca():
    return ParametricCurve.uca(1e4, math.pi)



# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
