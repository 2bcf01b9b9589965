import numpy as np
import pytest
import scipy.sparse as sp

from episolve.fem import P1Space
from episolve.mesh import unit_square_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def laplacian_1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def fem_matrix(n, shift=1.0):
    """Mass-shifted P1 stiffness on unit_square_mesh(n) (SPD)."""
    space = P1Space(unit_square_mesh(n))
    return space.stiffness() + shift * space.mass(), space


# acceptance verdict lines, repeated in the terminal summary so they show up
# even when output capture is on
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
