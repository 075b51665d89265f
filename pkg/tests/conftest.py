import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dral.harness import synthetic_grid  # noqa: E402
from dral.kernel import KernelSpec  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def se():
    return KernelSpec("se", lengthscale=0.5)


@pytest.fixture
def grid2d():
    """11 x 11 grid on [-1, 1]^2."""
    return synthetic_grid(2, 11)


@pytest.fixture
def grid1d():
    return synthetic_grid(1, 11)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
