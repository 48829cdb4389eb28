import sys

import numpy as np
import pytest

from lpcns.paraproduct import random_ensemble
from lpcns.spectral import Field, Grid


@pytest.fixture
def grid2():
    return Grid(2, 32)


@pytest.fixture
def grid3():
    return Grid(3, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(grid, seed=0, components=1, s=1.0, kmax=None):
    """Seeded mean-zero band-limited field."""
    return random_ensemble(grid, 1, s, seed, components, kmax)[0]


def mode(grid, n, amplitude=1.0, kind="cos"):
    """``amplitude * cos(n . x)`` (or sin) on ``grid``."""
    n = np.asarray(n, dtype=float).reshape((-1,) + (1,) * grid.dim)
    phase = np.sum(n * grid.x, axis=0) * (2.0 * np.pi / grid.length)
    vals = np.cos(phase) if kind == "cos" else np.sin(phase)
    return Field(grid, physical=amplitude * vals)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
