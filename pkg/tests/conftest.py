import sys

import numpy as np
import pytest

from heatdd import InterfaceSystem, SpaceTimeSystem, TimeGrid, build_mesh, decompose


def make_system(dim=2, n=8, n_t=16, period=8.0, alpha=0.5, bounds=None, workers=1):
    grid = TimeGrid.from_period(n_t, period)
    bounds = bounds or (1.0,) * dim
    mesh = build_mesh(dim, bounds, n, n if dim == 2 else 0)
    dec = decompose(mesh, alpha)
    system = SpaceTimeSystem(grid, mesh, dec, workers=workers)
    return system, InterfaceSystem(system)


@pytest.fixture(scope="session")
def small2d():
    return make_system(2, 8, 16)


@pytest.fixture(scope="session")
def small1d():
    return make_system(1, 16, 32)


@pytest.fixture(scope="session")
def skew2d():
    """Off-center interface so the subdomains differ."""
    return make_system(2, 8, 16, alpha=0.375)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
