"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from relvac.goodvars import Params
from relvac.grid import Grid
from relvac.scenarios import initial_state


@pytest.fixture
def p1():
    return Params(kappa=1.0, dim=1)


@pytest.fixture
def p2():
    return Params(kappa=1.0, dim=2)


@pytest.fixture
def grid256():
    return Grid.uniform(1, -1.5, 1.5, 256)


@pytest.fixture
def blob256(grid256, p1):
    return initial_state("blob1d", grid256, p1, h0=0.5, alpha=0.2)


@pytest.fixture
def disk64(p2):
    g = Grid.uniform(2, -1.5, 1.5, 64)
    return initial_state("disk2d", g, p2, h0=0.5, alpha=0.2, omega=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
