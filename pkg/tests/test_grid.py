"""Grid, boundary location and weighted quadrature."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from relvac.errors import DegenerateDomainError, DivergentWeightError, DomainError
from relvac.grid import Field, Grid, gradient, locate_boundary, weighted_integral


def _parab(grid, a=-1.0, b=1.0, h0=0.5):
    x = grid.axes[0]
    r = h0 * (x - a) * (b - x)
    return Field(grid, r, r > 0)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid.uniform(1, 1.0, 0.0, 64)
    with pytest.raises(DomainError):
        Grid.uniform(1, 0.0, 1.0, 8)
    with pytest.raises(DomainError):
        Grid(((0.0, 1.0), (0.0, 2.0)), (32, 32))


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-1.2, -0.6), b=st.floats(0.4, 1.2))
def test_boundary_roots_exact_for_quadratics(a, b):
    g = Grid.uniform(1, -1.5, 1.5, 200)
    bd = locate_boundary(_parab(g, a, b))
    np.testing.assert_allclose(np.sort(bd.points[:, 0]), [a, b], atol=1e-12)
    np.testing.assert_allclose(bd.slopes, 0.5 * (b - a), rtol=1e-9)


@pytest.mark.parametrize("sigma", [0.0, 0.5, 1.0, -0.5, 2.5])
def test_weighted_integral_beta_function(sigma):
    g = Grid.uniform(1, -1.5, 1.5, 300)
    r = _parab(g)
    got = weighted_integral(np.cos(g.axes[0]) + 2.0, sigma, r)

    def f(x):
        return (0.5 * (1 - x * x)) ** sigma * (np.cos(x) + 2.0)

    exact = integrate.quad(f, -1, 1, limit=200, points=[-1, 1])[0]
    if sigma == 0.0:
        exact = 2 * np.sin(1) + 4.0
    assert got == pytest.approx(exact, rel=1e-8)


def test_weighted_integral_constant_closed_form():
    g = Grid.uniform(1, -1.5, 1.5, 400)
    r = Field(g, 1 - g.axes[0] ** 2, (1 - g.axes[0] ** 2) > 0)
    for sigma in (0.25, 1.5):
        exact = np.sqrt(np.pi) * special.gamma(sigma + 1) / special.gamma(sigma + 1.5)
        assert weighted_integral(np.ones(g.shape), sigma, r) == pytest.approx(exact, rel=1e-9)


def test_weighted_integral_disk():
    g = Grid.uniform(2, -1.5, 1.5, 128)
    X = g.coords
    r = 1 - np.sum(X * X, axis=-1)
    val = weighted_integral(np.ones(g.shape), 1.0, Field(g, r, r > 0))
    assert val == pytest.approx(np.pi / 2, rel=2e-3)


def test_divergent_weight_rejected():
    g = Grid.uniform(1, -1.5, 1.5, 64)
    with pytest.raises(DivergentWeightError):
        weighted_integral(np.ones(g.shape), -1.0, _parab(g))


def test_degenerate_domains():
    g = Grid.uniform(1, -1.5, 1.5, 64)
    x = g.axes[0]
    r = np.where(np.abs(x) > 0.5, 0.25 - (np.abs(x) - 1.0) ** 2, -1.0)
    with pytest.raises(DegenerateDomainError):
        weighted_integral(np.ones(g.shape), 0.0, Field(g, r, r > 0))
    r = -np.ones(g.shape)
    with pytest.raises(DegenerateDomainError):
        weighted_integral(np.ones(g.shape), 0.0, Field(g, r, r > 0))


def test_gradient_fourth_order():
    errs = []
    for n in (64, 128):
        g = Grid.uniform(1, 0.0, 2.0, n)
        x = g.axes[0]
        d = gradient(np.sin(x), np.ones(g.shape, bool), g)[..., 0]
        errs.append(np.max(np.abs(d - np.cos(x))[4:-4]))
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_root_on_a_node():
    """A vacuum end that falls exactly on a node is still located."""
    from relvac.goodvars import Params
    from relvac.state import GoodState

    g = Grid.uniform(1, -1.5, 1.5, 256)
    x = g.axes[0]
    s = GoodState.from_arrays(g, 0.5 * (1 - (x - 0.1) ** 2), np.zeros(256), Params())
    np.testing.assert_allclose(np.sort(s.boundary.points[:, 0]), [-0.9, 1.1], atol=1e-12)
