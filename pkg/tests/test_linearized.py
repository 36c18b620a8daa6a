"""Linearized system: consistency with the nonlinear right side and the energy monitor."""

from __future__ import annotations

import numpy as np
import pytest

from relvac.dynamics import integrate
from relvac.errors import DomainError
from relvac.goodvars import Params, coefficient_arrays
from relvac.grid import Grid
from relvac.linearized import E_lin, LinState, directional_derivative_error, lin_gronwall, lin_rhs
from relvac.state import GoodState


def _const_background(N=512, R=0.3, V=0.2):
    g = Grid.uniform(1, 0.0, 2 * np.pi, N)
    return GoodState.from_arrays(g, np.full(g.shape, R), np.full(g.shape, V), Params(),
                                 free_boundary=False)


def test_constant_background_closed_form():
    b = _const_background()
    x = b.grid.axes[0]
    s, w = np.cos(2 * x), np.sin(3 * x)
    st, wt = lin_rhs(LinState.on(b, s, w))
    cb = coefficient_arrays(np.array(0.3), np.array([0.2]), b.params)
    c = 0.2 / cb.v0
    ds, dw = -2 * np.sin(2 * x), 3 * np.cos(3 * x)
    exp_s = -c * ds - 0.3 * cb.G[0, 0] * dw - 0.3 * cb.a1 * 0.2 * ds
    exp_w = -c * dw - cb.a2 * ds
    inner = slice(10, -10)
    np.testing.assert_allclose(st[inner], exp_s[inner], atol=2e-6)
    np.testing.assert_allclose(wt[inner, 0], exp_w[inner], atol=2e-6)


def test_lin_rhs_is_linear(blob256):
    x = blob256.grid.axes[0]
    a = LinState.on(blob256, np.cos(x), np.sin(2 * x))
    b = LinState.on(blob256, x**2, np.cos(x))
    ab = LinState.on(blob256, 2 * np.cos(x) - x**2, 2 * np.sin(2 * x) - np.cos(x))
    m = blob256.mask
    sa, wa = lin_rhs(a)
    sb, wb = lin_rhs(b)
    sab, wab = lin_rhs(ab)
    np.testing.assert_allclose(sab[m], (2 * sa - sb)[m], atol=1e-10)
    np.testing.assert_allclose(wab[m], (2 * wa - wb)[m], atol=1e-10)


def test_directional_derivative_first_order(blob256):
    x = blob256.grid.axes[0]
    ls = LinState.on(blob256, 0.1 * np.cos(3 * x), 0.1 * np.sin(2 * x))
    e1 = directional_derivative_error(ls, 1e-2)
    e2 = directional_derivative_error(ls, 1e-3)
    assert 8.0 < e1 / e2 < 12.0


def test_lin_energy_positive_and_monitor(blob256):
    x = blob256.grid.axes[0]
    ls = LinState.on(blob256, 0.1 * np.cos(3 * x), 0.1 * np.sin(2 * x))
    assert E_lin(ls) > 0
    traj = integrate(blob256, 0.03)
    res = lin_gronwall(traj, ls)
    assert len(res.t) == len(traj) and np.isfinite(res.C) and res.C >= 0
    assert np.all(np.abs(res.dlogE[1:-1]) <= res.C * res.B[1:-1] + 1e-12)


def test_lin_state_validation(blob256):
    with pytest.raises(DomainError):
        LinState(np.zeros(3), np.zeros(3), blob256)
    with pytest.raises(DomainError):
        lin_gronwall([blob256, blob256], LinState.on(blob256, np.zeros(256), np.zeros(256)))
