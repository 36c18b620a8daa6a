"""Method-of-lines evolution, vorticity, moving-domain identity and scaling."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac.acceptance import kinematic_family
from relvac.dynamics import (Vorticity, evolve_vorticity, integrate, leibniz_defect, reflect,
                             rhs, rhs_arrays, rk4_step, scaling_transform, stable_dt,
                             vorticity_of, vorticity_rhs)
from relvac.errors import CFLViolationError, DomainError
from relvac.goodvars import Params
from relvac.grid import Field, Grid
from relvac.scenarios import initial_state
from relvac.state import GoodState


def test_rhs_rest_state_is_static(grid256, p1):
    st_ = GoodState.from_arrays(grid256, np.full(grid256.shape, 0.3), np.zeros(grid256.shape),
                                p1, free_boundary=False)
    rt, vt = rhs(st_)
    assert np.nanmax(np.abs(rt.values)) <= 1e-13
    assert np.nanmax(np.abs(vt.values)) <= 1e-13


def test_rhs_linear_data_closed_form(p1):
    """For r affine and v constant the right side is explicit."""
    g = Grid.uniform(1, 0.0, 1.0, 64)
    x = g.axes[0]
    r = 0.2 + 0.1 * x
    v = np.full(g.shape + (1,), 0.3)
    kn = np.ones(g.shape, bool)
    rt, vt = rhs_arrays(g, r, v, kn, p1)
    k = 1.0
    br = 1 + k * r / (k + 1)
    v0 = np.sqrt(br ** (2 + 2 / k) + 0.09)
    a0 = 1 - k * r * 0.09 / v0**2
    a1 = -2 * k * br ** (2 + 2 / k) / (v0**3 * a0)
    a2 = br ** (1 + 2 / k) / v0
    np.testing.assert_allclose(rt, -0.3 / v0 * 0.1 - r * a1 * 0.3 * 0.1, rtol=1e-12)
    np.testing.assert_allclose(vt[:, 0], -a2 * 0.1, rtol=1e-12)


def test_reflection_equivariance(blob256):
    st_ = blob256.replace(v=blob256.v.values + 0.05 * np.sin(3 * blob256.grid.axes[0])[:, None])
    a = reflect(rk4_step(st_, 0.5 * stable_dt(st_)))
    b = rk4_step(reflect(st_), 0.5 * stable_dt(st_))
    m = a.mask & b.mask
    np.testing.assert_allclose(a.r.values[m], b.r.values[m], atol=1e-13)
    np.testing.assert_allclose(a.v.values[m], b.v.values[m], atol=1e-13)


def test_cfl_violation(blob256):
    with pytest.raises(CFLViolationError):
        rk4_step(blob256, 3 * stable_dt(blob256))


def test_rk4_fourth_order_in_time(grid256, p1):
    """On a fixed patch (no collar refill) the time error is fourth order."""
    x = grid256.axes[0]
    st_ = GoodState.from_arrays(grid256, 0.4 + 0.1 * np.cos(x), 0.2 * np.sin(x), p1,
                                free_boundary=False)
    T = 0.05
    ref = integrate(st_, T, dt=T / 64, cfl=1.0)[-1]
    errs = []
    for n in (8, 16):
        out = integrate(st_, T, dt=T / n, cfl=1.0)[-1]
        errs.append(np.max(np.abs(out.v.values - ref.v.values)[20:-20]))
    assert np.log2(errs[0] / errs[1]) > 3.0


def test_vorticity_zero_in_1d(blob256):
    om = vorticity_of(blob256.v)
    assert np.nanmax(np.abs(om.values)) == 0.0
    rate = vorticity_rhs(om, blob256)
    assert np.nanmax(np.abs(rate.values)) == 0.0


def test_vorticity_zero_stays_zero_2d(disk64):
    zero = np.where(disk64.known[..., None, None], 0.0, np.nan) * np.ones((1, 1, 2, 2))
    om = evolve_vorticity(Vorticity(Field(disk64.grid, zero, disk64.mask)), disk64, 0.05)
    assert np.nanmax(np.abs(om.values[disk64.mask])) <= 1e-14


def test_vorticity_antisymmetric_2d(disk64):
    om = vorticity_of(disk64.v)
    m = disk64.mask
    np.testing.assert_allclose(om.values[m], -np.swapaxes(om.values, -1, -2)[m], atol=1e-15)
    # the rigid rotation part gives omega_01 = 2 * omega
    assert np.nanmedian(om.values[m][:, 0, 1]) == pytest.approx(2 * 0.3, abs=0.05)


def test_leibniz_kinematic_family_converges():
    p = Params(kappa=1.0, dim=1)

    def f(X, t):
        return np.cos(2 * X[..., 0] + t)

    errs = []
    for N, dt in ((128, 0.02), (256, 0.01)):
        g = Grid.uniform(1, -1.5, 1.5, N)
        traj = [kinematic_family(g, p, n * dt) for n in range(6)]
        errs.append(leibniz_defect(traj, f))
    assert errs[0] / errs[1] > 3.0


def test_leibniz_requires_uniform_times(blob256):
    with pytest.raises(DomainError):
        leibniz_defect([blob256, blob256], lambda X, t: X[..., 0])


@settings(max_examples=8, deadline=None)
@given(lam=st.floats(0.8, 1.25))
def test_scaling_is_a_group_action(lam):
    p = Params(kappa=1.0, dim=1)
    g = Grid.uniform(1, -2.0, 2.0, 400)
    s = initial_state("blob1d", g, p, h0=0.5, alpha=0.2)
    back = scaling_transform(scaling_transform(s, lam), 1 / lam)
    m = back.mask & s.mask
    assert np.max(np.abs(back.r.values[m] - s.r.values[m])) < 1e-6
    assert back.t == pytest.approx(s.t)


def test_scaling_rejects_bad_lambda(blob256):
    with pytest.raises(DomainError):
        scaling_transform(blob256, 0.0)
