"""Pair distance functionals, cutoff profile and the stability monitor."""

from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from relvac.acceptance import perturbed_pair
from relvac.distance import (PAIR_COLUMNS, IntersectionWarning, PairConfig, D_H, boundary_gap,
                             boundary_proximity, chi, stability_monitor, tilde_D_H)
from relvac.dynamics import integrate as rk4_integrate
from relvac.errors import DomainError
from relvac.goodvars import Params
from relvac.grid import Grid
from relvac.state import GoodState


def _pair(N, kappa, shift=0.02, scale=1.05, dv=0.03):
    g = Grid.uniform(1, -1.5, 1.5, N)
    x = g.axes[0]
    p = Params(kappa=kappa)
    s1 = GoodState.from_arrays(g, 0.5 * (1 - x**2), 0.2 * x * (1 - x**2), p)
    xs = x - shift
    s2 = GoodState.from_arrays(g, 0.5 * scale * (1 - xs**2), (0.2 + dv) * x * (1 - x**2), p)
    return s1, s2


@settings(max_examples=50, deadline=None)
@given(s=st.floats(-2, 2))
def test_chi_profile(s):
    val = float(chi(s))
    assert 0.0 <= val <= 1.0
    assert val == float(chi(-s))
    if abs(s) <= 0.25:
        assert val == 1.0
    if abs(s) >= 0.5:
        assert val == 0.0


def test_chi_monotone_and_config():
    s = np.linspace(0, 1, 201)
    assert np.all(np.diff(chi(s)) <= 0)
    with pytest.raises(DomainError):
        PairConfig(inner=0.5, outer=0.25)
    cfg = PairConfig()
    assert cfg.b(2.0, 0.1) == pytest.approx(2.0 * cfg.a(2.0, 0.1))


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_D_matches_adaptive_quadrature(kappa):
    s1, s2 = _pair(512, kappa)
    sigma = (1 - kappa) / kappa
    lo = max(-1.0, -1.0 + 0.02)
    hi = 1.0

    def dens(x):
        r1 = 0.5 * (1 - x**2)
        r2 = 0.5 * 1.05 * (1 - (x - 0.02) ** 2)
        mu, nu = r1 + r2, r1 - r2
        dv = 0.03 * x * (1 - x**2)
        return mu**sigma * (nu**2 + mu * dv**2)

    exact = integrate.quad(dens, lo, hi, limit=200, epsabs=0, epsrel=1e-13)[0]
    assert D_H(s1, s2) == pytest.approx(exact, rel=1e-7)


@settings(max_examples=10, deadline=None)
@given(shift=st.floats(-0.05, 0.05), scale=st.floats(0.9, 1.1), dv=st.floats(-0.05, 0.05),
       kappa=st.sampled_from([0.5, 1.0, 2.0]))
def test_symmetry_and_nonnegativity(shift, scale, dv, kappa):
    s1, s2 = _pair(256, kappa, shift, scale, dv)
    a, b = D_H(s1, s2), D_H(s2, s1)
    assert a >= 0 and a == pytest.approx(b, rel=1e-12, abs=1e-300)
    ta, tb = tilde_D_H(s1, s2), tilde_D_H(s2, s1)
    assert ta >= 0 and ta == pytest.approx(tb, rel=1e-12, abs=1e-300)


def test_definiteness(blob256):
    assert D_H(blob256, blob256) == 0.0
    assert tilde_D_H(blob256, blob256) == 0.0
    assert boundary_proximity(blob256, blob256) == pytest.approx(0.0, abs=1e-30)


def test_equivalence_ratio_on_family():
    for kappa in (0.5, 1.0, 2.0):
        for delta in (1e-2, 1e-3):
            g = Grid.uniform(1, -1.5, 1.5, 256)
            s1, s2 = perturbed_pair(g, Params(kappa=kappa), delta)
            q = D_H(s1, s2) / tilde_D_H(s1, s2)
            assert 0.1 <= q <= 10.0


def test_far_boundaries_warn():
    s1, s2 = _pair(256, 1.0, shift=0.3)
    with pytest.warns(IntersectionWarning):
        D_H(s1, s2)
    assert boundary_gap(s1, s2) > 0.1


def test_pair_checks(blob256):
    g = Grid.uniform(1, -1.5, 1.5, 128)
    other = GoodState.from_arrays(g, 0.5 * (1 - g.axes[0] ** 2), np.zeros(128), Params())
    with pytest.raises(DomainError):
        D_H(blob256, other)


def test_disk_distance_2d():
    g = Grid.uniform(2, -1.5, 1.5, 96)
    X = g.coords
    p = Params(dim=2)
    rr = np.sum(X * X, axis=-1)
    s1 = GoodState.from_arrays(g, 0.5 * (1 - rr), np.zeros(g.shape + (2,)), p)
    s2 = GoodState.from_arrays(g, 0.5 * 1.02 * (1 - rr), np.zeros(g.shape + (2,)), p)
    # nu = -0.01 (1 - rr), sigma = 0: int nu**2 over the unit disk = 1e-4 * pi / 3
    assert D_H(s1, s2) == pytest.approx(1e-4 * np.pi / 3, rel=5e-3)


def test_stability_monitor_identical_and_csv(tmp_path, blob256):
    traj = rk4_integrate(blob256, 0.02, keep_every=2)
    res = stability_monitor(traj, traj)
    assert res.amplification == 1.0 and np.all(res.D == 0) and res.C_gronwall == 0.0
    path = tmp_path / "pair.csv"
    res.write_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(PAIR_COLUMNS)


def test_stability_monitor_pair(blob256):
    s1, s2 = perturbed_pair(blob256.grid, blob256.params, 1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntersectionWarning)
        t1 = rk4_integrate(s1, 0.05, dt=1e-3, keep_every=10)
        t2 = rk4_integrate(s2, 0.05, dt=1e-3, keep_every=10)
        res = stability_monitor(t1, t2)
    assert res.amplification == pytest.approx(np.max(res.D) / res.D[0])
    assert np.all(res.D / res.D[0] <= res.predicted_bound * (1 + 1e-12))
    with pytest.raises(DomainError):
        stability_monitor(t1, t2[:-1])
