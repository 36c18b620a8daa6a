"""Transition operators: adjointness, annihilation, comparison identity, coercivity."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac import transition
from relvac.acceptance import _compact
from relvac.errors import DomainError, HypothesisError
from relvac.goodvars import Params
from relvac.grid import Grid
from relvac.scenarios import initial_state
from relvac.transition import (OperatorId, adjoint_defect, apply, coercivity_ratio, curl,
                               inner_product, relation_defect)


def _bump_field(grid, seed, scalar, centre_scale=0.3, radius=0.4):
    rng = np.random.default_rng(seed)
    X = grid.coords
    c = rng.uniform(-centre_scale, centre_scale, grid.dim)
    rho = np.sqrt(np.sum((X - c) ** 2, axis=-1)) / radius
    inside = rho < 1
    bump = np.where(inside, np.exp(-1.0 / np.where(inside, 1 - rho**2, 1.0)), 0.0)
    k = rng.uniform(0.5, 4.0, 2)
    a = bump * np.cos(k[0] * X[..., 0] + k[1])
    if scalar:
        return a
    if grid.dim == 1:
        return a[..., None]
    b = bump * np.sin(k[1] * X[..., 1] - k[0])
    return np.stack([a, b], axis=-1)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), kappa=st.sampled_from([0.5, 1.0, 2.0]),
       op=st.sampled_from(["L1", "L2"]))
def test_adjointness_1d_property(seed, kappa, op):
    g = Grid.uniform(1, -1.5, 1.5, 256)
    s = initial_state("blob1d", g, Params(kappa=kappa), h0=0.5, alpha=0.2, beta=0.05)
    u = _bump_field(g, seed, op == "L1")
    w = _bump_field(g, seed + 1, op == "L1")
    assert abs(adjoint_defect(op, u, w, s)) <= 1e-12


_DISK = initial_state("disk2d", Grid.uniform(2, -1.5, 1.5, 64), Params(dim=2), h0=0.5,
                      alpha=0.2, omega=0.3)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000), op=st.sampled_from(["L1", "L2", "L3"]))
def test_adjointness_2d_property(seed, op):
    u = _bump_field(_DISK.grid, seed, op == "L1")
    w = _bump_field(_DISK.grid, seed + 7, op == "L1")
    assert abs(adjoint_defect(op, u, w, _DISK)) <= 1e-12


def test_adjointness_warns_near_boundary(blob256):
    x = blob256.grid.axes[0]
    with pytest.warns(RuntimeWarning):
        adjoint_defect("L1", np.cos(x), np.sin(x), blob256)
    with pytest.raises(DomainError):
        adjoint_defect("tL1", np.cos(x), np.sin(x), blob256)


def test_inner_product_symmetric(blob256):
    x = blob256.grid.axes[0]
    u, w = np.cos(x)[:, None], np.sin(2 * x)[:, None]
    assert inner_product("L2", u, w, blob256) == pytest.approx(inner_product("L2", w, u, blob256))


def test_annihilation_2d(disk64):
    w = _compact(disk64.grid, False, n=1)[0]
    L2w = apply("L2", w, disk64).values
    L3w = apply("L3", w, disk64).values
    m = disk64.mask
    scale = np.nanmax(np.abs(L2w[m]))
    for val in (apply("L2", L3w, disk64).values, apply("L3", L2w, disk64).values,
                curl(L2w, disk64)):
        assert np.nanmax(np.abs(val[m])) <= 1e-9 * scale


def test_L3_kills_gradients(disk64):
    X = disk64.grid.coords
    phi = np.cos(X[..., 0]) * np.sin(2 * X[..., 1])
    grad = np.stack([-np.sin(X[..., 0]) * np.sin(2 * X[..., 1]),
                     2 * np.cos(X[..., 0]) * np.cos(2 * X[..., 1])], axis=-1)
    # a discrete centred gradient is exactly curl free for the centred curl
    dgrad = np.stack([transition._d0(phi, 0, disk64.grid.h), transition._d0(phi, 1, disk64.grid.h)],
                     axis=-1)
    out = apply("L3", dgrad, disk64).values
    assert np.nanmax(np.abs(out[disk64.mask])) <= 1e-10 * np.nanmax(np.abs(grad))


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_relation_defect_second_order(kappa):
    """Second order on nodes at a fixed distance 0.2 inside the domain."""
    errs = []
    for N in (128, 256, 512):
        g = Grid.uniform(1, -1.5, 1.5, N)
        s = initial_state("blob1d", g, Params(kappa=kappa), h0=0.5, alpha=0.2)
        width = int(round(0.2 / g.h))
        errs.append(max(relation_defect(np.cos(2 * g.axes[0] + 0.3), s, width=width),
                        relation_defect(np.sin(3 * g.axes[0])[:, None], s, width=width)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.7)


def test_operator_ids():
    assert OperatorId("L1").scalar and not OperatorId("L3").scalar
    with pytest.raises(DomainError):
        OperatorId("L4")


def test_coercivity_checks_hypothesis(blob256):
    with pytest.raises(HypothesisError):
        coercivity_ratio("tL1", blob256)
    with pytest.raises(DomainError):
        coercivity_ratio("L9", blob256)
    small = initial_state("blob1d", blob256.grid, blob256.params, h0=0.05, alpha=0.02)
    q = coercivity_ratio("tL1", small)
    assert np.isfinite(q) and q > 0


def test_tampered_operator_breaks_adjointness(blob256, monkeypatch):
    """Negative control: a non-symmetric L1 is caught by the defect."""
    orig = transition._IMPL["L1"]
    monkeypatch.setitem(transition._IMPL, "L1",
                        lambda vals, bg: orig(vals, bg) + transition._d0(vals, 0, bg.h[0]))
    u = _bump_field(blob256.grid, 1, True)
    w = _bump_field(blob256.grid, 2, True)
    assert abs(adjoint_defect("L1", u, w, blob256)) > 1e-6
