"""Equation of state, conversions and coefficients against symbolic oracles."""

from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac.errors import ConstraintError, DomainError, InadmissibleStateError
from relvac.goodvars import (GoodPoint, Params, PhysicalPoint, bracket, coefficient_arrays,
                             coefficient_partials, coefficients, f_of_rho, from_good,
                             from_good_arrays, r_of_rho, rho_of_r, to_good, to_good_arrays,
                             v0_from_arrays)

kappas = st.sampled_from([0.5, 1.0, 2.0, 3.0])


def _symbolic(kappa, r_val, v_vals):
    """Closed-form coefficients built independently with sympy."""
    k = sp.nsimplify(kappa)
    r = sp.Symbol("r", positive=True)
    vs = sp.symbols(f"v0:{len(v_vals)}", real=True)
    br = 1 + k * r / (k + 1)
    vsq = sum(c**2 for c in vs)
    v0 = sp.sqrt(br ** (2 + 2 / k) + vsq)
    a0 = 1 - k * r * vsq / v0**2
    a1 = -2 * k * br ** (2 + 2 / k) / (v0**3 * a0)
    a2 = br ** (1 + 2 / k) / v0
    subs = {r: r_val, **{c: val for c, val in zip(vs, v_vals)}}
    d = len(v_vals)
    G = sp.Matrix(d, d, lambda i, j: k * br / (a0 * v0) * ((1 if i == j else 0) - vs[i] * vs[j] / v0**2))
    out = {n: float(e.subs(subs)) for n, e in (("v0", v0), ("a0", a0), ("a1", a1), ("a2", a2))}
    out["G"] = np.array(G.subs(subs).evalf(), dtype=float)
    out["dr_a2"] = float(sp.diff(a2, r).subs(subs))
    out["dv_v0"] = [float(sp.diff(v0, c).subs(subs)) for c in vs]
    # a0/(k<r>) - 1/k divided by r, which defines a3
    out["a3"] = float(sp.simplify((a0 / (k * br) - 1 / k) / r).subs(subs))
    return out


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("v", [(0.3,), (-0.4, 0.7)])
def test_coefficients_match_sympy(kappa, v):
    p = Params(kappa=kappa, dim=len(v))
    r = 0.37
    cb = coefficients(GoodPoint(r, np.array(v)), p)
    ref = _symbolic(kappa, r, v)
    for name in ("v0", "a0", "a1", "a2", "a3"):
        assert getattr(cb, name) == pytest.approx(ref[name], rel=1e-12)
    np.testing.assert_allclose(cb.G, ref["G"], rtol=1e-12)
    part = coefficient_partials(np.array(r), np.array(v), p)
    assert part.dr["a2"] == pytest.approx(ref["dr_a2"], rel=1e-10)
    np.testing.assert_allclose(part.dv["v0"], ref["dv_v0"], rtol=1e-10)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 2.0])
def test_eos_identities(kappa):
    p = Params(kappa=kappa)
    rho = np.linspace(0.0, 3.0, 31)
    r = r_of_rho(rho, p)
    np.testing.assert_allclose(rho_of_r(r, p), rho, atol=1e-14)
    np.testing.assert_allclose(bracket(r, p), 1.0 + rho**kappa, rtol=1e-14)
    np.testing.assert_allclose(f_of_rho(rho, p), (1 + rho**kappa) ** (1 + 1 / kappa), rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(kappa=kappas, rho=st.floats(0.0, 4.0), u1=st.floats(-3, 3), u2=st.floats(-3, 3))
def test_round_trip_property(kappa, rho, u1, u2):
    p = Params(kappa=kappa, dim=2)
    u = np.array([np.sqrt(1 + u1**2 + u2**2), u1, u2])
    back = from_good(to_good(PhysicalPoint(rho, u), p), p)
    assert back.rho == pytest.approx(rho, abs=1e-12 * (1 + rho))
    np.testing.assert_allclose(back.u, u, rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(kappa=kappas, r=st.floats(0.0, 5.0), v=st.floats(-5, 5))
def test_constraint_after_reconstruction(kappa, r, v):
    p = Params(kappa=kappa, dim=1)
    rho, u = from_good_arrays(np.array([r]), np.array([[v]]), p)
    assert abs(-u[0, 0] ** 2 + u[0, 1] ** 2 + 1.0) <= 1e-10 * u[0, 0] ** 2
    assert u[0, 0] * f_of_rho(rho, p)[0] == pytest.approx(v0_from_arrays(np.array([r]), np.array([[v]]), p)[0])


@settings(max_examples=40, deadline=None)
@given(kappa=kappas, r=st.floats(0.0, 2.0), v=st.floats(-2, 2))
def test_G_is_symmetric_positive(kappa, r, v):
    p = Params(kappa=kappa, dim=2)
    cb = coefficient_arrays(np.array(r), np.array([v, 0.5 * v]), p, check=False)
    if cb.a0 <= 0:
        return
    np.testing.assert_allclose(cb.G, cb.G.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(cb.G) > 0)


def test_vectorized_matches_pointwise(rng):
    p = Params(kappa=1.5, dim=2)
    rho = rng.uniform(0, 1, 20)
    us = rng.normal(size=(20, 2))
    u = np.concatenate([np.sqrt(1 + (us**2).sum(1))[:, None], us], 1)
    r, v = to_good_arrays(rho, u, p)
    for i in range(20):
        gp = to_good(PhysicalPoint(rho[i], u[i]), p)
        assert gp.r == pytest.approx(r[i], rel=1e-15)
        np.testing.assert_allclose(gp.v, v[i], rtol=1e-15)


def test_errors():
    p = Params(kappa=1.0, dim=1)
    with pytest.raises(DomainError):
        Params(kappa=0.0)
    with pytest.raises(DomainError):
        Params(dim=3)
    with pytest.raises(DomainError):
        to_good(PhysicalPoint(-1.0, np.array([1.0, 0.0])), p)
    with pytest.raises(ConstraintError):
        to_good(PhysicalPoint(0.5, np.array([1.0, 0.5])), p)
    with pytest.raises(ConstraintError):
        to_good(PhysicalPoint(0.5, np.array([-1.0, 0.0])), p)
    with pytest.raises(DomainError):
        from_good(GoodPoint(-0.1, np.array([0.0])), p)
    with pytest.raises(InadmissibleStateError):
        coefficient_arrays(np.array([50.0]), np.array([[1e3]]), p)
