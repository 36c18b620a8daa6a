"""Weighted norms, Hoelder seminorms, control norms and the interpolation harness."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from relvac.errors import DomainError, HypothesisError, UnsupportedLevelError
from relvac.grid import Field, Grid
from relvac.scenarios import initial_state
from relvac.spaces import (NormSpec, check_interp_hypotheses, control_norms, embedding_check,
                           family_functions, holder_half, interp_check, interp_triples, norm_H2k,
                           norm_Hjsigma, tildeC_half)


def _parabola(N=400):
    g = Grid.uniform(1, -1.5, 1.5, N)
    x = g.axes[0]
    r = 1 - x * x
    return g, x, Field(g, r, r > 0)


def test_norm_H0_closed_form():
    g, x, r = _parabola()
    for sigma in (0.0, 0.5, 1.0):
        got = norm_Hjsigma(np.ones(g.shape), NormSpec(0, sigma), r) ** 2
        exact = np.sqrt(np.pi) * special.gamma(2 * sigma + 1) / special.gamma(2 * sigma + 1.5)
        assert got == pytest.approx(exact, rel=1e-8)


def test_norm_H1_of_linear_function():
    g, x, r = _parabola()
    # ||x||^2_{H^{1,1/2}} = int (1-x^2) x^2 + int (1-x^2) = 4/15 + 4/3
    got = norm_Hjsigma(x, NormSpec(1, 0.5), r) ** 2
    assert got == pytest.approx(4 / 15 + 4 / 3, rel=1e-8)


def test_norm_H2k_monotone_in_level(blob256):
    vals = [norm_H2k(blob256.r, blob256.v, k, blob256.r, blob256.params)
            for k in (0.0, 0.5, 1.0, 1.5, 2.0)]
    assert all(np.isfinite(vals)) and all(v > 0 for v in vals)
    with pytest.raises(UnsupportedLevelError):
        norm_H2k(blob256.r, blob256.v, 2.5, blob256.r, blob256.params)
    with pytest.raises(UnsupportedLevelError):
        norm_H2k(blob256.r, blob256.v, 0.3, blob256.r, blob256.params)


def test_holder_half_of_sqrt():
    g = Grid.uniform(1, 0.0, 1.0, 201)
    x = g.axes[0]
    f = Field(g, np.sqrt(x), np.ones(g.shape, bool))
    assert holder_half(f) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        holder_half(np.sqrt(x))


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-1, 1))
def test_tildeC_vanishes_on_constants_and_scales(a, b):
    g, x, r = _parabola(128)
    assert tildeC_half(np.full(g.shape, b), r) == 0.0
    f = np.cos(x)
    assert tildeC_half(a * f, r) == pytest.approx(abs(a) * tildeC_half(f, r), rel=1e-12, abs=1e-15)


def test_control_norms_components(blob256):
    cn = control_norms(blob256)
    assert cn.B >= cn.A > 0
    assert cn.parts["grad_r_minus_N"] >= 0
    small = initial_state("blob1d", blob256.grid, blob256.params, h0=0.05, alpha=0.02)
    assert control_norms(small).A <= 0.2


def test_interp_hypothesis_checks():
    with pytest.raises(DomainError):
        interp_check(prop="nope")
    with pytest.raises(HypothesisError):
        check_interp_hypotheses("gen", 3, 2, 1.0, 0.0)
    assert len(interp_triples("gen")) > 0
    with pytest.raises(DomainError):
        family_functions("nope")


def test_interp_ratios_finite_small_grid():
    out = interp_check(prop="Linf", N=257)
    assert out and all(np.isfinite(list(out.values())))
    assert all(v > 0 for v in out.values())


def test_embedding_ratios_bounded():
    out = embedding_check(N=257)
    assert all(0 < v < 10 for v in out.values())
    with pytest.raises(HypothesisError):
        embedding_check(N=257, pairs=((1, 2.0, 0, 0.0),))


def test_families_and_domains():
    assert len(family_functions("smooth20")) == 20
    assert len(family_functions("monomials")) == 8
    out = interp_check(prop="gen", N=257, domain="slice", triples=interp_triples("gen")[:3])
    assert all(np.isfinite(list(out.values())))
