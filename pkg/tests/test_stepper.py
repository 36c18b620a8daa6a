"""Three-phase stepping: regularization, transport, correction and runs."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac.errors import DomainError, FoldOverError, StepRejectedError
from relvac.kernels import available_backends
from relvac.stepper import (inflation_exponents, one_step, regularize, regularize_width,
                            rough_data, run, transport)


def test_zero_step_is_identity(blob256):
    new, rep = one_step(blob256, 0.0, level=0)
    assert new is blob256
    assert rep.growth_factor == 1.0 and rep.regularization_noop


def test_regularize_preserves_constants(grid256, p1):
    from relvac.state import GoodState

    st_ = GoodState.from_arrays(grid256, np.full(grid256.shape, 0.4),
                                np.full(grid256.shape, 0.1), p1, free_boundary=False)
    out = regularize(st_, 0.05, warn=False).state
    np.testing.assert_allclose(out.r.values, 0.4, rtol=1e-14)
    np.testing.assert_allclose(out.v.values, 0.1, rtol=1e-14)


def test_regularize_noop_when_width_below_grid(blob256):
    with pytest.warns(RuntimeWarning):
        res = regularize(blob256, 1e-5)
    assert res.noop and res.state is blob256


def test_regularize_backends_agree(blob256):
    outs = [regularize(blob256, 0.05, backend=b, warn=False).state for b in available_backends()]
    for o in outs[1:]:
        np.testing.assert_allclose(o.r.values[o.mask], outs[0].r.values[outs[0].mask], atol=1e-13)


def test_width_respects_known_region(blob256):
    w = regularize_width(blob256, 0.1)
    assert np.all(w[~blob256.known] == 0.0)
    assert np.all(w[blob256.mask] > 0)


@settings(max_examples=10, deadline=None)
@given(eps=st.floats(2e-3, 2e-2))
def test_step_moves_boundary_with_fluid_speed(eps):
    from relvac.goodvars import Params
    from relvac.grid import Grid
    from relvac.scenarios import initial_state

    g = Grid.uniform(1, -1.5, 1.5, 256)
    s = initial_state("blob1d", g, Params(), h0=0.5, alpha=0.2, beta=0.1)
    new, rep = one_step(s, eps, level=None)
    b0 = np.sort(s.boundary.points[:, 0])
    b1 = np.sort(new.boundary.points[:, 0])
    c = 0.1 / np.sqrt(1 + 0.01)  # v/v0 at the vacuum ends
    np.testing.assert_allclose(b1 - b0, eps * c, rtol=0.05, atol=2e-4)
    assert rep.local_residual < 50 * eps**2


def test_fold_over_detected(blob256):
    with pytest.raises(FoldOverError):
        transport(blob256.replace(v=40.0 * np.sin(40 * blob256.grid.axes[0])[:, None],
                                  validate=False), 0.2)


def test_guard_rejects_growth(blob256):
    with pytest.raises(StepRejectedError) as exc:
        one_step(blob256.replace(v=blob256.v.values + 0.3 * np.sin(7 * blob256.grid.axes[0])[:, None]),
                 0.01, level=2, c_max=-50.0)
    assert exc.value.report.growth_factor > 0


def test_run_lands_on_T_and_reports(blob256):
    res = run(blob256, 0.035, 0.01, level=0)
    assert res.completed
    assert res.states[-1].t == pytest.approx(0.035)
    assert len(res.reports) == 4
    assert res.reports[-1].epsilon == pytest.approx(0.005)


def test_run_partial_result_on_rejection(blob256):
    res = run(blob256, 0.05, 0.01, level=0, c_max=-50.0)
    assert not res.completed and res.error
    assert len(res.reports) == 1


def test_run_argument_checks(blob256):
    with pytest.raises(DomainError):
        run(blob256, 0.1, 0.0)
    with pytest.raises(DomainError):
        one_step(blob256, -0.1)


def test_inflation_fit_shape_and_guard(grid256, p1):
    from relvac.scenarios import initial_arrays
    from relvac.state import GoodState

    r, v = initial_arrays("blob1d", grid256)
    r2, v2 = rough_data(grid256, r, v, top_octave=6)
    s = GoodState.from_arrays(grid256, r2, v2, p1)
    fit = inflation_exponents(s, [0.08, 0.04])
    assert fit.norms.shape == (2, 3)
    assert fit.exponents[1] < fit.exponents[0] < 0
    with pytest.raises(DomainError):
        inflation_exponents(s, [0.1, 0.05], k=1.5)
