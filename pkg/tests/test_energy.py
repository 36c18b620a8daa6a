"""Energies, coercivity and the growth monitor."""

from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac.energy import (ENERGY_COLUMNS, coercivity_ratio, energy_at, gronwall_monitor,
                           snapshot_window, write_energy_csv)
from relvac.errors import DomainError, HypothesisError, UnsupportedLevelError
from relvac.goodvars import Params
from relvac.grid import Grid, weighted_integral
from relvac.scenarios import initial_state


def _small(N):
    return initial_state("blob1d", Grid.uniform(1, -1.5, 1.5, N), Params(), h0=0.05, alpha=0.02)


def test_level0_energy_matches_quadrature():
    s = _small(256)
    rep = energy_at(s, 0)
    cb = s.coeffs
    r = s.r.values
    v = s.v.values[..., 0]
    # level 0 at kappa = 1 uses weights r**0 on s and r**1 on w
    direct = weighted_integral(np.where(s.known, r * r, np.nan), 0.0, s.r) + weighted_integral(
        np.where(s.known, cb.G[..., 0, 0] * v * v / cb.a2, np.nan), 1.0, s.r)
    assert rep.E_total == pytest.approx(direct, rel=1e-10)
    assert rep.E_total > 0


def test_energy_report_consistency():
    rep = energy_at(_small(256), 2)
    assert rep.E_total == rep.E_wave + rep.E_transport
    assert rep.level == 2 and 0 < rep.coverage <= 1
    assert rep.A <= 0.2


def test_energy_levels():
    with pytest.raises(UnsupportedLevelError):
        energy_at(_small(128), 3)


def test_coercivity_requires_small_A(blob256):
    win = snapshot_window(blob256, 2, 0.25 * blob256.grid.h)
    with pytest.raises(HypothesisError):
        coercivity_ratio(win, 2)
    lo, hi = coercivity_ratio(win, 2, check_A=False)
    assert lo * hi == pytest.approx(1.0)


def test_snapshot_window_times(blob256):
    win = snapshot_window(blob256, 2, 1e-3)
    np.testing.assert_allclose([s.t for s in win], [-2e-3, -1e-3, 0, 1e-3, 2e-3], atol=1e-15)
    with pytest.raises(DomainError):
        snapshot_window(blob256, 1, 0.0)


@settings(max_examples=40, deadline=None)
@given(C=st.floats(0.0, 3.0), B=st.floats(0.1, 2.0))
def test_gronwall_recovers_exponential_rate(C, B):
    t = np.linspace(0, 1, 21)
    E = np.exp(C * B * t)
    fit = gronwall_monitor(t, E, np.full_like(t, B))
    assert fit.C == pytest.approx(C, abs=1e-9)
    assert fit.C_tight == pytest.approx(C, abs=1e-9)
    assert fit.ok


def test_gronwall_decay_clips_at_zero():
    t = np.linspace(0, 1, 11)
    fit = gronwall_monitor(t, np.exp(-t), np.ones_like(t))
    assert fit.C == 0.0 and fit.C_tight < 0


def test_gronwall_input_checks():
    with pytest.raises(DomainError):
        gronwall_monitor([0, 1], [1, -1], [1, 1])
    with pytest.raises(DomainError):
        gronwall_monitor([0], [1], [1])


def test_energy_csv_schema(tmp_path):
    path = tmp_path / "e.csv"
    write_energy_csv(path, [{"t": 0.0, "E_total": 1.0}])
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ENERGY_COLUMNS
    assert rows[1][0] == "0" and rows[1][ENERGY_COLUMNS.index("A")] == ""
