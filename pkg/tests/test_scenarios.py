"""Scenario parsing, validation and bundled configurations."""

from __future__ import annotations

import numpy as np
import pytest

from relvac.errors import ConfigError
from relvac.scenarios import (DEFAULTS, FAMILIES, bundled_names, format_scenario, initial_arrays,
                              load_scenario, parse_scenario)


def test_bundled_scenarios_load():
    names = bundled_names()
    assert {"blob1d", "offcenter1d", "disk2d", "small_a"} <= set(names)
    for n in names:
        sc = load_scenario(n)
        s = sc.initial_state()
        assert s.mask.any()


def test_round_trip_format():
    sc = load_scenario("offcenter1d")
    again = parse_scenario(format_scenario(sc))
    assert again.values == sc.values
    assert set(again.values) == set(DEFAULTS)


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "family = nope",
    "N = 4",
    "kappa = -1",
    "integrator = euler",
    "level = 3",
    "gamma = 1.5",
    "family = disk2d",
    "N = abc",
    "no equals sign",
    "x_max = 0.5",
])
def test_invalid_scenarios(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_missing_scenario():
    with pytest.raises(ConfigError):
        load_scenario("does-not-exist")


def test_updated_validates():
    sc = load_scenario("blob1d")
    assert sc.updated(eps=0.005).eps == 0.005
    with pytest.raises(ConfigError):
        sc.updated(nonsense=1)
    with pytest.raises(ConfigError):
        sc.updated(eps=-1.0)


def test_initial_data_families(grid256):
    x = grid256.axes[0]
    r, v = initial_arrays("blob1d", grid256, h0=0.5, alpha=0.2, beta=0.1)
    np.testing.assert_allclose(r, 0.5 * (1 - x**2))
    np.testing.assert_allclose(v[:, 0], 0.2 * x * (1 - x**2) + 0.1)
    r, _ = initial_arrays("offcenter1d", grid256, gamma=0.3)
    np.testing.assert_allclose(r, 0.5 * (1 - x**2) * (1 + 0.3 * x))
    assert set(FAMILIES) == {"blob1d", "offcenter1d", "disk2d"}
    with pytest.raises(ConfigError):
        initial_arrays("nope", grid256)
