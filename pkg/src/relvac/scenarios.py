"""Initial-data families and the plain-text scenario format.

Families
--------
``blob1d``
    ``r0 = h0 (1 - x^2)_+``, ``v0 = alpha x (1 - x^2)_+ + beta``.
``offcenter1d``
    ``r0 = h0 (1 - x^2)_+ (1 + gamma x)``, same velocity as ``blob1d``.
``disk2d``
    ``r0 = h0 (1 - |x|^2)_+``, ``v0 = alpha x (1 - |x|^2)_+ + omega (-y, x) + beta``.

All three have a simple zero of ``r`` on the unit sphere, so the vacuum
boundary and its slope ``2 h0`` (times ``1 +- gamma`` off centre) are known
in closed form.

Scenario files
--------------
One ``key = value`` pair per line; ``#`` starts a comment.  Recognized keys
and their defaults are listed in :data:`DEFAULTS`.  Values are parsed as
int, float, bool or string in that order.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .goodvars import Params
from .grid import Grid
from .state import GoodState

FAMILIES = ("blob1d", "offcenter1d", "disk2d")

DEFAULTS: dict = {
    "name": "unnamed",
    "family": "blob1d",
    "kappa": 1.0,
    "dim": 1,
    "N": 512,
    "x_min": -1.5,
    "x_max": 1.5,
    "h0": 0.5,
    "alpha": 0.2,
    "beta": 0.0,
    "gamma": 0.0,
    "omega": 0.0,
    "T": 0.2,
    "eps": 0.01,
    "dt": 0.0,
    "integrator": "rk4",
    "level": 2,
    "cfl": 0.4,
    "c_max": 1000.0,
    "snapshot_every": 0,
    "diagnostics": "energy,control",
    "seed": 0,
    "vacuum_slope_min": 1e-3,
    "vacuum_slope_max": 1e3,
}


@dataclass
class Scenario:
    """A fully specified run configuration (see :data:`DEFAULTS`)."""

    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    @property
    def params(self) -> Params:
        return Params(kappa=float(self.kappa), dim=int(self.dim),
                      vacuum_slope_min=float(self.vacuum_slope_min),
                      vacuum_slope_max=float(self.vacuum_slope_max))

    @property
    def grid(self) -> Grid:
        return Grid.uniform(int(self.dim), float(self.x_min), float(self.x_max), int(self.N))

    def initial_state(self) -> GoodState:
        return initial_state(self.family, self.grid, self.params,
                             h0=self.h0, alpha=self.alpha, beta=self.beta,
                             gamma=self.gamma, omega=self.omega)

    def updated(self, **kw) -> "Scenario":
        vals = dict(self.values)
        for k, v in kw.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown scenario key {k!r}")
            vals[k] = v
        sc = Scenario(vals)
        sc.check()
        return sc

    def check(self) -> None:
        v = self.values
        if v["family"] not in FAMILIES:
            raise ConfigError(f"unknown initial-data family {v['family']!r}")
        if v["integrator"] not in ("rk4", "threestep"):
            raise ConfigError("integrator must be rk4 or threestep")
        if (v["family"] == "disk2d") != (int(v["dim"]) == 2):
            raise ConfigError("disk2d requires dim = 2 and the 1-d families dim = 1")
        if not float(v["kappa"]) > 0:
            raise ConfigError("kappa must be positive")
        if int(v["N"]) < 16:
            raise ConfigError("N must be at least 16")
        if not float(v["x_max"]) > 1.0 or not float(v["x_min"]) < -1.0:
            raise ConfigError("the box must contain the initial domain [-1, 1]")
        if float(v["T"]) < 0 or float(v["eps"]) <= 0:
            raise ConfigError("T must be nonnegative and eps positive")
        if float(v["T"]) / float(v["eps"]) > 1e5:
            raise ConfigError("T/eps exceeds 1e5 steps")
        if int(v["level"]) not in (0, 2, 4):
            raise ConfigError("level must be 0, 2 or 4")
        if float(v["h0"]) <= 0:
            raise ConfigError("h0 must be positive")
        if abs(float(v["gamma"])) >= 1:
            raise ConfigError("|gamma| must be below 1 to keep a simple zero")


def _parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; unknown keys raise :class:`ConfigError`."""
    vals = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parsed = _parse_value(value)
        default = DEFAULTS[key]
        if isinstance(default, float) and isinstance(parsed, int) and not isinstance(parsed, bool):
            parsed = float(parsed)
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(parsed, (bool, str)):
                raise ConfigError(f"line {lineno}: {key} expects a number")
        vals[key] = parsed
    sc = Scenario(vals)
    sc.check()
    return sc


def format_scenario(sc: Scenario) -> str:
    return "".join(f"{k} = {sc.values[k]}\n" for k in DEFAULTS)


def bundled_names() -> list[str]:
    root = importlib.resources.files("relvac") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_scenario(name_or_path: str) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_scenario(path.read_text())
    res = importlib.resources.files("relvac") / "scenarios" / f"{name_or_path}.cfg"
    if res.is_file():
        return parse_scenario(res.read_text())
    raise ConfigError(f"scenario {name_or_path!r} not found (bundled: {bundled_names()})")


def initial_arrays(family: str, grid: Grid, h0: float = 0.5, alpha: float = 0.2,
                   beta: float = 0.0, gamma: float = 0.0, omega: float = 0.0):
    """Closed-form ``(r0, v0)`` node arrays (r negative outside the unit ball)."""
    X = grid.coords
    rho2 = np.sum(X * X, axis=-1)
    bump = 1.0 - rho2
    if family == "blob1d":
        r = h0 * bump
        v = alpha * X * bump[..., None] + beta
    elif family == "offcenter1d":
        r = h0 * bump * (1.0 + gamma * X[..., 0])
        v = alpha * X * bump[..., None] + beta
    elif family == "disk2d":
        r = h0 * bump
        rot = np.stack([-X[..., 1], X[..., 0]], axis=-1)
        v = alpha * X * np.maximum(bump, 0.0)[..., None] + omega * rot + beta
    else:
        raise ConfigError(f"unknown initial-data family {family!r}")
    return r, v


def initial_state(family: str, grid: Grid, params: Params, **kw) -> GoodState:
    r, v = initial_arrays(family, grid, **kw)
    return GoodState.from_arrays(grid, r, v, params)
