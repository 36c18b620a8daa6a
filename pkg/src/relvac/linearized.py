"""Linearized good-variable system, its energy and the growth monitor.

Around a background ``(r, v)`` a perturbation ``(s, w)`` evolves by::

    d_t s   = -c.grad s - r a1 v.grad s - (1/k) G^{il} d_i r w_l - r G^{il} d_i w_l
              + V1 s + r W1^l w_l
    d_t w_i = -c.grad w_i - a2 d_i s + V2_i s + W2_i^l w_l

with ``c = v/v0`` and ``k`` = kappa.  The potentials are the exact first
variations of the coefficient products in the nonlinear system::

    V1     = a2 v.grad r / v0^2 - G:grad v - r d_r G:grad v - a1 v.grad r - r d_r a1 v.grad r
    W1^l   = -a3 G^{il} d_i r - d_{v^l} G:grad v - a1 d_l r - d_{v^l} a1 v.grad r
    V2_i   = a2 v^j d_j v_i / v0^2 - d_r a2 d_i r
    W2_i^l = -(a0/(k<r>)) G^{jl} d_j v_i - d_{v^l} a2 d_i r

so :func:`lin_rhs` is the directional derivative of
:func:`relvac.dynamics.rhs` at the background.  The energy is the ``calH``
norm squared of :mod:`relvac.spaces`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InadmissibleStateError
from .goodvars import Params, coefficient_arrays, coefficient_partials
from .grid import Field, extend, gradient
from .spaces import control_B, norm_H_squared
from .state import GoodState

__all__ = ["LinState", "Potentials", "potentials", "lin_rhs", "lin_rhs_arrays", "E_lin",
           "lin_gronwall", "LinGronwallResult", "directional_derivative_error"]


@dataclass(frozen=True, eq=False)
class LinState:
    """Perturbation ``(s, w)`` on the background's mask (arrays over the grid)."""

    s: np.ndarray
    w: np.ndarray
    background: GoodState

    def __post_init__(self) -> None:
        grid = self.background.grid
        s = np.asarray(self.s, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if w.shape == grid.shape and grid.dim == 1:
            w = w[..., None]
        if s.shape != grid.shape or w.shape != grid.shape + (grid.dim,):
            raise DomainError("s must be a scalar and w a d-vector node array")
        m = self.background.mask
        if not (np.all(np.isfinite(s[m])) and np.all(np.isfinite(w[m]))):
            raise DomainError("perturbation must be finite on the background mask")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "w", w)

    @classmethod
    def on(cls, background: GoodState, s, w) -> "LinState":
        """Restrict to the background mask and refill the collar by extrapolation."""
        m = background.mask
        s = np.asarray(s, dtype=float)
        w = np.asarray(w, dtype=float)
        if w.shape == background.grid.shape and background.dim == 1:
            w = w[..., None]
        if background.free_boundary:
            s = extend(np.where(m, s, np.nan), m)
            w = extend(np.where(m[..., None], w, np.nan), m)
        return cls(s, w, background)


@dataclass(frozen=True)
class Potentials:
    V1: np.ndarray   # shape S
    W1: np.ndarray   # shape S + (d,), index l
    V2: np.ndarray   # shape S + (d,), index i
    W2: np.ndarray   # shape S + (d, d), [..., i, l]


def _background_arrays(grid, r, v, known, params: Params):
    rr = np.where(known, r, 0.0)
    vv = np.where(known[..., None], v, 0.0)
    cb = coefficient_arrays(rr, vv, params, check=False)
    part = coefficient_partials(rr, vv, params)
    dr = gradient(r, known, grid)
    dv = gradient(v, known, grid)  # [..., j, i] = d_i v_j
    return rr, vv, cb, part, dr, dv


def _potentials(rr, vv, cb, part, dr, dv, params: Params) -> Potentials:
    k = params.kappa
    v0 = cb.v0
    vdr = np.einsum("...i,...i->...", vv, dr)
    Gdv = np.einsum("...ij,...ji->...", cb.G, dv)
    dGr_dv = np.einsum("...ij,...ji->...", part.dr["G"], dv)
    V1 = (cb.a2 * vdr / v0**2 - Gdv - rr * dGr_dv - cb.a1 * vdr
          - rr * part.dr["a1"] * vdr)
    dGv_dv = np.einsum("...ijl,...ji->...l", part.dv["G"], dv)
    W1 = (-cb.a3[..., None] * np.einsum("...il,...i->...l", cb.G, dr) - dGv_dv
          - cb.a1[..., None] * dr - part.dv["a1"] * vdr[..., None])
    vdv = np.einsum("...j,...ij->...i", vv, dv)
    V2 = cb.a2[..., None] * vdv / (v0**2)[..., None] - part.dr["a2"][..., None] * dr
    coef = (cb.a0 / (k * cb.r_bracket))[..., None, None]
    W2 = (-coef * np.einsum("...jl,...ij->...il", cb.G, dv)
          - dr[..., :, None] * part.dv["a2"][..., None, :])
    return Potentials(V1=V1, W1=W1, V2=V2, W2=W2)


def potentials(background: GoodState) -> Potentials:
    """The four potential fields of the linearized system."""
    b = background
    rr, vv, cb, part, dr, dv = _background_arrays(b.grid, b.r.values, b.v.values, b.known, b.params)
    return _potentials(rr, vv, cb, part, dr, dv, b.params)


def lin_rhs_arrays(grid, r, v, known, params: Params, s, w):
    """``(d_t s, d_t w)`` for node arrays; NaN off ``known``."""
    rr, vv, cb, part, dr, dv = _background_arrays(grid, r, v, known, params)
    pot = _potentials(rr, vv, cb, part, dr, dv, params)
    k = params.kappa
    ds = gradient(s, known, grid)
    dw = gradient(w, known, grid)  # [..., l, i] = d_i w_l
    c = vv / cb.v0[..., None]
    st = (-np.einsum("...i,...i->...", c, ds)
          - rr * cb.a1 * np.einsum("...i,...i->...", vv, ds)
          - (1.0 / k) * np.einsum("...il,...i,...l->...", cb.G, dr, w)
          - rr * np.einsum("...il,...li->...", cb.G, dw)
          + pot.V1 * s + rr * np.einsum("...l,...l->...", pot.W1, w))
    wt = (-np.einsum("...j,...ij->...i", c, dw) - cb.a2[..., None] * ds
          + pot.V2 * s[..., None] + np.einsum("...il,...l->...i", pot.W2, w))
    st = np.where(known, st, np.nan)
    wt = np.where(known[..., None], wt, np.nan)
    return st, wt


def lin_rhs(ls: LinState):
    """Time derivatives of the perturbation as node arrays."""
    b = ls.background
    return lin_rhs_arrays(b.grid, b.r.values, b.v.values, b.known, b.params, ls.s, ls.w)


def E_lin(ls: LinState) -> float:
    """Linearized energy, equal to ``norm_H(s, w, background)**2``."""
    return norm_H_squared(ls.s, ls.w, ls.background)


def directional_derivative_error(ls: LinState, delta: float, collar_nodes: int = 5) -> float:
    """Max difference between :func:`lin_rhs` and a one-sided difference quotient.

    The nonlinear right side is evaluated on the background's known nodes at
    ``(r + delta s, v + delta w)``; the comparison excludes nodes within
    ``collar_nodes`` steps of the mask edge.
    """
    from scipy import ndimage

    from .dynamics import rhs_arrays

    b = ls.background
    kn = b.known
    r0, v0 = rhs_arrays(b.grid, b.r.values, b.v.values, kn, b.params)
    r1, v1 = rhs_arrays(b.grid, b.r.values + delta * ls.s, b.v.values + delta * ls.w, kn, b.params)
    st, wt = lin_rhs(ls)
    cross = ndimage.generate_binary_structure(b.dim, 1)
    region = ndimage.binary_erosion(b.mask, structure=cross, iterations=collar_nodes, border_value=1)
    es = np.abs((r1 - r0) / delta - st)[region]
    ew = np.abs((v1 - v0) / delta - wt)[region]
    return float(max(np.max(es), np.max(ew)))


@dataclass
class LinGronwallResult:
    t: np.ndarray
    E: np.ndarray
    B: np.ndarray
    dlogE: np.ndarray
    C: float
    final: LinState | None = None
    rows: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "E_lin", "B", "dlogE_lin_dt"])
            for row in zip(self.t, self.E, self.B, self.dlogE):
                wr.writerow([f"{x:.17g}" for x in row])


def _lin_step(b: GoodState, s, w, dt: float):
    """One RK4 step of background and perturbation together."""
    from .dynamics import rhs_arrays

    grid, kn, p = b.grid, b.known, b.params
    r0, v0 = b.r.values, b.v.values

    def f(r, v, s_, w_):
        rt, vt = rhs_arrays(grid, r, v, kn, p)
        st, wt = lin_rhs_arrays(grid, r, v, kn, p, s_, w_)
        return rt, vt, st, wt

    k1 = f(r0, v0, s, w)
    k2 = f(r0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1], s + 0.5 * dt * k1[2], w + 0.5 * dt * k1[3])
    k3 = f(r0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1], s + 0.5 * dt * k2[2], w + 0.5 * dt * k2[3])
    k4 = f(r0 + dt * k3[0], v0 + dt * k3[1], s + dt * k3[2], w + dt * k3[3])
    s1 = s + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    w1 = w + dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return s1, w1


def lin_gronwall(traj, ls0: LinState, frozen: bool = False) -> LinGronwallResult:
    """Evolve the perturbation along a background trajectory and fit ``C``.

    ``traj`` is a list of background states at uniformly spaced times (as
    produced by :func:`relvac.dynamics.integrate` with ``keep_every=1``).
    Each step advances the perturbation with the same RK4 stages that take
    ``traj[n]`` to ``traj[n+1]``.  With ``frozen=True`` the first background
    is used throughout.  ``C`` is the largest ratio
    ``|d log E_lin/dt| / B(t)`` over interior times.
    """
    if len(traj) < 3:
        raise DomainError("need at least three background snapshots")
    times = np.array([b.t for b in traj])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8) or dts[0] <= 0:
        raise DomainError("background snapshots must be uniformly spaced")
    dt = float(dts[0])
    s, w = ls0.s, ls0.w
    Es, Bs = [], []
    cur = ls0
    for n in range(len(traj)):
        b = traj[0] if frozen else traj[n]
        if n > 0:
            prev = traj[0] if frozen else traj[n - 1]
            s, w = _lin_step(prev, cur.s, cur.w, dt)
            try:
                cur = LinState.on(b, s, w)
            except DomainError as exc:
                raise InadmissibleStateError(f"perturbation lost at t={b.t:.4g}: {exc}") from exc
        Es.append(E_lin(cur))
        Bs.append(control_B(b))
    E = np.array(Es)
    B = np.array(Bs)
    if np.all(E == 0):
        dlog = np.zeros_like(E)
        C = 0.0
    else:
        dlog = np.gradient(np.log(E), times if not frozen else dt * np.arange(len(E)))
        C = float(np.max(np.abs(dlog[1:-1]) / B[1:-1]))
    return LinGronwallResult(t=times, E=E, B=B, dlogE=dlog, C=C, final=cur)
