"""Good derived variables, energies and the nonlinear growth monitor.

Material derivatives
--------------------
``D_t = d_t + (v/v0).grad`` is applied to an observable by following the
fluid: starting from every node of the central snapshot of a window of
equally spaced snapshots, the characteristics ``dX/dt = v/v0`` are traced
through the window with RK4 (the velocity is interpolated cubically in
space and by Lagrange interpolation through the window in time).  The
observable sampled along each path is then differentiated in time with
central finite-difference weights.

Good variables at level ``2k``::

    s0 = r,  w0 = v,  s1 = d_t r,  w1 = d_t v,
    s2 = D_t^2 r + (1/2) (a0 a2 / (k <r>)) G^{ij} d_i r d_j r,
    w_j = D_t^j v                                        (j >= 2),
    s_j = D_t^j r - (a0 / (k <r>)) G^{ij} d_i r D_t^(j-1) v_j   (j >= 3).

Energies::

    E_wave      = sum_{j <= k} ||(s_{2j}, w_{2j})||_calH^2
    E_transport = ||omega||^2 in H^{2k-1, k + 1/kappa}   (two dimensions, k >= 1)
    E_total     = E_wave + E_transport
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, HypothesisError, UnsupportedLevelError
from .grid import Field, gradient, interpolate
from .spaces import NormSpec, control_norms, norm_H2k, norm_H_squared, norm_Hjsigma
from .state import GoodState
from .stencils import fornberg_weights

__all__ = [
    "GoodDerivedVars", "EnergyReport", "material_power", "good_vars", "E_wave",
    "E_transport", "energy_report", "coercivity_ratio", "gronwall_monitor", "GronwallFit",
    "snapshot_window", "critical_exponent", "vorticity_2k", "window_size",
    "write_energy_csv", "A_MAX", "default_dtau", "energy_at",
]

#: Largest control norm ``A`` at which coercivity is claimed.
A_MAX = 0.2

LEVELS = (0, 2, 4)


def critical_exponent(dim: int, kappa: float) -> float:
    """``2 k0 = d + 1 + 1/kappa`` (reported for context only)."""
    return dim + 1.0 + 1.0 / kappa


def window_size(k: int) -> int:
    """Snapshots needed for the good variables of level ``2k`` (fourth-order stencils)."""
    if k == 0:
        return 1
    return 4 * k + 1 if k >= 2 else 5


# ---------------------------------------------------------------------------
# snapshot windows
# ---------------------------------------------------------------------------

def default_dtau(state: GoodState, level: int) -> float:
    """Snapshot spacing used when none is given.

    Level 2 uses a quarter grid step.  Level 4 uses ``sqrt(h)/4`` so that the
    fourth difference quotient does not amplify interpolation error.
    """
    h = state.grid.h
    return 0.25 * h if level <= 2 else 0.25 * np.sqrt(h)


def snapshot_window(state: GoodState, half: int, dtau: float, model: str = "full") -> list:
    """``2*half + 1`` RK4 snapshots centred at ``state`` with spacing ``dtau``.

    Each spacing is covered by as many equal RK4 substeps as the CFL limit
    requires.  The backward half uses negative time steps (the system is
    reversible).
    """
    from .dynamics import rk4_step, stable_dt

    if half < 0 or dtau <= 0:
        raise DomainError("need half >= 0 and dtau > 0")
    nsub = max(1, int(np.ceil(dtau / (0.7 * stable_dt(state, model=model)))))
    step = dtau / nsub
    out = {0: state}
    for sign in (-1, 1):
        cur = state
        for n in range(1, half + 1):
            for _ in range(nsub):
                cur = rk4_step(cur, sign * step, model=model)
            cur = cur.replace(t=state.t + sign * n * dtau, validate=False) if nsub > 1 else cur
            out[sign * n] = cur
    return [out[n] for n in range(-half, half + 1)]


def _uniform_times(traj: Sequence[GoodState]):
    times = np.array([s.t for s in traj], dtype=float)
    if len(traj) < 2:
        return times, 0.0
    d = np.diff(times)
    if not np.allclose(d, d[0], rtol=1e-8, atol=1e-14) or d[0] <= 0:
        raise DomainError("snapshots must be uniformly spaced in increasing time")
    return times, float(d[0])


class _Characteristics:
    """Paths of the fluid through a snapshot window, started at the centre."""

    def __init__(self, traj: Sequence[GoodState], center: int | None = None):
        self.traj = list(traj)
        self.times, self.dtau = _uniform_times(self.traj)
        self.n = len(self.traj)
        self.c = self.n // 2 if center is None else center
        st = self.traj[self.c]
        self.grid = st.grid
        self.start_mask = st.mask
        self.start = self.grid.coords[st.mask]
        self._vel = [(s.velocity, s.known) for s in self.traj]
        self.paths = self._trace()
        ok = np.ones(len(self.start), dtype=bool)
        for X in self.paths:
            ok &= np.all(np.isfinite(X), axis=-1)
        self.ok = ok

    def _velocity(self, X: np.ndarray, tau: float) -> np.ndarray:
        if self.n == 1:
            vel, kn = self._vel[0]
            return interpolate(vel, kn, self.grid, X)
        wts = fornberg_weights(tau, self.times, 0)[0]
        out = np.zeros_like(X)
        for wgt, (vel, kn) in zip(wts, self._vel):
            if wgt == 0.0:
                continue
            out = out + wgt * interpolate(vel, kn, self.grid, X)
        return out

    def _rk4(self, X, tau, dt):
        k1 = self._velocity(X, tau)
        k2 = self._velocity(X + 0.5 * dt * k1, tau + 0.5 * dt)
        k3 = self._velocity(X + 0.5 * dt * k2, tau + 0.5 * dt)
        k4 = self._velocity(X + dt * k3, tau + dt)
        return X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def _trace(self) -> list:
        paths: list = [None] * self.n
        paths[self.c] = self.start.copy()
        X = self.start.copy()
        for m in range(self.c, self.n - 1):
            X = self._rk4(X, self.times[m], self.dtau)
            paths[m + 1] = X
        X = self.start.copy()
        for m in range(self.c, 0, -1):
            X = self._rk4(X, self.times[m], -self.dtau)
            paths[m - 1] = X
        return paths

    def sample(self, observable: Callable) -> np.ndarray:
        """Observable values along the paths, shape ``(n_snap, n_points, ...)``."""
        out = []
        for st, X in zip(self.traj, self.paths):
            vals = np.asarray(observable(st), dtype=float)
            kn = st.known & _finite_nodes(vals, self.grid.dim)
            out.append(interpolate(vals, kn, self.grid, X))
        return np.stack(out, axis=0)

    def derivative(self, samples: np.ndarray, order: int) -> np.ndarray:
        if order == 0:
            return samples[self.c]
        if self.n < order + 1:
            raise DomainError(f"a window of {self.n} snapshots cannot give D_t^{order}")
        wts = fornberg_weights(self.times[self.c], self.times, order)[order]
        return np.tensordot(wts, samples, axes=(0, 0))

    def to_grid(self, pointwise: np.ndarray) -> np.ndarray:
        shape = self.grid.shape + pointwise.shape[1:]
        out = np.full(shape, np.nan)
        vals = pointwise.copy()
        vals[~self.ok] = np.nan
        out[self.start_mask] = vals
        return out

    @property
    def coverage(self) -> float:
        return float(np.mean(self.ok)) if self.ok.size else 0.0


def _finite_nodes(vals: np.ndarray, dim: int) -> np.ndarray:
    fin = np.isfinite(vals)
    return fin if fin.ndim == dim else np.all(fin, axis=tuple(range(dim, fin.ndim)))


def _observable(obs) -> Callable:
    if callable(obs):
        return obs
    if obs == "r":
        return lambda st: st.r.values
    if obs == "v":
        return lambda st: st.v.values
    raise DomainError(f"unknown observable {obs!r}")


def material_power(observable, traj: Sequence[GoodState], k: int, center: int | None = None):
    """``D_t^k`` of an observable at the central snapshot.

    ``observable`` is ``"r"``, ``"v"`` or a callable mapping a state to node
    values.  Returns ``(values, coverage)``: node values on the central mask
    (NaN where a path left the known region) and the fraction of mask nodes
    whose paths stayed inside.
    """
    ch = _Characteristics(traj, center)
    smp = ch.sample(_observable(observable))
    return ch.to_grid(ch.derivative(smp, k)), ch.coverage


# ---------------------------------------------------------------------------
# good variables
# ---------------------------------------------------------------------------

@dataclass
class GoodDerivedVars:
    k: int
    s: list
    w: list
    omega: dict
    state: GoodState
    coverage: float = 1.0


def _time_derivative_at_nodes(traj, c, values_fn, order: int) -> np.ndarray:
    times, _ = _uniform_times(traj)
    wts = fornberg_weights(times[c], times, order)[order]
    acc = 0.0
    for wgt, st in zip(wts, traj):
        vals = np.where(_bcast(st.known, values_fn(st)), values_fn(st), np.nan)
        acc = acc + wgt * vals
    return acc


def _bcast(mask, vals):
    return mask.reshape(mask.shape + (1,) * (np.ndim(vals) - mask.ndim))


def vorticity_2k(state: GoodState, k: int) -> dict:
    """The list ``r^a d^b omega`` with ``|b| <= 2k-1`` and ``|b| - a = k - 1``.

    Keys are ``(a, b)`` with ``b`` a multi-index; values are node arrays of
    the scalar vorticity ``d_1 v_2 - d_2 v_1`` (empty in one dimension).
    """
    from .spaces import derivative_multi, multi_indices

    if state.dim == 1 or k == 0:
        return {}
    dv = state.grad_v
    om = dv[..., 1, 0] - dv[..., 0, 1]
    kn = state.known & np.isfinite(om)
    out = {}
    for order in range(k - 1, 2 * k):
        a = order - (k - 1)
        for b in multi_indices(state.dim, order):
            der = derivative_multi(om, kn, state.grid, b) if order else om
            out[(a, b)] = np.where(state.mask, state.r.values, np.nan) ** a * der
    return out


def good_vars(traj: Sequence[GoodState], k: int, center: int | None = None) -> GoodDerivedVars:
    """Good variables ``s_j, w_j`` for ``j = 0..2k`` at the central snapshot."""
    if k not in (0, 1, 2):
        raise UnsupportedLevelError("levels 2k in {0, 2, 4} are supported")
    traj = list(traj)
    c = len(traj) // 2 if center is None else center
    st = traj[c]
    if k == 0:
        return GoodDerivedVars(0, [st.r.values], [st.v.values], {}, st)
    if len(traj) < 2 * k + 1:
        raise DomainError(f"level {2 * k} needs at least {2 * k + 1} snapshots, got {len(traj)}")
    ch = _Characteristics(traj, c)
    smp_r = ch.sample(lambda s: s.r.values)
    smp_v = ch.sample(lambda s: s.v.values)
    Dr = [ch.to_grid(ch.derivative(smp_r, j)) for j in range(2 * k + 1)]
    Dv = [ch.to_grid(ch.derivative(smp_v, j)) for j in range(2 * k + 1)]
    Dr[0], Dv[0] = st.r.values, st.v.values
    cb = st.coeffs
    gr = st.grad_r
    corr = (cb.a0 / (st.params.kappa * cb.r_bracket))
    s = [st.r.values, _time_derivative_at_nodes(traj, c, lambda q: q.r.values, 1)]
    w = [st.v.values, _time_derivative_at_nodes(traj, c, lambda q: q.v.values, 1)]
    for j in range(2, 2 * k + 1):
        if j == 2:
            sj = Dr[2] + 0.5 * corr * cb.a2 * np.einsum("...ij,...i,...j->...", cb.G, gr, gr)
        else:
            sj = Dr[j] - corr * np.einsum("...ij,...i,...j->...", cb.G, gr, Dv[j - 1])
        s.append(sj)
        w.append(Dv[j])
    return GoodDerivedVars(k, s, w, vorticity_2k(st, k), st, ch.coverage)


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def _restrict(vals, state):
    m = state.mask
    return np.where(_bcast(m, vals), vals, np.nan)


def E_wave(gv: GoodDerivedVars) -> float:
    st = gv.state
    total = 0.0
    for j in range(gv.k + 1):
        total += norm_H_squared(_restrict(gv.s[2 * j], st), _restrict(gv.w[2 * j], st), st)
    return float(total)


def E_transport(state: GoodState, k: int) -> float:
    """``||omega||^2`` in ``H^{2k-1, k + 1/kappa}`` (zero in one dimension or at k = 0)."""
    if state.dim == 1 or k == 0:
        return 0.0
    dv = state.grad_v
    om = dv[..., 1, 0] - dv[..., 0, 1]
    spec = NormSpec(2 * k - 1, k + 1.0 / state.params.kappa)
    return float(norm_Hjsigma(om, spec, state.r) ** 2)


@dataclass
class EnergyReport:
    level: int
    t: float
    E_wave: float
    E_transport: float
    E_total: float
    norm2: float
    coercivity_ratio: float
    A: float
    B: float
    coverage: float = 1.0

    def __post_init__(self) -> None:
        if self.E_total != self.E_wave + self.E_transport:
            raise ValueError("E_total must equal E_wave + E_transport")


def energy_report(traj: Sequence[GoodState], level: int, center: int | None = None) -> EnergyReport:
    """Energies, ``calH^{2k}`` norm, ratio and control norms at the centre."""
    if level not in LEVELS:
        raise UnsupportedLevelError(f"level {level} not in {LEVELS}")
    k = level // 2
    traj = list(traj)
    gv = good_vars(traj, k, center)
    st = gv.state
    ew = E_wave(gv)
    et = E_transport(st, k)
    tot = ew + et
    n2 = norm_H2k(st.r, st.v, k, st.r, st.params) ** 2
    cn = control_norms(st)
    return EnergyReport(level=level, t=st.t, E_wave=ew, E_transport=et, E_total=tot,
                        norm2=n2, coercivity_ratio=tot / n2 if n2 > 0 else np.nan,
                        A=cn.A, B=cn.B, coverage=gv.coverage)


def energy_at(state: GoodState, level: int, dtau: float | None = None,
              model: str = "full") -> EnergyReport:
    """:func:`energy_report` on a window generated around ``state``."""
    if level == 0:
        return energy_report([state], 0)
    k = level // 2
    dtau = default_dtau(state, level) if dtau is None else dtau
    win = snapshot_window(state, window_size(k) // 2, dtau, model)
    return energy_report(win, level)


def coercivity_ratio(traj: Sequence[GoodState], level: int, check_A: bool = True):
    """``(E / ||(r,v)||^2, ||(r,v)||^2 / E)`` at the central snapshot.

    Raises :class:`HypothesisError` when ``A`` exceeds :data:`A_MAX`.
    """
    rep = energy_report(traj, level)
    if check_A and rep.A > A_MAX:
        raise HypothesisError(f"control norm A = {rep.A:.3g} exceeds {A_MAX}")
    return rep.coercivity_ratio, 1.0 / rep.coercivity_ratio


# ---------------------------------------------------------------------------
# growth monitor
# ---------------------------------------------------------------------------

@dataclass
class GronwallFit:
    C: float
    C_lsq: float
    C_tight: float
    t: np.ndarray
    logE: np.ndarray
    intB: np.ndarray
    ok: bool = True
    extras: dict = field(default_factory=dict)


def gronwall_monitor(t, E, B) -> GronwallFit:
    """Smallest ``C >= 0`` with ``log E(t) - log E(0) <= C int_0^t B``.

    ``B`` is integrated with the trapezoid rule on the given times.  The
    least-squares slope of ``log E(t) - log E(0)`` against ``int B`` is
    returned as well, and so is ``C_tight``, the same supremum without the
    clipping at zero (negative when the energy decays).
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    if t.shape != E.shape or t.shape != B.shape or t.size < 2:
        raise DomainError("t, E and B must be equal-length series of at least two points")
    if np.any(E <= 0):
        raise DomainError("energies must be positive")
    logE = np.log(E) - np.log(E[0])
    intB = np.concatenate([[0.0], np.cumsum(0.5 * (B[1:] + B[:-1]) * np.diff(t))])
    pos = intB > 0
    C_tight = float(np.max(logE[pos] / intB[pos])) if pos.any() else 0.0
    C = max(0.0, C_tight)
    C_lsq = float(np.dot(logE, intB) / np.dot(intB, intB)) if pos.any() else 0.0
    ok = bool(np.all(logE <= C * intB + 1e-12))
    return GronwallFit(C=C, C_lsq=C_lsq, C_tight=C_tight, t=t, logE=logE, intB=intB, ok=ok)


ENERGY_COLUMNS = ("t", "E_wave", "E_transport", "E_total", "A", "B", "x_l", "x_r",
                  "slope_l", "slope_r", "defect", "growth_factor")


def write_energy_csv(path, rows: Sequence[dict]) -> None:
    """Write rows with the shared energy-CSV columns (missing entries blank)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(ENERGY_COLUMNS)
        for row in rows:
            wr.writerow(["" if row.get(c) is None else f"{row[c]:.17g}" for c in ENERGY_COLUMNS])
