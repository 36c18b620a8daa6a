"""Three-phase time stepping: regularize, transport, Newton correction.

One step of size ``eps`` maps a state ``(r, v)`` to a new state:

1. *Regularize*: a normalized bump average with node-dependent width
   ``w(x) = max(c1 r(x)**.5 eps, c2 eps**2)``.  Widths below one grid step
   leave the node unchanged, widths above two steps smooth it fully, and
   widths in between blend the two linearly.
2. *Transport*: every known node ``x`` moves to ``x + eps v(x)/v0(x)``.
3. *Newton*: the transported values are corrected by::

       r(x') = r(x) - eps [r G^{ij} d_i v_j + r a1 v^i d_i r](x)
       v(x') = v(x) - eps [a2 d_i r](x)

   and the scattered cloud is resampled on the grid.  The new fluid
   region is ``{r > 0}``.

The per-step report records the energy growth factor and the max-norm
defect of the approximate-solution identities (transport with ``v/v0``)
on the interior of both domains minus a collar of five steps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (DomainError, FoldOverError, InadmissibleStateError, StepRejectedError)
from .grid import gradient, resample
from .kernels import mollify
from .state import GoodState

__all__ = [
    "StepReport", "RegularizeResult", "regularize", "transport", "newton_correct",
    "one_step", "run", "RunResult", "step_defect", "regularize_width",
    "InflationFit", "rough_data", "inflation_exponents",
]

C1 = 1.0
C2 = 1.0
DEFECT_COLLAR = 5
MAX_STEPS = 100_000
PILOT_PASSES = 3


@dataclass
class StepReport:
    epsilon: float
    t: float
    energy_before: float
    energy_after: float
    growth_factor: float
    local_residual: float
    boundary_shift: float
    regularization_noop: bool = False
    extras: dict = field(default_factory=dict)


@dataclass
class RegularizeResult:
    state: GoodState
    noop: bool
    width: np.ndarray


# ---------------------------------------------------------------------------
# regularization
# ---------------------------------------------------------------------------

def _width_from(r: np.ndarray, known: np.ndarray, eps: float, c1: float, c2: float) -> np.ndarray:
    r = np.where(known, np.maximum(np.nan_to_num(r), 0.0), 0.0)
    w = np.maximum(c1 * np.sqrt(r) * eps, c2 * eps * eps)
    return np.where(known, w, 0.0)


def _cap(width: np.ndarray, known: np.ndarray, h: float) -> np.ndarray:
    """Limit the width by the distance (in steps) to the nearest unknown node."""
    room = ndimage.distance_transform_cdt(known, metric="chessboard") - 1
    return np.minimum(width, np.maximum(room, 0) * h)


def regularize_width(state: GoodState, eps: float, c1: float = C1, c2: float = C2,
                     backend: str | None = None) -> np.ndarray:
    """Kernel width ``max(c1 r**.5 eps, c2 eps**2)`` on known nodes (0 elsewhere).

    ``r`` here is a pilot average of the density: ``PILOT_PASSES`` repeated
    averages with the width computed from the raw density.  Reading the width off rough data directly would
    make the width itself rough, and the averaged output would inherit that
    roughness through the width's variation.
    """
    known = state.known
    h = state.grid.h
    raw = _cap(_width_from(state.r.values, known, eps, c1, c2), known, h)
    radius = np.where(raw >= h, np.floor(raw / h).astype(np.int64), 0)
    if not np.any(radius >= 1):
        return raw
    pilot = np.where(known, state.r.values, 0.0)
    for _ in range(PILOT_PASSES):
        pilot = mollify(pilot, np.where(radius >= 1, raw, h), radius, h, backend=backend)
    return _cap(_width_from(pilot, known, eps, c1, c2), known, h)


def regularize(state: GoodState, eps: float, c1: float = C1, c2: float = C2,
               backend: str | None = None, warn: bool = True) -> RegularizeResult:
    """Mollify ``(r, v)`` with the variable-width bump of scale ``eps``.

    The kernel support at each node is capped so that it stays inside the
    known region.  When no node has a width of at least two grid steps the
    state is returned unchanged with ``noop=True``.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    grid = state.grid
    h = grid.h
    width = regularize_width(state, eps, c1, c2, backend=backend)
    if not np.any(width[state.mask] >= 2.0 * h):
        if warn and eps > 0:
            warnings.warn("regularization width below two grid steps; step is a no-op",
                          RuntimeWarning, stacklevel=2)
        if not np.any(width[state.mask] > h):
            return RegularizeResult(state, True, width)
    blend = np.clip(width / h - 1.0, 0.0, 1.0)
    radius = np.where(width > h, np.floor(width / h).astype(np.int64), 0)
    blend = np.where(radius >= 1, blend, 0.0)
    vals = np.concatenate([state.r.values[..., None], state.v.values], axis=-1)
    vals = np.where(state.known[..., None], vals, 0.0)
    sm = mollify(vals, np.where(radius >= 1, width, h), radius, h, backend=backend)
    out = (1.0 - blend)[..., None] * vals + blend[..., None] * sm
    r_new = np.where(state.known, out[..., 0], np.nan)
    v_new = np.where(state.known[..., None], out[..., 1:], np.nan)
    if state.free_boundary:
        mask = state.known & (np.nan_to_num(r_new, nan=-1.0) > 0)
    else:
        mask = state.mask
    noop = not np.any(width[state.mask] >= 2.0 * h)
    new = GoodState.from_arrays(grid, r_new, v_new, state.params, t=state.t,
                                free_boundary=state.free_boundary, mask=mask)
    return RegularizeResult(new, noop, width)


# ---------------------------------------------------------------------------
# transport and Newton
# ---------------------------------------------------------------------------

def _source_nodes(state: GoodState) -> np.ndarray:
    """Known nodes whose derivatives are available (mask and most of the collar)."""
    gr = state.grad_r
    gv = state.grad_v
    ok = state.known & np.all(np.isfinite(gr), axis=-1)
    ok &= np.all(np.isfinite(gv.reshape(state.grid.shape + (-1,))), axis=-1)
    return ok


def transport(state: GoodState, eps: float, nodes: np.ndarray | None = None):
    """Move nodes by ``eps v/v0``; returns ``(points, source_mask)``.

    Raises :class:`FoldOverError` if the map is not orientation preserving
    (non-monotone in one dimension, nonpositive Jacobian in two).
    """
    grid = state.grid
    src = _source_nodes(state) if nodes is None else nodes
    c = state.velocity
    X = grid.coords
    pts = X + eps * c
    m = state.mask
    if state.free_boundary and eps > 0:
        xs = X[m]
        width = float(np.max(np.ptp(xs, axis=0)))
        disp = float(np.max(np.linalg.norm(eps * c[m], axis=-1)))
        if disp > 0.5 * width:
            raise FoldOverError(f"displacement {disp:.3g} exceeds half the domain width")
    if grid.dim == 1:
        p = pts[src][:, 0]
        if np.any(np.diff(p) <= 0):
            raise FoldOverError("transport map is not monotone: reduce eps")
    else:
        dc = gradient(c, src, grid)  # [..., j, i] = d_i c_j
        J = np.eye(grid.dim) + eps * dc
        det = np.linalg.det(np.where(np.isfinite(J), J, np.eye(grid.dim)))
        if np.any(det[src] <= 0):
            raise FoldOverError("transport map folds over: reduce eps")
    return pts[src], src


def newton_correct(state: GoodState, eps: float, src: np.ndarray):
    """Corrected ``(r, v)`` values carried by the transported nodes ``src``."""
    cb = state.coeffs
    r = state.r.values
    v = state.v.values
    gr = state.grad_r
    gv = state.grad_v  # [..., j, i] = d_i v_j
    Gdv = np.einsum("...ij,...ji->...", cb.G, gv)
    vdr = np.einsum("...i,...i->...", v, gr)
    r_new = r - eps * (r * Gdv + r * cb.a1 * vdr)
    v_new = v - eps * cb.a2[..., None] * gr
    return r_new[src], v_new[src]


def _resample_state(state: GoodState, pts, r_vals, v_vals, t_new: float) -> GoodState:
    grid = state.grid
    vals = np.concatenate([r_vals[:, None], v_vals], axis=-1)
    if grid.dim == 1:
        order = np.argsort(pts[:, 0])
        pts, vals = pts[order], vals[order]
    out = resample(grid, pts, vals)
    r_new = out[..., 0]
    v_new = out[..., 1:]
    fin = np.isfinite(r_new) & np.all(np.isfinite(v_new), axis=-1)
    if state.free_boundary:
        mask = fin & (np.nan_to_num(r_new, nan=-1.0) > 0)
        lab, n = ndimage.label(mask)
        if n > 1:
            sizes = ndimage.sum(mask, lab, range(1, n + 1))
            mask = lab == (1 + int(np.argmax(sizes)))
        # the new region must not touch nodes the cloud did not cover
        cross = ndimage.generate_binary_structure(grid.dim, 1)
        inner = ndimage.binary_erosion(fin, structure=cross, border_value=1)
        if np.any(mask & ~inner):
            raise InadmissibleStateError("resampled fluid region reaches the edge of the cloud")
    else:
        mask = state.mask
        if not np.all(fin[mask]):
            raise InadmissibleStateError("patch nodes left uncovered by the transported cloud")
    return GoodState.from_arrays(grid, np.where(fin, r_new, np.nan),
                                 np.where(fin[..., None], v_new, np.nan), state.params,
                                 t=t_new, free_boundary=state.free_boundary, mask=mask)


# ---------------------------------------------------------------------------
# one step and runs
# ---------------------------------------------------------------------------

def step_defect(before: GoodState, after: GoodState, eps: float,
                collar: int = DEFECT_COLLAR) -> float:
    """Max-norm defect of the approximate-solution identities over one step.

    ``r1 - r0 + eps [c.grad r0 + r0 G dv0 + r0 a1 v0.grad r0]`` and
    ``v1 - v0 + eps [c.grad v0 + a2 grad r0]`` with ``c = v0/v0^0``, taken
    over nodes at least ``collar`` steps inside both domains.
    """
    if eps == 0:
        return 0.0
    cb = before.coeffs
    c = before.velocity
    gr, gv = before.grad_r, before.grad_v
    r0, v0 = before.r.values, before.v.values
    br_r = (np.einsum("...i,...i->...", c, gr) + r0 * np.einsum("...ij,...ji->...", cb.G, gv)
            + r0 * cb.a1 * np.einsum("...i,...i->...", v0, gr))
    br_v = np.einsum("...i,...ji->...j", c, gv) + cb.a2[..., None] * gr
    dr = after.r.values - r0 + eps * br_r
    dv = after.v.values - v0 + eps * br_v
    cross = ndimage.generate_binary_structure(before.dim, 1)
    both = before.mask & after.mask
    region = ndimage.binary_erosion(both, structure=cross, iterations=collar, border_value=1)
    if not region.any():
        raise DomainError("no interior nodes for the defect")
    return float(max(np.max(np.abs(dr[region])), np.max(np.abs(dv[region]))))


def _energy(state: GoodState, level: int | None) -> float:
    if level is None:
        return float("nan")
    from .energy import energy_at

    return energy_at(state, level).E_total


def _boundary_shift(a: GoodState, b: GoodState) -> float:
    if not (a.free_boundary and b.free_boundary):
        return 0.0
    pa, pb = a.boundary.points, b.boundary.points
    if a.dim == 1 and len(pa) == len(pb):
        return float(np.max(np.abs(pa - pb)))
    d = np.sqrt(np.sum((pa[:, None, :] - pb[None, :, :]) ** 2, axis=-1))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def one_step(state: GoodState, eps: float, level: int | None = 0, c_max: float = 1000.0,
             regularize_data: bool = True, backend: str | None = None):
    """Advance by ``eps``; returns ``(new_state, StepReport)``.

    With ``level=None`` energies are not evaluated (the growth factor is
    NaN and the guard is off).  A growth factor above ``1 + c_max eps``
    raises :class:`StepRejectedError` carrying the report.
    """
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if eps == 0:
        e = _energy(state, level)
        return state, StepReport(0.0, state.t, e, e, 1.0, 0.0, 0.0, True)
    e0 = _energy(state, level)
    if regularize_data:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            reg = regularize(state, eps, backend=backend)
        mid, noop = reg.state, reg.noop
    else:
        mid, noop = state, True
    pts, src = transport(mid, eps)
    r_vals, v_vals = newton_correct(mid, eps, src)
    new = _resample_state(mid, pts, r_vals, v_vals, state.t + eps)
    e1 = _energy(new, level)
    growth = e1 / e0 if level is not None and e0 > 0 else float("nan")
    rep = StepReport(epsilon=eps, t=new.t, energy_before=e0, energy_after=e1,
                     growth_factor=growth, local_residual=step_defect(state, new, eps),
                     boundary_shift=_boundary_shift(state, new), regularization_noop=noop)
    if level is not None and growth > 1.0 + c_max * eps:
        raise StepRejectedError(
            f"energy growth factor {growth:.6g} exceeds 1 + {c_max:g}*eps at t={state.t:.4g}", rep)
    return new, rep


@dataclass
class RunResult:
    states: list
    reports: list
    completed: bool = True
    error: str | None = None


def run(state: GoodState, T: float, eps: float, level: int | None = 0, c_max: float = 1000.0,
        keep_every: int = 1, callback=None, regularize_data: bool = True) -> RunResult:
    """Iterate :func:`one_step` to time ``T`` with steps of ``eps``.

    The last step is shortened to land on ``T``.  An inadmissible state or a
    rejected step halts the run; the partial result carries the message.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if T < 0:
        raise DomainError("T must be nonnegative")
    n = int(np.ceil((T - state.t) / eps - 1e-9))
    if n > MAX_STEPS:
        raise DomainError(f"T/eps = {n} exceeds {MAX_STEPS} steps")
    states, reports = [state], []
    cur = state
    for k in range(1, n + 1):
        step = min(eps, T - cur.t) if k == n else eps
        try:
            cur, rep = one_step(cur, step, level=level, c_max=c_max,
                                regularize_data=regularize_data)
        except StepRejectedError as exc:
            reports.append(exc.report)
            return RunResult(states, reports, False, str(exc))
        except InadmissibleStateError as exc:
            return RunResult(states, reports, False, str(exc))
        reports.append(rep)
        if callback is not None:
            callback(cur, rep)
        if k % keep_every == 0 or k == n:
            states.append(cur)
    return RunResult(states, reports, True, None)


# ---------------------------------------------------------------------------
# norm inflation under regularization
# ---------------------------------------------------------------------------

@dataclass
class InflationFit:
    eps: np.ndarray
    norms: np.ndarray      # shape (len(eps), 3): levels 2k, 2k+1, 2k+2
    exponents: tuple       # fitted d log norm / d log eps for 2k+1 and 2k+2


def rough_data(grid, r: np.ndarray, v: np.ndarray, top_octave: float,
               amplitude: float = 1.0, spacing: float = 0.5):
    """Add a critical rough layer to node arrays ``(r, v)``.

    The layer is ``amplitude r_+**2 R`` with ``R`` a sum of unit cosines at
    frequencies ``2**j`` (``j = 0, spacing, ..., top_octave``) along every axis,
    normalized by the square root of the mode count.  Each octave then carries
    the same energy, so the data sit at the lowest regularity and the
    regularized norms grow at the full rate.
    """
    X = grid.coords
    js = np.arange(0.0, top_octave + 1e-9, spacing)
    R = np.zeros(grid.shape)
    for i, j in enumerate(js):
        for ax in range(grid.dim):
            R += np.cos(2.0 ** j * X[..., ax] + 0.7 * i + 0.3 * ax)
    R /= np.sqrt(len(js) * grid.dim)
    layer = amplitude * np.maximum(r, 0.0) ** 2 * R
    return r * (1.0 + layer), v + layer[..., None]


def inflation_exponents(state: GoodState, eps_values, k: float = 0.0,
                        backend: str | None = None) -> InflationFit:
    """Fit how the level ``2k+1`` and ``2k+2`` norms grow as ``eps`` shrinks.

    For each ``eps`` the state is regularized and the ``calH`` norms at levels
    ``2k``, ``2k+1`` and ``2k+2`` are evaluated.  The returned exponents are
    least-squares slopes of ``log norm`` against ``log eps`` (close to -1 and
    -2 when the data carry roughness at every resolved scale).
    """
    from .spaces import norm_H2k

    if 2 * k + 2 > 4:
        raise DomainError("inflation is measured for 2k <= 2 only")
    eps = np.asarray(sorted(eps_values, reverse=True), dtype=float)
    if eps.size < 2 or np.any(eps <= 0):
        raise DomainError("need at least two positive eps values")
    norms = np.empty((eps.size, 3))
    for n, e in enumerate(eps):
        rs = regularize(state, float(e), backend=backend, warn=False).state
        for m in range(3):
            norms[n, m] = norm_H2k(rs.r, rs.v, k + 0.5 * m, rs.r, rs.params)
    le = np.log(eps)
    ex = tuple(float(np.polyfit(le, np.log(norms[:, m]), 1)[0]) for m in (1, 2))
    return InflationFit(eps=eps, norms=norms, exponents=ex)
