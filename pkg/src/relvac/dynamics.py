"""Right-hand side of the good-variable system and the reference integrator.

In good variables the evolution is diagonal with respect to the material
derivative ``D_t = d_t + (v^i/v0) d_i``::

    d_t r   = -(v/v0).grad r - r G^{ij} d_i v_j - r a1 v^i d_i r
    d_t v_i = -(v/v0).grad v_i - a2 d_i r

``model="leading"`` freezes all coefficients to one, giving the simplified
system ``(d_t + v.grad) r + r div v = 0``, ``(d_t + v.grad) v + grad r = 0``
that is exactly invariant under the scaling
``(r, v) -> (lam**-2 r(lam t, lam**2 x), lam**-1 v(lam t, lam**2 x))``.

The classical RK4 integrator advances all known nodes (mask and collar)
through the four stages and then redefines the mask as ``{r > 0}`` and
refills the collar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import CFLViolationError, DegenerateDomainError, DomainError, InadmissibleStateError
from .goodvars import Params, coefficient_arrays, from_good_arrays
from .grid import Field, extend, gradient, interpolate, masked_derivative
from .state import GoodState

__all__ = [
    "GoodState", "Vorticity", "rhs", "rhs_arrays", "vorticity_of", "vorticity_rhs",
    "physical_residual", "scaling_transform", "rk4_step", "integrate", "max_speed",
    "reflect", "CFL_DEFAULT", "evolve_vorticity", "leibniz_defect",
]

#: Default Courant number.
CFL_DEFAULT = 0.4

MODELS = ("full", "leading")


def rhs_arrays(grid, r, v, known, params: Params, model: str = "full"):
    """Time derivatives of node arrays ``r`` (shape S) and ``v`` (S + (d,)).

    Derivatives use only ``known`` nodes; results are NaN elsewhere.
    """
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}")
    dr = gradient(r, known, grid)
    dv = gradient(v, known, grid)  # dv[..., j, i] = d_i v_j
    rr = np.where(known, r, 0.0)
    vv = np.where(known[..., None], v, 0.0)
    if model == "leading":
        div = np.trace(dv, axis1=-2, axis2=-1)
        rt = -np.einsum("...i,...i->...", vv, dr) - rr * div
        vt = -np.einsum("...j,...ij->...i", vv, dv) - dr
    else:
        cb = coefficient_arrays(rr, vv, params, check=False)
        c = vv / cb.v0[..., None]
        gdv = np.einsum("...ij,...ji->...", cb.G, dv)
        vdr = np.einsum("...i,...i->...", vv, dr)
        rt = -np.einsum("...i,...i->...", c, dr) - rr * gdv - rr * cb.a1 * vdr
        vt = -np.einsum("...j,...ij->...i", c, dv) - cb.a2[..., None] * dr
    rt = np.where(known, rt, np.nan)
    vt = np.where(known[..., None], vt, np.nan)
    return rt, vt


def rhs(state: GoodState, model: str = "full"):
    """``(d_t r, d_t v)`` as fields on the state's mask and collar."""
    rt, vt = rhs_arrays(state.grid, state.r.values, state.v.values, state.known,
                        state.params, model)
    return Field(state.grid, rt, state.mask), Field(state.grid, vt, state.mask)


def max_speed(state: GoodState, model: str = "full") -> float:
    """Largest characteristic speed on the mask: transport plus acoustic part."""
    m = state.mask
    r = state.r.values[m]
    v = state.v.values[m]
    if model == "leading":
        return float(np.max(np.linalg.norm(v, axis=-1)) + np.sqrt(max(r.max(), 0.0)))
    cspeed = np.linalg.norm(state.velocity[m], axis=-1)
    return float(np.max(cspeed) + np.sqrt(state.params.kappa * max(r.max(), 0.0)))


def stable_dt(state: GoodState, cfl: float = CFL_DEFAULT, model: str = "full") -> float:
    s = max_speed(state, model)
    return cfl * state.grid.h / s if s > 0 else np.inf


def rk4_step(state: GoodState, dt: float, model: str = "full", cfl: float = CFL_DEFAULT,
             validate: bool = True) -> GoodState:
    """One classical Runge-Kutta step; the domain is relocated afterwards."""
    limit = stable_dt(state, cfl, model)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolationError(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
    grid, known, p = state.grid, state.known, state.params
    r0, v0 = state.r.values, state.v.values

    def f(r, v):
        return rhs_arrays(grid, r, v, known, p, model)

    k1r, k1v = f(r0, v0)
    k2r, k2v = f(r0 + 0.5 * dt * k1r, v0 + 0.5 * dt * k1v)
    k3r, k3v = f(r0 + 0.5 * dt * k2r, v0 + 0.5 * dt * k2v)
    k4r, k4v = f(r0 + dt * k3r, v0 + dt * k3v)
    r1 = r0 + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    v1 = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if state.free_boundary:
        new_mask = known & (np.nan_to_num(r1, nan=-1.0) > 0)
        _check_mask_inside(new_mask, known)
    else:
        new_mask = state.mask
    return GoodState.from_arrays(grid, r1, v1, p, t=state.t + dt,
                                 free_boundary=state.free_boundary, validate=validate,
                                 mask=new_mask)


def _check_mask_inside(new_mask: np.ndarray, known: np.ndarray) -> None:
    cross = ndimage.generate_binary_structure(known.ndim, 1)
    interior_known = ndimage.binary_erosion(known, structure=cross, border_value=1)
    if np.any(new_mask & ~interior_known):
        raise InadmissibleStateError("the fluid region outran its extrapolation collar")


def integrate(state: GoodState, T: float, dt: float | None = None, model: str = "full",
              cfl: float = CFL_DEFAULT, keep_every: int = 1, callback=None) -> list:
    """Advance with RK4 to time ``T`` using ``n = ceil(T/dt)`` equal steps.

    Returns the list of kept states including the first and last.
    """
    if dt is None:
        dt = stable_dt(state, cfl, model) * 0.7
    n = max(1, int(np.ceil((T - state.t) / dt - 1e-9)))
    step = (T - state.t) / n
    traj = [state]
    cur = state
    for k in range(1, n + 1):
        cur = rk4_step(cur, step, model=model, cfl=cfl)
        if callback is not None:
            callback(cur)
        if k % keep_every == 0 or k == n:
            traj.append(cur)
    return traj


def reflect(state: GoodState) -> GoodState:
    """Mirror ``x -> -x`` in one dimension (r even, v odd); needs a symmetric box."""
    if state.dim != 1:
        raise DomainError("reflection is implemented in one dimension")
    (a, b), = state.grid.extents
    if not np.isclose(a, -b):
        raise DomainError("reflection needs a box symmetric about the origin")
    r = state.r.values[::-1]
    v = -state.v.values[::-1]
    return GoodState.from_arrays(state.grid, r, v, state.params, t=state.t,
                                 free_boundary=state.free_boundary,
                                 mask=state.mask[::-1])


# ---------------------------------------------------------------------------
# vorticity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vorticity:
    """Antisymmetric tensor ``omega_ij = d_i v_j - d_j v_i`` on the grid."""

    omega: Field

    @property
    def values(self) -> np.ndarray:
        return self.omega.values


def vorticity_of(v: Field) -> Vorticity:
    """Spatial vorticity of the good velocity (identically zero for d = 1)."""
    grid = v.grid
    known = v.known
    dv = gradient(v.values, known, grid)
    om = np.swapaxes(dv, -1, -2) - dv  # om[..., i, j] = d_i v_j - d_j v_i
    if grid.dim == 1:
        om = np.where(known[..., None, None], 0.0, np.nan)
    return Vorticity(Field(grid, om, v.mask))


def vorticity_rhs(om: Vorticity, state: GoodState) -> Vorticity:
    """Rate ``d_t omega`` from the vorticity transport law on a fixed background."""
    grid = state.grid
    w = om.values
    known = state.known & np.all(np.isfinite(w.reshape(grid.shape + (-1,))), axis=-1)
    if grid.dim == 1:
        return Vorticity(Field(grid, np.where(known[..., None, None], 0.0, np.nan), state.mask))
    v = state.v.values
    v0 = state.coeffs.v0
    c = state.velocity
    dv = gradient(v, known, grid)  # [..., k, i] = d_i v^k
    dv0 = gradient(v0, known, grid)
    dw = gradient(w, known, grid)  # [..., i, j, l] = d_l omega_ij
    transport = np.einsum("...l,...ijl->...ij", c, dw)
    t1 = np.einsum("...ki,...kj->...ij", dv, w)
    t2 = np.einsum("...kj,...ik->...ij", dv, w)
    P = np.einsum("...k,...kj->...j", v, w)
    t3 = dv0[..., :, None] * P[..., None, :] - dv0[..., None, :] * P[..., :, None]
    rate = -transport - (t1 + t2) / v0[..., None, None] + t3 / (v0**2)[..., None, None]
    rate = np.where(known[..., None, None], rate, np.nan)
    return Vorticity(Field(grid, rate, state.mask))


def evolve_vorticity(om: Vorticity, state: GoodState, T: float, dt: float | None = None) -> Vorticity:
    """Integrate the vorticity transport law on the fixed background ``state`` (RK4)."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    if dt is None:
        dt = stable_dt(state) * 0.7
    n = max(1, int(np.ceil(T / dt - 1e-9)))
    step = T / n
    mask = state.mask
    w = om.values

    def rate(a):
        return vorticity_rhs(Vorticity(Field(state.grid, a, mask)), state).values

    for _ in range(n):
        k1 = rate(w)
        k2 = rate(w + 0.5 * step * k1)
        k3 = rate(w + 0.5 * step * k2)
        k4 = rate(w + step * k3)
        w = w + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Vorticity(Field(state.grid, w, mask))


# ---------------------------------------------------------------------------
# physical-system residual
# ---------------------------------------------------------------------------

def physical_residual(traj: Sequence[GoodState], collar_nodes: int = 5) -> float:
    """Max-norm residual of the original relativistic Euler equations.

    ``(rho, u)`` are reconstructed on each snapshot; time derivatives are
    central differences across consecutive snapshots, space derivatives are
    grid derivatives.  Nodes within ``collar_nodes`` spacings of the edge of
    the fluid region (or of the box) are excluded.
    """
    if len(traj) < 3:
        raise DomainError("physical_residual needs at least three snapshots")
    times = np.array([s.t for s in traj])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8, atol=1e-14) or dts[0] <= 0:
        raise DomainError("snapshots must be uniformly spaced in time")
    dt = dts[0]
    p = traj[0].params
    grid = traj[0].grid
    worst = 0.0
    for n in range(1, len(traj) - 1):
        a, s, b = traj[n - 1], traj[n], traj[n + 1]
        region = a.mask & s.mask & b.mask
        cross = ndimage.generate_binary_structure(grid.dim, 1)
        region = ndimage.binary_erosion(region, structure=cross, iterations=collar_nodes,
                                        border_value=0)
        if not region.any():
            continue

        def phys(st):
            rho, u = from_good_arrays(np.where(st.known, st.r.values, 0.0),
                                      np.where(st.known[..., None], st.v.values, 0.0), p)
            return rho, u

        rho_a, u_a = phys(a)
        rho_s, u_s = phys(s)
        rho_b, u_b = phys(b)
        kap = p.kappa
        P_a, P_s, P_b = rho_a ** (kap + 1), rho_s ** (kap + 1), rho_b ** (kap + 1)
        drho_t = (rho_b - rho_a) / (2 * dt)
        du_t = (u_b - u_a) / (2 * dt)
        dP_t = (P_b - P_a) / (2 * dt)
        kn = s.known
        drho = gradient(rho_s, kn, grid)
        du = gradient(u_s, kn, grid)  # [..., mu, i]
        dP = gradient(P_s, kn, grid)
        u0 = u_s[..., 0]
        us = u_s[..., 1:]
        enth = P_s + rho_s
        div_u = du_t[..., 0] + np.trace(du[..., 1:, :], axis1=-2, axis2=-1)
        e1 = u0 * drho_t + np.einsum("...i,...i->...", us, drho) + enth * div_u
        # lower the index with the Minkowski metric (-, +, ..., +)
        sign = np.ones(grid.dim + 1)
        sign[0] = -1.0
        u_low = u_s * sign
        du_low_t = du_t * sign
        du_low = du * sign[:, None]
        conv = u0[..., None] * du_low_t + np.einsum("...i,...ai->...a", us, du_low)
        dP_full = np.concatenate([dP_t[..., None], dP], axis=-1)
        udP = u0 * dP_t + np.einsum("...i,...i->...", us, dP)
        e2 = enth[..., None] * conv + dP_full + u_low * udP[..., None]
        res = max(np.max(np.abs(e1[region])), np.max(np.abs(e2[region])))
        worst = max(worst, float(res))
    return worst


def leibniz_defect(traj: Sequence[GoodState], f) -> float:
    """Defect of the moving-domain differentiation formula along ``traj``.

    ``f(X, t)`` returns node values of a smooth test function.  At every
    interior snapshot the central difference of ``int_{Omega_t} f`` is compared
    with ``int D_t f + int f div(v/v0)``, where ``D_t f`` combines a central
    time difference of ``f`` at fixed nodes with ``(v/v0).grad f``.  Returns the
    largest absolute mismatch.
    """
    from .grid import weighted_integral

    if len(traj) < 3:
        raise DomainError("leibniz_defect needs at least three snapshots")
    times = np.array([s.t for s in traj])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8, atol=1e-14) or dts[0] <= 0:
        raise DomainError("snapshots must be uniformly spaced in time")
    dt = dts[0]
    grid = traj[0].grid
    X = grid.coords
    total = [weighted_integral(f(X, s.t), 0.0, s.r) for s in traj]
    worst = 0.0
    for n in range(1, len(traj) - 1):
        s = traj[n]
        kn = s.known
        fv = f(X, s.t)
        c = s.velocity
        ft = (f(X, s.t + dt) - f(X, s.t - dt)) / (2.0 * dt)
        grad_f = gradient(fv, kn, grid)
        dc = gradient(c, kn, grid)  # [..., j, i] = d_i c_j
        div_c = np.trace(dc, axis1=-2, axis2=-1)
        dens = ft + np.einsum("...i,...i->...", c, grad_f) + fv * div_c
        rhs_n = weighted_integral(np.where(kn, dens, np.nan), 0.0, s.r)
        lhs_n = (total[n + 1] - total[n - 1]) / (2.0 * dt)
        worst = max(worst, abs(lhs_n - rhs_n))
    return float(worst)


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

def scaling_transform(state: GoodState, lam: float) -> GoodState:
    """Apply ``(r, v) -> (lam**-2 r(lam**2 x), lam**-1 v(lam**2 x))`` at time ``t/lam``."""
    if not lam > 0:
        raise DomainError("the scaling factor must be positive")
    grid = state.grid
    if lam == 1.0:
        return state
    pts = grid.coords.reshape(-1, grid.dim) * lam**2
    r_new = interpolate(state.r.values, state.known, grid, pts).reshape(grid.shape) / lam**2
    v_new = interpolate(state.v.values, state.known, grid, pts).reshape(
        grid.shape + (grid.dim,)) / lam
    if state.free_boundary:
        mask = np.isfinite(r_new) & (np.nan_to_num(r_new, nan=-1.0) > 0)
        mask &= np.all(np.isfinite(v_new), axis=-1)
        edge = np.zeros(grid.shape, dtype=bool)
        for a in range(grid.dim):
            sl = [slice(None)] * grid.dim
            for k in list(range(0, 4)) + list(range(grid.N[a] - 4, grid.N[a])):
                sl[a] = k
                edge[tuple(sl)] = True
        if np.any(mask & edge):
            raise DomainError("scaled domain does not fit in the ambient box")
    else:
        mask = None
        if not np.all(np.isfinite(r_new)):
            raise DomainError("scaled patch does not fit in the ambient box")
    return GoodState.from_arrays(grid, r_new, v_new, state.params, t=state.t / lam,
                                 free_boundary=state.free_boundary, mask=mask)
