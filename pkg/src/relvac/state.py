"""The good-variable state ``(r, v)`` on its moving domain."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateDomainError, InadmissibleStateError
from .goodvars import A0_MIN, CoefficientBundle, Params, coefficient_arrays
from .grid import Boundary, Field, Grid, extend, gradient, locate_boundary


@dataclass(frozen=True, eq=False)
class GoodState:
    """Good variables on the fluid region ``{r > 0}`` at time ``t``.

    ``v`` always carries a trailing component axis of length ``d``.  With
    ``free_boundary=False`` the mask covers the whole box ("patch" mode,
    used for interior tests where no vacuum boundary is present).
    """

    grid: Grid
    r: Field
    v: Field
    t: float
    params: Params
    free_boundary: bool = True

    # -- construction -------------------------------------------------------

    @classmethod
    def from_arrays(cls, grid: Grid, r, v, params: Params, t: float = 0.0,
                    free_boundary: bool = True, validate: bool = True,
                    mask=None) -> "GoodState":
        """Build a state from node arrays, extending both fields off the mask.

        ``r`` and ``v`` only need to be meaningful on the mask; the collar is
        always refilled by extrapolation.
        """
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if v.shape == grid.shape:
            v = v[..., None]
        if v.shape != grid.shape + (grid.dim,):
            raise InadmissibleStateError("v must have one component per spatial axis")
        if mask is None:
            mask = np.isfinite(r) & (r > 0) if free_boundary else np.ones(grid.shape, dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if free_boundary:
            r_ext = extend(r, mask)
            v_ext = extend(v, mask)
        else:
            r_ext, v_ext = r.copy(), v.copy()
        st = cls(grid=grid, r=Field(grid, r_ext, mask), v=Field(grid, v_ext, mask),
                 t=float(t), params=params, free_boundary=free_boundary)
        if validate:
            st.validate()
        return st

    def replace(self, r=None, v=None, t=None, validate: bool = True) -> "GoodState":
        """New state with some node arrays replaced (mask recomputed)."""
        return GoodState.from_arrays(
            self.grid,
            self.r.values if r is None else r,
            self.v.values if v is None else v,
            self.params,
            t=self.t if t is None else t,
            free_boundary=self.free_boundary,
            validate=validate,
            mask=None if self.free_boundary else self.mask,
        )

    # -- views --------------------------------------------------------------

    @property
    def mask(self) -> np.ndarray:
        return self.r.mask

    @cached_property
    def known(self) -> np.ndarray:
        return self.r.known & self.v.known

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def boundary(self) -> Boundary | None:
        if not self.free_boundary:
            return None
        return locate_boundary(self.r)

    @cached_property
    def coeffs(self) -> CoefficientBundle:
        """Coefficients on known nodes (NaN elsewhere), unchecked."""
        kn = self.known
        r = np.where(kn, self.r.values, 0.0)
        v = np.where(kn[..., None], self.v.values, 0.0)
        cb = coefficient_arrays(r, v, self.params, check=False)
        nan = ~kn
        for name in ("v0", "r_bracket", "a0", "a1", "a2", "a3"):
            arr = getattr(cb, name)
            arr[nan] = np.nan
        cb.G[nan] = np.nan
        return cb

    @cached_property
    def grad_r(self) -> np.ndarray:
        """``d_i r`` with shape ``shape + (d,)``."""
        return gradient(self.r.values, self.known, self.grid)

    @cached_property
    def grad_v(self) -> np.ndarray:
        """``d_i v_j`` stored at ``[..., j, i]``."""
        return gradient(self.v.values, self.known, self.grid)

    @cached_property
    def velocity(self) -> np.ndarray:
        """Coordinate velocity ``v / v0`` of the fluid."""
        return self.v.values / self.coeffs.v0[..., None]

    # -- checks ---------------------------------------------------------------

    def validate(self) -> None:
        """Raise :class:`InadmissibleStateError` if the state is not admissible."""
        m = self.mask
        if not m.any():
            raise DegenerateDomainError("empty fluid region")
        r, v = self.r.values[m], self.v.values[m]
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise InadmissibleStateError("non-finite values inside the fluid region")
        if self.free_boundary and np.any(r <= 0):
            raise InadmissibleStateError("r must be positive on the mask")
        a0 = self.coeffs.a0[m]
        if np.any(a0 <= A0_MIN):
            raise InadmissibleStateError(f"a0 <= {A0_MIN:g} inside the fluid region")
        if self.free_boundary:
            b = self.boundary
            lo, hi = self.params.vacuum_slope_min, self.params.vacuum_slope_max
            if np.any(b.slopes < lo) or np.any(b.slopes > hi):
                raise InadmissibleStateError(
                    f"boundary slopes {np.round(b.slopes, 6).tolist()} outside [{lo}, {hi}]")
