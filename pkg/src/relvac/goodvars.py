"""Equation of state, good variables and pointwise coefficients.

The fluid obeys the power law ``p = rho**(kappa + 1)``.  Instead of the
energy density ``rho`` and the four-velocity ``u`` the evolution works
with

* ``r = (1 + kappa)/kappa * rho**kappa``, the sound speed squared up to the
  factor ``kappa`` (``c_s**2 = kappa * r``), and
* ``v = f(rho) * u`` with ``f(rho) = (1 + rho**kappa)**(1 + 1/kappa)``.

Only the spatial part of ``v`` is stored; its time component
``v0 = sqrt(<r>**(2 + 2/kappa) + |v|**2)`` is always recomputed, where
``<r> = 1 + kappa*r/(kappa + 1)``.

All coefficient functions accept numpy arrays (``r`` of shape ``S``, ``v``
of shape ``S + (d,)``) and also work for complex input, which is how
:func:`coefficient_partials` obtains exact derivatives by complex-step
differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, DomainError, InadmissibleStateError

#: States with ``a0`` below this value are rejected as superluminal.
A0_MIN = 1e-6

_CSTEP = 1e-30


@dataclass(frozen=True)
class Params:
    """Physical and admissibility parameters.

    Attributes
    ----------
    kappa : float
        Exponent of the equation of state (adiabatic index ``kappa + 1``).
    dim : int
        Spatial dimension, 1 or 2.
    vacuum_slope_min, vacuum_slope_max : float
        Admissible range of ``|grad r|`` on the vacuum boundary.
    tol_constraint : float
        Tolerance on the normalization ``u.u = -1``.
    """

    kappa: float = 1.0
    dim: int = 1
    vacuum_slope_min: float = 1e-3
    vacuum_slope_max: float = 1e3
    tol_constraint: float = 1e-10

    def __post_init__(self) -> None:
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.dim not in (1, 2):
            raise DomainError(f"dim must be 1 or 2, got {self.dim}")
        if not self.vacuum_slope_min > 0:
            raise DomainError("vacuum_slope_min must be positive")
        if self.vacuum_slope_min > self.vacuum_slope_max:
            raise DomainError("vacuum_slope_min exceeds vacuum_slope_max")
        if self.tol_constraint < 0:
            raise DomainError("tol_constraint must be nonnegative")


@dataclass(frozen=True)
class PhysicalPoint:
    """Energy density and contravariant four-velocity ``(u0, u1, ..., ud)``."""

    rho: float
    u: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))


@dataclass(frozen=True)
class GoodPoint:
    """Good variables ``(r, v)``; ``v`` holds the spatial components only."""

    r: float
    v: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))


@dataclass(frozen=True)
class CoefficientBundle:
    """Pointwise coefficients of the good-variable system.

    Every entry broadcasts over the sample shape ``S``; ``G`` has shape
    ``S + (d, d)``.
    """

    v0: np.ndarray
    r_bracket: np.ndarray
    G: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    extra: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# scalar equation of state
# ---------------------------------------------------------------------------

def _check_nonneg(x, name: str) -> None:
    if np.any(np.asarray(x) < 0):
        raise DomainError(f"{name} must be nonnegative")


def pressure(rho, p: Params):
    """Pressure ``rho**(kappa+1)``."""
    _check_nonneg(rho, "rho")
    return np.power(rho, p.kappa + 1.0)


def sound_speed_sq_of_r(r, p: Params):
    """Sound speed squared expressed through the good variable, ``kappa*r``."""
    _check_nonneg(r, "r")
    return p.kappa * np.asarray(r, dtype=float) if np.ndim(r) else p.kappa * float(r)


def sound_speed_sq_of_rho(rho, p: Params):
    """``dp/drho`` written in terms of the density, ``(kappa+1) rho**kappa``."""
    _check_nonneg(rho, "rho")
    return (p.kappa + 1.0) * np.power(rho, p.kappa)


def f_of_rho(rho, p: Params):
    """Velocity rescaling factor ``(1 + rho**kappa)**(1 + 1/kappa)``."""
    _check_nonneg(rho, "rho")
    return np.power(1.0 + np.power(rho, p.kappa), 1.0 + 1.0 / p.kappa)


def r_of_rho(rho, p: Params):
    _check_nonneg(rho, "rho")
    return (1.0 + p.kappa) / p.kappa * np.power(rho, p.kappa)


def rho_of_r(r, p: Params):
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    return np.power(p.kappa * r / (1.0 + p.kappa), 1.0 / p.kappa)


def bracket(r, p: Params):
    """``<r> = 1 + kappa r/(kappa+1)``; equals ``1 + rho**kappa``."""
    return 1.0 + p.kappa * r / (p.kappa + 1.0)


def _vsq(v):
    # v*v rather than abs(v)**2 keeps the expression complex-analytic
    return np.sum(v * v, axis=-1)


def v0_from_arrays(r, v, p: Params):
    """Time component of ``v`` for arrays ``r`` (shape S) and ``v`` (S+(d,))."""
    br = bracket(r, p)
    return np.sqrt(br ** (2.0 + 2.0 / p.kappa) + _vsq(v))


def v0_of(gp: GoodPoint, p: Params) -> float:
    """Time component ``sqrt(<r>**(2+2/kappa) + |v|**2)`` of the good velocity."""
    _check_nonneg(gp.r, "r")
    return float(v0_from_arrays(np.asarray(gp.r, dtype=float), gp.v, p))


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def _minkowski_norm(u) -> np.ndarray:
    u = np.asarray(u)
    return -u[..., 0] ** 2 + np.sum(u[..., 1:] ** 2, axis=-1)


def to_good(pp: PhysicalPoint, p: Params) -> GoodPoint:
    """Convert ``(rho, u)`` to ``(r, v)``."""
    _check_nonneg(pp.rho, "rho")
    if pp.u.shape != (p.dim + 1,):
        raise DomainError(f"u must have {p.dim + 1} components")
    if pp.u[0] <= 0:
        raise ConstraintError("u0 must be positive (future directed)")
    tol = max(p.tol_constraint, 1e-12)
    if abs(_minkowski_norm(pp.u) + 1.0) > tol * max(1.0, pp.u[0] ** 2):
        raise ConstraintError("four-velocity is not unit timelike")
    f = f_of_rho(pp.rho, p)
    return GoodPoint(r=float(r_of_rho(pp.rho, p)), v=f * pp.u[1:])


def from_good(gp: GoodPoint, p: Params) -> PhysicalPoint:
    """Convert ``(r, v)`` back to ``(rho, u)``."""
    _check_nonneg(gp.r, "r")
    if gp.v.shape != (p.dim,):
        raise DomainError(f"v must have {p.dim} components")
    rho = float(rho_of_r(gp.r, p))
    f = float(f_of_rho(rho, p))
    v0 = v0_of(gp, p)
    return PhysicalPoint(rho=rho, u=np.concatenate([[v0 / f], gp.v / f]))


def to_good_arrays(rho, u, p: Params):
    """Vectorized :func:`to_good`; ``u`` has shape ``S + (d+1,)``."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    f = f_of_rho(rho, p)
    return r_of_rho(rho, p), f[..., None] * u[..., 1:]


def from_good_arrays(r, v, p: Params):
    """Vectorized :func:`from_good`; returns ``(rho, u)`` with u of shape S+(d+1,)."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    rho = rho_of_r(r, p)
    f = f_of_rho(rho, p)
    v0 = v0_from_arrays(np.maximum(r, 0.0), v, p)
    u = np.concatenate([(v0 / f)[..., None], v / f[..., None]], axis=-1)
    return rho, u


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

def coefficient_arrays(r, v, p: Params, check: bool = True) -> CoefficientBundle:
    """Evaluate all coefficients on arrays of states.

    ``check`` enables the admissibility test ``a0 > A0_MIN``; it is skipped
    automatically for complex input.
    """
    k = p.kappa
    r = np.asarray(r)
    v = np.asarray(v)
    d = v.shape[-1]
    br = bracket(r, p)
    vsq = _vsq(v)
    v0 = np.sqrt(br ** (2.0 + 2.0 / k) + vsq)
    a0 = 1.0 - k * r * vsq / v0**2
    if check and not np.iscomplexobj(a0):
        bad = ~(a0 > A0_MIN)
        if np.any(bad):
            raise InadmissibleStateError(
                f"a0 <= {A0_MIN:g} at {int(np.count_nonzero(bad))} point(s): "
                "sound speed not subluminal relative to the flow"
            )
    eye = np.eye(d)
    proj = eye - v[..., :, None] * v[..., None, :] / (v0**2)[..., None, None]
    G = (k * br / (a0 * v0))[..., None, None] * proj
    a1 = -2.0 * k * br ** (2.0 + 2.0 / k) / (v0**3 * a0)
    a2 = br ** (1.0 + 2.0 / k) / v0
    # a0/(k<r>) - 1/k = r*a3 holds exactly for this form at every kappa
    a3 = -(1.0 / br) * (1.0 / (k + 1.0) + vsq / v0**2)
    return CoefficientBundle(v0=v0, r_bracket=br, G=G, a0=a0, a1=a1, a2=a2, a3=a3)


def coefficients(gp: GoodPoint, p: Params) -> CoefficientBundle:
    """Pointwise coefficients at a single good point."""
    _check_nonneg(gp.r, "r")
    cb = coefficient_arrays(np.asarray(gp.r, dtype=float), gp.v, p)
    return CoefficientBundle(
        v0=float(cb.v0), r_bracket=float(cb.r_bracket), G=np.asarray(cb.G),
        a0=float(cb.a0), a1=float(cb.a1), a2=float(cb.a2), a3=float(cb.a3),
    )


@dataclass(frozen=True)
class CoefficientPartials:
    """Partial derivatives of coefficients with respect to ``r`` and ``v^l``.

    ``dr[name]`` has the shape of the coefficient; ``dv[name]`` carries a
    trailing axis ``l`` of length ``d``.  Names: ``G``, ``a1``, ``a2``, ``v0``.
    """

    dr: dict
    dv: dict


_PARTIAL_NAMES = ("G", "a1", "a2", "v0")


def coefficient_partials(r, v, p: Params) -> CoefficientPartials:
    """Exact first derivatives of the coefficients by complex-step."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    d = v.shape[-1]
    hstep = _CSTEP
    cb = coefficient_arrays(r + 1j * hstep, v.astype(complex), p, check=False)
    dr = {n: np.imag(getattr(cb, n)) / hstep for n in _PARTIAL_NAMES}
    dv: dict = {n: [] for n in _PARTIAL_NAMES}
    for l in range(d):
        vc = v.astype(complex)
        vc[..., l] += 1j * hstep
        cbl = coefficient_arrays(r.astype(complex), vc, p, check=False)
        for n in _PARTIAL_NAMES:
            dv[n].append(np.imag(getattr(cbl, n)) / hstep)
    dv = {n: np.stack(vals, axis=-1) for n, vals in dv.items()}
    return CoefficientPartials(dr=dr, dv=dv)
