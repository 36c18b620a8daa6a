"""Distance between two solutions on their common domain.

For states ``(r1, v1)`` and ``(r2, v2)`` on the same grid write
``mu = r1 + r2``, ``nu = r1 - r2`` and ``sigma = (1 - k)/k``.  The two
functionals are integrals over the intersection of the fluid regions::

    D       = int mu**sigma (nu**2 + mu |v1 - v2|**2)
    tilde_D = int mu**sigma (a nu**2 + b (a2(1) + a2(2))**-1 G_mid (v1 - v2)(v1 - v2))

with ``a = chi(nu/mu)``, ``b = mu a`` and ``G_mid`` the coefficient matrix at
the averaged state.  ``chi`` is an even smooth profile equal to one on
``|s| <= 1/4`` and vanishing for ``|s| >= 1/2``.

The one-dimensional quadrature splits the intersection into full cells
(Gauss-Legendre on local quartic interpolants of both states) and two end
panels.  On an end panel the vanishing of ``mu`` just outside the panel is
factored out and integrated against the exact Jacobi weight, so the
integrable singularity of ``mu**sigma`` for ``k > 1`` costs no accuracy when
the two boundaries nearly coincide.  In two dimensions full cells use the
trapezoid rule and cut cells an 8 x 8 midpoint sub-sample of the bilinear
interpolants.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .errors import DegenerateDomainError, DomainError
from .goodvars import coefficient_arrays
from .grid import (Field, _interp_local, _jacobi, _legendre, boundary_arclength_weights,
                   domain_ends_1d, interpolate, locate_boundary)
from .spaces import control_B
from .state import GoodState

__all__ = [
    "PairConfig", "chi", "D_H", "tilde_D_H", "boundary_proximity", "boundary_gap",
    "IntersectionWarning", "StabilityResult", "stability_monitor", "PAIR_COLUMNS",
    "CLOSE_FRACTION",
]

CLOSE_FRACTION = 0.1
PAIR_COLUMNS = ("t", "D_H", "tilde_D_H", "boundary_proximity", "B1+B2")
_NQ = 8
_SUB = 8


class IntersectionWarning(RuntimeWarning):
    """The two boundaries are too far apart to trust the intersection quadrature."""


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

def _psi(x):
    x = np.asarray(x, dtype=float)
    pos = x > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, x, 1.0)), 0.0)


def chi(s, inner: float = 0.25, outer: float = 0.5):
    """Even smooth step: 1 on ``|s| <= inner``, 0 on ``|s| >= outer``."""
    a = np.abs(np.asarray(s, dtype=float))
    up = _psi(outer - a)
    return up / (up + _psi(a - inner))


@dataclass(frozen=True)
class PairConfig:
    """Cutoff radii of the profile ``chi`` used by the weights ``a`` and ``b``."""

    inner: float = 0.25
    outer: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.inner < self.outer <= 1.0:
            raise DomainError("need 0 < inner < outer <= 1")

    def a(self, mu, nu):
        """Degree-0 weight ``chi(nu/mu)`` (0 where ``mu <= 0``)."""
        mu = np.asarray(mu, dtype=float)
        nu = np.asarray(nu, dtype=float)
        pos = mu > 0
        return np.where(pos, chi(nu / np.where(pos, mu, 1.0), self.inner, self.outer), 0.0)

    def b(self, mu, nu):
        """Degree-1 weight ``mu * a``."""
        return np.asarray(mu, dtype=float) * self.a(mu, nu)


# ---------------------------------------------------------------------------
# pair checks
# ---------------------------------------------------------------------------

def _check_pair(s1: GoodState, s2: GoodState) -> np.ndarray:
    if s1.grid != s2.grid:
        raise DomainError("the two states live on different grids")
    if s1.params != s2.params:
        raise DomainError("the two states use different parameters")
    common = s1.mask & s2.mask
    if not common.any():
        raise DomainError("the two fluid regions do not intersect")
    return common


def boundary_gap(s1: GoodState, s2: GoodState) -> float:
    """Largest boundary displacement relative to the smaller domain width.

    In one dimension this compares the matching roots; in two it is the
    symmetric Hausdorff distance between the located boundary polygons.
    """
    _check_pair(s1, s2)
    if s1.dim == 1:
        e1, e2 = domain_ends_1d(s1.r), domain_ends_1d(s2.r)
        width = min(e1[3] - e1[2], e2[3] - e2[2])
        return max(abs(e1[2] - e2[2]), abs(e1[3] - e2[3])) / width
    p1 = locate_boundary(s1.r).points
    p2 = locate_boundary(s2.r).points
    d = np.linalg.norm(p1[:, None, :] - p2[None, :, :], axis=-1)
    haus = max(np.max(np.min(d, axis=1)), np.max(np.min(d, axis=0)))
    width = min(np.max(np.ptp(p1, axis=0)), np.max(np.ptp(p2, axis=0)))
    return float(haus / width)


def _warn_if_far(s1: GoodState, s2: GoodState) -> None:
    gap = boundary_gap(s1, s2)
    if gap > CLOSE_FRACTION:
        warnings.warn(f"boundaries differ by {gap:.3g} of the domain width "
                      f"(> {CLOSE_FRACTION}); intersection quadrature is not trusted",
                      IntersectionWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# integrands
# ---------------------------------------------------------------------------

def _density_D(r1, r2, v1, v2, sigma: float, params, cfg):
    mu = r1 + r2
    nu = r1 - r2
    dv = v1 - v2
    return _mu_pow(mu, sigma) * (nu * nu + mu * np.sum(dv * dv, axis=-1))


def _density_tD(r1, r2, v1, v2, sigma: float, params, cfg: PairConfig):
    mu = r1 + r2
    nu = r1 - r2
    dv = v1 - v2
    r1c, r2c = np.maximum(r1, 0.0), np.maximum(r2, 0.0)
    c1 = coefficient_arrays(r1c, v1, params, check=False)
    c2 = coefficient_arrays(r2c, v2, params, check=False)
    cm = coefficient_arrays(0.5 * (r1c + r2c), 0.5 * (v1 + v2), params, check=False)
    gdv = np.einsum("...ij,...i,...j->...", cm.G, dv, dv)
    a = cfg.a(mu, nu)
    b = cfg.b(mu, nu)
    return _mu_pow(mu, sigma) * (a * nu * nu + b * gdv / (c1.a2 + c2.a2))


def _mu_pow(mu, sigma: float):
    if sigma == 0:
        return np.ones_like(mu)
    pos = mu > 0
    return np.where(pos, np.power(np.where(pos, mu, 1.0), sigma), 0.0)


# ---------------------------------------------------------------------------
# one-dimensional quadrature
# ---------------------------------------------------------------------------

class _Pair1D:
    """Local quartic interpolants of both states on their common known nodes."""

    def __init__(self, s1: GoodState, s2: GoodState, common: np.ndarray):
        self.x = s1.grid.axes[0]
        self.h = s1.grid.h
        idx = np.flatnonzero(common)
        if idx[-1] - idx[0] + 1 != idx.size:
            raise DegenerateDomainError("the intersection is not connected")
        self.ia, self.ib = int(idx[0]), int(idx[-1])
        if self.ib - self.ia < 4:
            raise DegenerateDomainError("the intersection is under-resolved (fewer than 5 nodes)")
        kn = s1.known & s2.known
        lo, hi = self.ia, self.ib
        while lo > 0 and kn[lo - 1]:
            lo -= 1
        while hi < kn.size - 1 and kn[hi + 1]:
            hi += 1
        self.lo, self.hi = lo, hi
        self.r1, self.r2 = s1.r.values, s2.r.values
        self.v1, self.v2 = s1.v.values, s2.v.values
        e1, e2 = domain_ends_1d(s1.r), domain_ends_1d(s2.r)
        self.xL = max(e1[2], e2[2])
        self.xR = min(e1[3], e2[3])
        self.left_root = e1[4] if e1[2] >= e2[2] else e2[4]
        self.right_root = e1[5] if e1[3] <= e2[3] else e2[5]

    def fields(self, xq):
        xq = np.asarray(xq, dtype=float)
        f = lambda a: _interp_local(self.x, a, self.lo, self.hi, xq)  # noqa: E731
        return f(self.r1), f(self.r2), f(self.v1), f(self.v2)

    def mu(self, xq):
        r1, r2, _, _ = self.fields(np.atleast_1d(xq))
        return r1 + r2

    def mu_root(self, end: float, direction: int):
        """Root of ``mu`` within two steps outside ``end``, or ``None``."""
        far = end + direction * 2.0 * self.h
        m_end = float(self.mu(end)[0])
        if m_end <= 0:
            return end
        m_far = float(self.mu(far)[0])
        if not np.isfinite(m_far) or m_far > 0:
            return None
        a, b = sorted((end, far))
        return optimize.brentq(lambda z: float(self.mu(z)[0]), a, b, xtol=1e-15)


def _jacobi_tail(root: float, c: float, sigma: float, g, left: bool) -> float:
    """``int |x - root|**sigma g(x)`` between ``root`` and ``c``."""
    L = abs(c - root)
    if L == 0:
        return 0.0
    if left:
        t, w = _jacobi(_NQ + 2, 0.0, sigma)
        xq = root + (t + 1.0) * L / 2.0
    else:
        t, w = _jacobi(_NQ + 2, sigma, 0.0)
        xq = c + (t + 1.0) * L / 2.0
    return (L / 2.0) ** (sigma + 1.0) * float(np.dot(w, g(xq)))


def _gauss(a: float, b: float, fn, n: int = _NQ) -> float:
    if b <= a:
        return 0.0
    t, w = _legendre(n)
    xq = a + (t + 1.0) * (b - a) / 2.0
    return (b - a) / 2.0 * float(np.dot(w, fn(xq)))


def _integral_1d(pair: _Pair1D, density, sigma: float) -> float:
    x = pair.x

    def full(xq):
        r1, r2, v1, v2 = pair.fields(xq)
        return density(r1, r2, v1, v2)

    def end_panel(a: float, b: float, end: float, direction: int) -> float:
        root = pair.mu_root(end, direction) if sigma != 0 else None
        if root is None:
            return _gauss(a, b, full, 2 * _NQ)

        def g(xq):
            r1, r2, v1, v2 = pair.fields(xq)
            mu = r1 + r2
            dist = np.abs(xq - root)
            q = np.where(dist > 0, mu / np.where(dist > 0, dist, 1.0), 1.0)
            return density(r1, r2, v1, v2) / _mu_pow(mu, sigma) * np.power(np.maximum(q, 1e-300), sigma)

        if direction < 0:
            return _jacobi_tail(root, b, sigma, g, True) - _jacobi_tail(root, a, sigma, g, True)
        return _jacobi_tail(root, a, sigma, g, False) - _jacobi_tail(root, b, sigma, g, False)

    ia, ib = pair.ia, pair.ib
    a_int, b_int = ia + 1, ib - 1
    total = end_panel(pair.xL, x[a_int], pair.xL, -1)
    total += end_panel(x[b_int], pair.xR, pair.xR, +1)
    if b_int > a_int:
        t, w = _legendre(_NQ)
        starts = x[a_int:b_int]
        xq = (starts[:, None] + (t[None, :] + 1.0) * pair.h / 2.0).ravel()
        vals = full(xq).reshape(len(starts), _NQ)
        total += pair.h / 2.0 * float(np.sum(vals @ w))
    return float(total)


# ---------------------------------------------------------------------------
# two-dimensional quadrature
# ---------------------------------------------------------------------------

def _integral_2d(s1: GoodState, s2: GoodState, common: np.ndarray, density) -> float:
    h = s1.grid.h
    r1, r2 = s1.r.values, s2.r.values
    v1, v2 = s1.v.values, s2.v.values
    c00, c10 = common[:-1, :-1], common[1:, :-1]
    c01, c11 = common[:-1, 1:], common[1:, 1:]
    full = c00 & c10 & c01 & c11
    cut = (c00 | c10 | c01 | c11) & ~full
    node = np.zeros(common.shape)
    node[common] = density(r1[common], r2[common], v1[common], v2[common])
    cell = 0.25 * (node[:-1, :-1] + node[1:, :-1] + node[:-1, 1:] + node[1:, 1:])
    total = float(np.sum(cell[full])) * h * h
    ci, cj = np.nonzero(cut)
    if ci.size:
        kn = s1.known & s2.known
        if not (kn[ci, cj].all() and kn[ci + 1, cj].all() and kn[ci, cj + 1].all()
                and kn[ci + 1, cj + 1].all()):
            raise DegenerateDomainError("cut cells of the intersection lack collar values")
        s = (np.arange(_SUB) + 0.5) / _SUB
        sx, sy = np.meshgrid(s, s, indexing="ij")
        sx, sy = sx.ravel()[None], sy.ravel()[None]

        def bil(a):
            if a.ndim == 3:
                return np.stack([bil(a[..., k]) for k in range(a.shape[-1])], axis=-1)
            return ((1 - sx) * (1 - sy) * a[ci, cj][:, None] + sx * (1 - sy) * a[ci + 1, cj][:, None]
                    + (1 - sx) * sy * a[ci, cj + 1][:, None] + sx * sy * a[ci + 1, cj + 1][:, None])

        q1, q2 = bil(r1), bil(r2)
        inside = (q1 > 0) & (q2 > 0)
        vals = density(q1, q2, bil(v1), bil(v2))
        total += float(np.sum(np.where(inside, vals, 0.0))) * h * h / _SUB**2
    return total


def _pair_integral(s1: GoodState, s2: GoodState, which: str, cfg: PairConfig | None) -> float:
    common = _check_pair(s1, s2)
    _warn_if_far(s1, s2)
    k = s1.params.kappa
    sigma = (1.0 - k) / k
    base = _density_D if which == "D" else _density_tD
    cfg = cfg or PairConfig()

    def density(r1, r2, v1, v2):
        return base(r1, r2, v1, v2, sigma, s1.params, cfg)

    if s1.dim == 1:
        return _integral_1d(_Pair1D(s1, s2, common), density, sigma)
    return _integral_2d(s1, s2, common, density)


# ---------------------------------------------------------------------------
# public functionals
# ---------------------------------------------------------------------------

def D_H(s1: GoodState, s2: GoodState) -> float:
    """Distance functional over the intersection of the two fluid regions."""
    return max(_pair_integral(s1, s2, "D", None), 0.0)


def tilde_D_H(s1: GoodState, s2: GoodState, cfg: PairConfig | None = None) -> float:
    """Modified distance with the cutoff weights and the averaged metric."""
    return max(_pair_integral(s1, s2, "tD", cfg), 0.0)


def boundary_proximity(s1: GoodState, s2: GoodState) -> float:
    """``int |r1 + r2|**(1/k + 2)`` over the boundary of the intersection.

    In one dimension the boundary is the (at most two) vacuum ends of the
    intersection, with counting measure; in two dimensions arc length along
    the located polygon.
    """
    common = _check_pair(s1, s2)
    p = 1.0 / s1.params.kappa + 2.0
    if s1.dim == 1:
        pair = _Pair1D(s1, s2, common)
        ends = [e for e, root in ((pair.xL, pair.left_root), (pair.xR, pair.right_root)) if root]
        if not ends:
            return 0.0
        mu = pair.mu(np.array(ends))
        return float(np.sum(np.abs(mu) ** p))
    kn = s1.known & s2.known
    lvl = np.where(kn, np.minimum(s1.r.values, s2.r.values), np.nan)
    b = locate_boundary(Field(s1.grid, lvl, common))
    mu = interpolate(np.where(kn, s1.r.values + s2.r.values, np.nan), kn, s1.grid, b.points)
    return float(np.sum(boundary_arclength_weights(b) * np.abs(mu) ** p))


# ---------------------------------------------------------------------------
# stability monitor
# ---------------------------------------------------------------------------

@dataclass
class StabilityResult:
    t: np.ndarray
    D: np.ndarray
    tilde_D: np.ndarray
    proximity: np.ndarray
    B: np.ndarray            # B1 + B2
    amplification: float    # sup_t D(t)/D(0)
    C_gronwall: float       # smallest C with D(t) <= D(0) exp(C int B)
    C_rate: float           # largest d tilde_D/dt / (B D) over interior times
    rows: list = field(default_factory=list)

    @property
    def predicted_bound(self) -> np.ndarray:
        """``exp(C_gronwall int_0^t B)``, an upper envelope of ``D(t)/D(0)``."""
        return np.exp(self.C_gronwall * _cumtrapz(self.B, self.t))

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(PAIR_COLUMNS)
            for row in zip(self.t, self.D, self.tilde_D, self.proximity, self.B):
                wr.writerow([f"{v:.17g}" for v in row])


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def stability_monitor(traj1, traj2, cfg: PairConfig | None = None) -> StabilityResult:
    """Time series of the pair functionals along two co-evolved trajectories.

    Both trajectories must hold states on the same grid at the same times.
    ``amplification`` is ``sup_t D(t)/D(0)`` (1 for identical runs);
    ``C_gronwall`` is the smallest constant for which
    ``log D(t) - log D(0) <= C int_0^t (B1 + B2)`` at every sample;
    ``C_rate`` bounds the measured rate ``d tilde_D/dt`` by ``C (B1+B2) D``.
    """
    if len(traj1) != len(traj2) or len(traj1) < 2:
        raise DomainError("trajectories must have equal length of at least two")
    t = np.array([s.t for s in traj1])
    t2 = np.array([s.t for s in traj2])
    if not np.allclose(t, t2, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(t))))):
        raise DomainError("trajectories are not sampled at the same times")
    if np.any(np.diff(t) <= 0):
        raise DomainError("snapshot times must increase")
    D, tD, bp, B = [], [], [], []
    for a, b in zip(traj1, traj2):
        D.append(D_H(a, b))
        tD.append(tilde_D_H(a, b, cfg))
        bp.append(boundary_proximity(a, b))
        B.append(control_B(a) + control_B(b))
    D, tD, bp, B = map(np.asarray, (D, tD, bp, B))
    if D[0] == 0.0:
        amp = 1.0 if np.all(D == 0) else np.inf
        C_g = 0.0 if np.all(D == 0) else np.inf
        C_r = 0.0
    else:
        amp = float(np.max(D) / D[0])
        intB = _cumtrapz(B, t)
        pos = intB > 0
        with np.errstate(divide="ignore"):
            ratio = (np.log(np.maximum(D[pos], 1e-300)) - np.log(D[0])) / intB[pos]
        C_g = float(max(np.max(ratio), 0.0)) if ratio.size else 0.0
        rate = np.gradient(tD, t)
        denom = B * D
        inner = slice(1, -1) if len(t) > 2 else slice(None)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(denom[inner] > 0, rate[inner] / denom[inner], 0.0)
        C_r = float(max(np.max(q), 0.0))
    return StabilityResult(t=t, D=D, tilde_D=tD, proximity=bp, B=B, amplification=amp,
                           C_gronwall=C_g, C_rate=C_r)
