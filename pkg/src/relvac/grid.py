"""Ambient Cartesian grid, masked fields, free-boundary location and
degenerate-weight quadrature.

The fluid region is represented by a node mask ``{r > 0}`` on a fixed
uniform grid.  Around the mask a collar of up to :data:`COLLAR` nodes
carries quadratic one-sided extrapolations of every field, which lets the
interior difference stencils run unchanged up to the boundary.  Nodes that
are neither in the mask nor in the collar hold NaN.

Integrals ``int_{r>0} r**sigma f dx`` are computed in one dimension by
factoring out the simple zeros of ``r`` at the located roots and using
Gauss-Jacobi rules on the two end panels and Gauss-Legendre rules on the
remaining cells, with ``f`` and the smooth quotient ``r/dist`` interpolated
by local quartics through mask nodes only.  In two dimensions interior
cells use the tensor trapezoid rule and cut cells are sub-sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage, optimize
from scipy.special import roots_jacobi, roots_legendre

from .errors import CoverageError, DegenerateDomainError, DivergentWeightError, DomainError
from .stencils import lagrange_weights, masked_derivative

#: Width (in nodes) of the extrapolation collar around the mask.
COLLAR = 3


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid.

    ``extents`` holds one ``(lo, hi)`` pair per axis and ``N`` the node count
    per axis.
    """

    extents: tuple
    N: tuple

    def __post_init__(self) -> None:
        ext = tuple((float(a), float(b)) for a, b in self.extents)
        n = tuple(int(k) for k in np.broadcast_to(np.asarray(self.N), (len(ext),)))
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "N", n)
        if len(ext) not in (1, 2):
            raise DomainError("grid dimension must be 1 or 2")
        for (a, b), k in zip(ext, n):
            if not b > a:
                raise DomainError("grid extents must be increasing")
            if k < 16:
                raise DomainError("at least 16 nodes per axis are required")
        if len(ext) == 2 and not np.isclose(self.spacing[0], self.spacing[1], rtol=1e-9):
            raise DomainError("2-d grids must have equal spacing on both axes")

    @classmethod
    def uniform(cls, dim: int, lo: float, hi: float, n: int) -> "Grid":
        return cls(extents=((lo, hi),) * dim, N=(n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple:
        return self.N

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / (k - 1) for (a, b), k in zip(self.extents, self.N))

    @property
    def h(self) -> float:
        return self.spacing[0]

    @property
    def axes(self) -> list:
        return [np.linspace(a, b, k) for (a, b), k in zip(self.extents, self.N)]

    @property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class Field:
    """Node values on a grid with the interior mask they belong to.

    ``values`` has shape ``grid.shape`` (scalar) or ``grid.shape + (d,)``;
    NaN marks nodes outside mask and collar.
    """

    grid: Grid
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if vals.shape[: self.grid.dim] != self.grid.shape or mask.shape != self.grid.shape:
            raise DomainError("field shape does not match the grid")
        if not np.all(np.isfinite(vals[mask])):
            raise DomainError("field values must be finite on masked nodes")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mask", mask)

    @property
    def known(self) -> np.ndarray:
        """Nodes carrying values (mask plus collar)."""
        v = np.isfinite(self.values)
        return v if v.ndim == self.grid.dim else np.all(v, axis=tuple(range(self.grid.dim, v.ndim)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.mask)


@dataclass(frozen=True)
class Boundary:
    """Located zero set of ``r``.

    ``points`` has shape ``(m, d)``; ``grads`` holds ``grad r`` at each point
    and ``slopes`` its magnitude.  In two dimensions the points are ordered
    by angle around the mask centroid so that they form a closed polygon.
    """

    points: np.ndarray
    slopes: np.ndarray
    grads: np.ndarray

    @property
    def dim(self) -> int:
        return self.points.shape[1]


# ---------------------------------------------------------------------------
# collar extension
# ---------------------------------------------------------------------------

def _shift(arr: np.ndarray, axis: int, off: int, fill):
    """``out[i] = arr[i + off]`` along ``axis`` with ``fill`` past the edge."""
    out = np.full_like(arr, fill)
    n = arr.shape[axis]
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if off >= 0:
        src[axis] = slice(off, n)
        dst[axis] = slice(0, n - off)
    else:
        src[axis] = slice(0, n + off)
        dst[axis] = slice(-off, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def extend(values: np.ndarray, mask: np.ndarray, width: int = COLLAR) -> np.ndarray:
    """Fill a collar of ``width`` node layers around ``mask`` by extrapolation.

    Each new layer is obtained from the already known nodes by one-sided
    quadratic extrapolation along grid lines (averaging over available
    directions), falling back to linear and constant extrapolation where
    fewer known neighbours exist.  Values outside mask and collar are NaN.
    """
    vals = np.asarray(values, dtype=float)
    ndim = mask.ndim
    extra = vals.ndim - ndim
    known = mask.copy()
    out = np.where(known.reshape(known.shape + (1,) * extra), vals, np.nan)
    cross = ndimage.generate_binary_structure(ndim, 1)
    for _ in range(width):
        ring = ndimage.binary_dilation(known, structure=cross) & ~known
        if not ring.any():
            break
        acc = np.zeros(out.shape)
        cnt = np.zeros(out.shape)
        filled = np.zeros(known.shape, dtype=bool)
        # quadratic first, then linear, then constant; stop at the best available
        for coeffs in ((3.0, -3.0, 1.0), (2.0, -1.0), (1.0,)):
            level = np.zeros(known.shape, dtype=bool)
            for axis in range(ndim):
                for sgn in (1, -1):
                    ok = ring & ~filled
                    est = np.zeros(out.shape)
                    for m, c in enumerate(coeffs, start=1):
                        k_sh = _shift(known, axis, sgn * m, False)
                        ok &= k_sh
                        est += c * np.nan_to_num(_shift(out, axis, sgn * m, np.nan))
                    if ok.any():
                        okb = ok.reshape(ok.shape + (1,) * extra)
                        acc = np.where(okb, acc + est, acc)
                        cnt = np.where(okb, cnt + 1.0, cnt)
                        level |= ok
            filled |= level
        fb = filled.reshape(filled.shape + (1,) * extra)
        out = np.where(fb & ~known.reshape(fb.shape), acc / np.maximum(cnt, 1.0), out)
        known = known | filled
    return out


def collar_mask(mask: np.ndarray, width: int = COLLAR) -> np.ndarray:
    cross = ndimage.generate_binary_structure(mask.ndim, 1)
    return ndimage.binary_dilation(mask, structure=cross, iterations=width) & ~mask


def make_field(grid: Grid, values, mask, extend_collar: bool = True) -> Field:
    """Build a :class:`Field`, extending ``values`` off ``mask`` if requested."""
    mask = np.asarray(mask, dtype=bool)
    vals = np.asarray(values, dtype=float)
    if extend_collar:
        vals = extend(vals, mask)
    return Field(grid, vals, mask)


def derivative(f: Field, axis: int, order: int = 1, accuracy: int = 4) -> np.ndarray:
    """Grid derivative of a field on its known nodes."""
    return masked_derivative(f.values, f.known, axis, order, f.grid.spacing[axis], accuracy)


def gradient(values: np.ndarray, known: np.ndarray, grid: Grid, accuracy: int = 4) -> np.ndarray:
    """Stack of first derivatives; the derivative axis is appended last.

    For a scalar field the result has shape ``shape + (d,)``; for a vector
    field ``shape + (d, d)`` with ``out[..., j, i] = d_i f_j``.
    """
    parts = [masked_derivative(values, known, a, 1, grid.spacing[a], accuracy)
             for a in range(grid.dim)]
    return np.stack(parts, axis=-1)


# ---------------------------------------------------------------------------
# boundary location
# ---------------------------------------------------------------------------

def _single_blob_1d(mask: np.ndarray) -> tuple:
    idx = np.flatnonzero(mask)
    if idx.size == 0 or idx.size == mask.size:
        raise DegenerateDomainError("degenerate domain: r has no sign change")
    if idx[-1] - idx[0] + 1 != idx.size:
        raise DegenerateDomainError("degenerate domain: fluid region is not connected")
    return int(idx[0]), int(idx[-1])


def _edge_root(xs: np.ndarray, fs: np.ndarray, a: float, b: float) -> tuple:
    """Root in ``[a, b]`` of the interpolant through ``(xs, fs)`` and its slope."""
    coef = np.polyfit(xs - a, fs, len(xs) - 1)
    poly = np.poly1d(coef)
    fa, fb = poly(0.0), poly(b - a)
    if fa * fb > 0:
        # a root sitting on a node may be perturbed to the wrong sign by rounding
        tol = 64 * np.finfo(float).eps * float(np.max(np.abs(fs)))
        if abs(fa) <= tol or abs(fb) <= tol:
            root = 0.0 if abs(fa) <= abs(fb) else b - a
            return a + root, float(poly.deriv()(root))
        # fall back to the secant through the edge values
        coef = np.polyfit([0.0, b - a], [np.interp(a, xs, fs), np.interp(b, xs, fs)], 1)
        poly = np.poly1d(coef)
    root = optimize.brentq(poly, 0.0, b - a, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return a + root, float(poly.deriv()(root))


def locate_boundary(r: Field) -> Boundary:
    """Sub-grid roots of ``r`` with the gradient of ``r`` at each root.

    In one dimension the cubic through the four nodes straddling each
    crossing edge is used (collar values included).  In two dimensions the
    same is done along every crossing grid edge.
    """
    grid = r.grid
    vals = r.values
    known = r.known
    mask = r.mask
    if grid.dim == 1:
        x = grid.axes[0]
        i0, i1 = _single_blob_1d(mask)
        pts, grads = [], []
        for edge, inner in ((i0 - 1, i0), (i1, i1 + 1)):
            if edge < 0 or inner > len(x) - 1:
                continue
            lo, hi = edge, inner
            cand = [j for j in range(lo - 1, hi + 2) if 0 <= j < len(x) and known[j]]
            if lo not in cand or hi not in cand:
                raise DegenerateDomainError("boundary edge lacks collar values")
            xs, fs = x[cand], vals[cand]
            root, slope = _edge_root(xs, fs, x[lo], x[hi])
            pts.append([root])
            grads.append([slope])
        if not pts:
            raise DegenerateDomainError("degenerate domain: r has no sign change")
        grads = np.asarray(grads)
        return Boundary(points=np.asarray(pts), slopes=np.abs(grads[:, 0]), grads=grads)
    return _locate_boundary_2d(r)


def _locate_boundary_2d(r: Field) -> Boundary:
    grid = r.grid
    vals, known, mask = r.values, r.known, r.mask
    if not mask.any() or mask.all():
        raise DegenerateDomainError("degenerate domain: r has no sign change")
    labels, nlab = ndimage.label(mask)
    if nlab != 1:
        raise DegenerateDomainError("degenerate domain: fluid region is not a single blob")
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise DegenerateDomainError("fluid region touches the box edge")
    xs, ys = grid.axes
    h = grid.h
    grad = gradient(vals, known, grid, accuracy=2)
    pts, grads = [], []
    for axis in range(2):
        other = 1 - axis
        lines = np.nonzero(mask.any(axis=axis))[0]
        for line in lines:
            if axis == 0:
                m, f, k, g = mask[:, line], vals[:, line], known[:, line], grad[:, line]
                coords = xs
            else:
                m, f, k, g = mask[line, :], vals[line, :], known[line, :], grad[line, :]
                coords = ys
            crossings = np.nonzero(m[:-1] != m[1:])[0]
            for c in crossings:
                cand = [j for j in range(c - 1, c + 3) if 0 <= j < len(m) and k[j]]
                if c not in cand or c + 1 not in cand:
                    continue
                root, _ = _edge_root(coords[cand], f[cand], coords[c], coords[c + 1])
                tfrac = (root - coords[c]) / h
                gr = (1 - tfrac) * g[c] + tfrac * g[c + 1]
                fixed = (xs if other == 0 else ys)[line]
                pts.append([root, fixed] if axis == 0 else [fixed, root])
                grads.append(gr)
    pts = np.asarray(pts)
    grads = np.asarray(grads)
    centre = grid.coords[mask].mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0]))
    pts, grads = pts[order], grads[order]
    return Boundary(points=pts, slopes=np.linalg.norm(grads, axis=1), grads=grads)


def dist_to_boundary(x, b: Boundary) -> float:
    """Euclidean distance from ``x`` to the located boundary set."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if b.dim == 1:
        return float(np.min(np.abs(b.points[:, 0] - x[0])))
    p = b.points
    q = np.roll(p, -1, axis=0)
    seg = q - p
    L2 = np.sum(seg * seg, axis=1)
    t = np.clip(np.sum((x - p) * seg, axis=1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    proj = p + t[:, None] * seg
    return float(np.min(np.linalg.norm(proj - x, axis=1)))


def boundary_arclength_weights(b: Boundary) -> np.ndarray:
    """Per-point arc-length weights of the closed polygon (2-d); ones in 1-d."""
    if b.dim == 1:
        return np.ones(len(b.points))
    p = b.points
    seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    return 0.5 * (seg + np.roll(seg, 1))


# ---------------------------------------------------------------------------
# weighted quadrature
# ---------------------------------------------------------------------------

_NQ = 8


@lru_cache(maxsize=None)
def _jacobi(n: int, alpha: float, beta: float):
    return roots_jacobi(n, alpha, beta)


@lru_cache(maxsize=None)
def _legendre(n: int):
    return roots_legendre(n)


def _interp_local(x: np.ndarray, f: np.ndarray, lo: int, hi: int, xq: np.ndarray) -> np.ndarray:
    """Quartic Lagrange interpolation of node data ``f`` using nodes lo..hi only."""
    h = x[1] - x[0]
    j = np.floor((xq - x[0]) / h).astype(int) - 2
    j = np.clip(j, lo, hi - 4)
    idx = j[:, None] + np.arange(5)[None, :]
    w = lagrange_weights(x[idx], xq)
    if f.ndim == 1:
        return np.sum(w * f[idx], axis=1)
    return np.einsum("qm,qm...->q...", w, f[idx])


def _end_root(x: np.ndarray, r: np.ndarray, i_in: int, direction: int) -> float:
    """Root of the quartic through mask nodes next to the end ``i_in``.

    ``direction`` is -1 for a left end and +1 for a right end.
    """
    h = x[1] - x[0]
    nodes = i_in - direction * np.arange(5)
    nodes = np.sort(nodes)
    poly = np.poly1d(np.polyfit(x[nodes] - x[i_in], r[nodes], 4))
    for reach in (1.0, 1.5, 2.0):
        y = direction * reach * h
        if poly(y) <= 0:
            a, b = sorted((0.0, y))
            return x[i_in] + optimize.brentq(poly, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    raise DegenerateDomainError("could not bracket the vacuum root near the domain end")


def domain_ends_1d(r: Field):
    """Locate the two ends of a 1-d domain.

    Returns ``(i0, i1, x_left, x_right, left_is_root, right_is_root)``; an end
    is a hard box edge when the mask reaches the last grid node.
    """
    x = r.grid.axes[0]
    mask = r.mask
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise DegenerateDomainError("degenerate domain: empty fluid region")
    if idx[-1] - idx[0] + 1 != idx.size:
        raise DegenerateDomainError("degenerate domain: fluid region is not connected")
    i0, i1 = int(idx[0]), int(idx[-1])
    if i1 - i0 < 9:
        raise DegenerateDomainError("fluid region is under-resolved (fewer than 10 nodes)")
    rv = r.values
    lroot = i0 > 0
    rroot = i1 < len(x) - 1
    xl = _end_root(x, rv, i0, -1) if lroot else x[0]
    xr = _end_root(x, rv, i1, +1) if rroot else x[-1]
    return i0, i1, xl, xr, lroot, rroot


def _integral_1d(f_vals: np.ndarray, sigma: float, r: Field, ends=None) -> float:
    x = r.grid.axes[0]
    i0, i1, xl, xr, lroot, rroot = ends if ends is not None else domain_ends_1d(r)
    rv = r.values
    # smooth positive quotient q = r / ((x - xl)(xr - x)) over the roots present
    xm = x[i0 : i1 + 1]
    den = np.ones_like(xm)
    if lroot:
        den = den * (xm - xl)
    if rroot:
        den = den * (xr - xm)
    q_nodes = np.zeros_like(x)
    q_nodes[i0 : i1 + 1] = rv[i0 : i1 + 1] / den
    fv = np.where(np.isfinite(f_vals), f_vals, 0.0)

    def integrand_smooth(xq: np.ndarray, drop_left: bool, drop_right: bool) -> np.ndarray:
        q = _interp_local(x, q_nodes, i0, i1, xq)
        g = _interp_local(x, fv, i0, i1, xq)
        wgt = np.power(np.maximum(q, 1e-300), sigma) if sigma != 0 else np.ones_like(q)
        if lroot and not drop_left:
            wgt = wgt * np.power(xq - xl, sigma)
        if rroot and not drop_right:
            wgt = wgt * np.power(xr - xq, sigma)
        return wgt * g

    total = 0.0
    # left panel: [xl, x[i0+1]] with the Jacobi weight when the end is a root
    a_int = i0 + 1 if lroot else i0
    b_int = i1 - 1 if rroot else i1
    if lroot:
        L = x[a_int] - xl
        t, w = _jacobi(_NQ + 2, 0.0, sigma)
        xq = xl + (t + 1.0) * L / 2.0
        total += (L / 2.0) ** (sigma + 1.0) * np.dot(w, integrand_smooth(xq, True, False))
    if rroot:
        L = xr - x[b_int]
        t, w = _jacobi(_NQ + 2, sigma, 0.0)
        xq = x[b_int] + (t + 1.0) * L / 2.0
        total += (L / 2.0) ** (sigma + 1.0) * np.dot(w, integrand_smooth(xq, False, True))
    if b_int > a_int:
        t, w = _legendre(_NQ)
        h = x[1] - x[0]
        starts = x[a_int:b_int]
        xq = (starts[:, None] + (t[None, :] + 1.0) * h / 2.0).ravel()
        vals = integrand_smooth(xq, False, False).reshape(len(starts), _NQ)
        total += h / 2.0 * float(np.sum(vals @ w))
    return float(total)


def _integral_2d(f_vals: np.ndarray, sigma: float, r: Field, sub: int = 8) -> float:
    grid = r.grid
    h = grid.h
    rv = r.values
    mask = r.mask
    fv = np.where(np.isfinite(f_vals), f_vals, 0.0)
    rk = np.where(np.isfinite(rv), rv, -1.0)
    c00, c10 = mask[:-1, :-1], mask[1:, :-1]
    c01, c11 = mask[:-1, 1:], mask[1:, 1:]
    full = c00 & c10 & c01 & c11
    cut = (c00 | c10 | c01 | c11) & ~full
    g = np.where(mask, np.power(np.where(mask, rv, 1.0), sigma) * fv, 0.0)
    cell = 0.25 * (g[:-1, :-1] + g[1:, :-1] + g[:-1, 1:] + g[1:, 1:])
    total = float(np.sum(cell[full])) * h * h
    ci, cj = np.nonzero(cut)
    if ci.size:
        s = (np.arange(sub) + 0.5) / sub
        sx, sy = np.meshgrid(s, s, indexing="ij")
        sx, sy = sx.ravel(), sy.ravel()

        def bil(a):
            return ((1 - sx)[None] * (1 - sy)[None] * a[ci, cj][:, None]
                    + sx[None] * (1 - sy)[None] * a[ci + 1, cj][:, None]
                    + (1 - sx)[None] * sy[None] * a[ci, cj + 1][:, None]
                    + sx[None] * sy[None] * a[ci + 1, cj + 1][:, None])

        rr = bil(rk)
        ff = bil(fv)
        pos = rr > 0
        contrib = np.where(pos, np.power(np.where(pos, rr, 1.0), sigma) * ff, 0.0)
        total += float(np.sum(contrib)) * h * h / (sub * sub)
    return total


def weighted_integral(f, sigma: float, r: Field) -> float:
    """Approximate ``int_{r > 0} r**sigma f dx``.

    ``f`` is a :class:`Field` or an array of node values on ``r.grid``.
    """
    if not sigma > -1.0:
        raise DivergentWeightError(f"weight exponent {sigma} <= -1 is not integrable")
    fv = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    if r.grid.dim == 1:
        ends = r.__dict__.get("_ends")
        if ends is None:
            ends = domain_ends_1d(r)
            object.__setattr__(r, "_ends", ends)
        return _integral_1d(fv, float(sigma), r, ends)
    return _integral_2d(fv, float(sigma), r)


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def resample(grid: Grid, points: np.ndarray, values: np.ndarray, collar: int = COLLAR) -> np.ndarray:
    """Interpolate scattered data onto grid nodes.

    In one dimension ``points`` (shape ``(n,)`` or ``(n, 1)``) must be strictly
    increasing; nodes inside their hull get cubic Lagrange interpolation
    from the four nearest points, and nodes within ``collar`` spacings
    outside the hull get one-sided quadratic extrapolation.  Other nodes are
    NaN.  In two dimensions piecewise-cubic (Clough-Tocher) interpolation
    on the triangulated cloud is used.
    """
    h = grid.h
    values = np.asarray(values, dtype=float)
    if grid.dim == 1:
        xs = np.asarray(points, dtype=float).reshape(-1)
        if xs.size < 4:
            raise CoverageError("need at least four scattered points")
        if np.any(np.diff(xs) <= 0):
            raise CoverageError("scattered points are not strictly increasing")
        x = grid.axes[0]
        gaps = np.nonzero(np.diff(xs) > 2.0 * h)[0]
        if gaps.size:
            g = gaps[0]
            node = int(np.searchsorted(x, xs[g], side="right"))
            raise CoverageError(
                f"coverage gap between {xs[g]:.6g} and {xs[g + 1]:.6g} "
                f"leaves grid node {node} (x={x[min(node, len(x) - 1)]:.6g}) uncovered")
        out = np.full((len(x),) + values.shape[1:], np.nan)
        inside = (x >= xs[0]) & (x <= xs[-1])
        xi = x[inside]
        j = np.clip(np.searchsorted(xs, xi, side="right") - 2, 0, len(xs) - 4)
        idx = j[:, None] + np.arange(4)[None, :]
        w = lagrange_weights(xs[idx], xi)
        out[inside] = np.einsum("qm,qm...->q...", w, values[idx])
        for side in (-1, 1):
            if side < 0:
                sel = (x < xs[0]) & (x >= xs[0] - collar * h - 1e-12)
                idx = np.arange(3)
            else:
                sel = (x > xs[-1]) & (x <= xs[-1] + collar * h + 1e-12)
                idx = np.arange(len(xs) - 3, len(xs))
            if sel.any():
                w = lagrange_weights(np.broadcast_to(xs[idx], (sel.sum(), 3)), x[sel])
                out[sel] = np.einsum("qm,m...->q...", w, values[idx])
        return out
    from scipy.interpolate import CloughTocher2DInterpolator

    pts = np.asarray(points, dtype=float)
    interp = CloughTocher2DInterpolator(pts, values.reshape(len(pts), -1))
    res = interp(grid.coords.reshape(-1, 2))
    return res.reshape(grid.shape + values.shape[1:])


def check_coverage(new_mask: np.ndarray, resampled: np.ndarray, grid: Grid) -> None:
    """Raise :class:`CoverageError` naming a masked node that got no value."""
    vals = resampled if resampled.ndim == grid.dim else np.all(
        np.isfinite(resampled), axis=tuple(range(grid.dim, resampled.ndim)))
    finite = np.isfinite(vals) if vals.dtype != bool else vals
    bad = new_mask & ~finite
    if bad.any():
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise CoverageError(f"grid node {node} inside the new domain is not covered")


def interpolate(values: np.ndarray, known: np.ndarray, grid: Grid, points: np.ndarray) -> np.ndarray:
    """Tensor cubic Lagrange interpolation of node data at arbitrary points.

    The 4**d stencil around each point must consist of known nodes; where it
    does not, the linear 2**d stencil is tried, and NaN is returned if that
    fails as well.  ``points`` has shape ``(m, d)``; the result has shape
    ``(m,) + values.shape[d:]``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
    d = grid.dim
    extra = values.shape[d:]
    vals = np.where(known.reshape(known.shape + (1,) * len(extra)), values, 0.0)
    lo = np.array([a for a, _ in grid.extents])
    hs = np.array(grid.spacing)
    s = (pts - lo) / hs
    out = np.full((len(pts),) + extra, np.nan)
    for width in (4, 2):
        todo = ~np.all(np.isfinite(out.reshape(len(pts), -1)), axis=1)
        if not todo.any():
            break
        base = np.floor(s[todo]).astype(int) - (width // 2 - 1)
        idx_ax, w_ax, ok = [], [], np.ones(int(todo.sum()), dtype=bool)
        for a in range(d):
            b = base[:, a]
            ok &= (b >= 0) & (b + width - 1 <= grid.N[a] - 1)
            b = np.clip(b, 0, grid.N[a] - width)
            nodes = b[:, None] + np.arange(width)[None, :]
            idx_ax.append(nodes)
            w_ax.append(lagrange_weights(nodes.astype(float), s[todo][:, a]))
        acc = np.zeros((int(todo.sum()),) + extra)
        if d == 1:
            kn = known[idx_ax[0]]
            ok &= np.all(kn, axis=1)
            acc = np.einsum("qm,qm...->q...", w_ax[0], vals[idx_ax[0]])
        else:
            ix = idx_ax[0][:, :, None]
            iy = idx_ax[1][:, None, :]
            kn = known[ix, iy]
            ok &= np.all(kn.reshape(len(kn), -1), axis=1)
            w2 = w_ax[0][:, :, None] * w_ax[1][:, None, :]
            acc = np.einsum("qab,qab...->q...", w2, vals[ix, iy])
        sub = np.where(todo)[0][ok]
        out[sub] = acc[ok]
    return out
