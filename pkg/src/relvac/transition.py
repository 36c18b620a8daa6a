"""Degenerate second-order transition operators and their test harnesses.

With ``G``, ``a2`` the background coefficients, ``k`` = kappa and ``F = G^-1``:

``L1 s   = r^(1-1/k) d_i (r^(1/k) a2 G^{ij} d_j s)``
``tL1 s  = a2 G^{ij} (r d_i d_j s + (1/k) d_i r d_j s)``
``L2 w_i = d_i (a2^2 r^(1-1/k) d_m (r^(1/k) a2^-1 G^{ml} w_l))``
``hatL2 w_i = a2 (d_i (r G^{ml} d_m w_l) + (1/k) G^{ml} d_m r d_i w_l)``
``tL2 w_i   = a2 G^{ml} (d_i (r d_m w_l) + (1/k) d_m r d_i w_l)``
``L3 w_i = r^(-1/k) a2 F_ij d_l (G^{lm} G^{jp} r^(1+1/k) (d_m w_p - d_p w_m))``
``tL3 w_i = a2 G^{ij} (r d_l W_lj + (1 + 1/k) d_l r W_lj)``, ``W_lj = d_l w_j - d_j w_l``

``L1`` equals ``r d_i(a2 G^{ij} d_j s) + (a2/k) G^{ij} d_i r d_j s``.

Discretization
--------------
``L1``, ``L2`` and ``L3`` are written in conservative (flux) form so that
their discrete versions are exactly self-adjoint for the node-sum inner
products

``<s, t>_1 = h^d sum r^(1/k - 1) s t``  and
``<u, w>_2 = h^d sum r^(1/k) a2^-1 G^{ij} u_i w_j``

whenever the fields vanish near the edge of the known region.  In one
dimension the divergence-of-flux terms use a staggered pair ``D- (K D+ .)``
with ``K`` averaged to half nodes.  In two dimensions ``L1`` keeps the
staggered pair on the diagonal and uses centred differences ``D0`` off the
diagonal, while ``L2`` and ``L3`` use ``D0`` throughout.  Since the ``D0``
operators commute, ``L2 L3 = 0``, ``L3 L2 = 0`` and ``curl L2 = 0`` hold to
rounding error.  The remaining operators use pointwise second-order central
differences.  Results are NaN wherever a stencil leaves the known region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisError
from .grid import Field
from .spaces import NormSpec, control_A, norm_Hjsigma

__all__ = [
    "OPERATORS", "OperatorId", "apply", "relation_defect", "adjoint_defect",
    "coercivity_ratio", "curl", "inner_product",
]

OPERATORS = ("L1", "tL1", "L2", "hatL2", "tL2", "L3", "tL3")
SCALAR_OPS = ("L1", "tL1")

#: Nodes within this distance (in grid steps) of the boundary are excluded
#: from :func:`relation_defect`.
RELATION_COLLAR = 5

#: Largest value of the control norm ``A`` accepted by :func:`coercivity_ratio`.
A_MAX = 0.2


@dataclass(frozen=True)
class OperatorId:
    tag: str

    def __post_init__(self) -> None:
        if self.tag not in OPERATORS:
            raise DomainError(f"unknown operator {self.tag!r}; expected one of {OPERATORS}")

    @property
    def scalar(self) -> bool:
        return self.tag in SCALAR_OPS


# ---------------------------------------------------------------------------
# difference primitives (NaN fill outside the array)
# ---------------------------------------------------------------------------

def _shift(a: np.ndarray, axis: int, k: int) -> np.ndarray:
    """``out[i] = a[i + k]`` along ``axis`` with NaN fill."""
    out = np.full_like(a, np.nan, dtype=float)
    n = a.shape[axis]
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k >= 0:
        src[axis], dst[axis] = slice(k, n), slice(0, n - k)
    else:
        src[axis], dst[axis] = slice(0, n + k), slice(-k, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _dp(a, axis, h):
    return (_shift(a, axis, 1) - a) / h


def _dm(a, axis, h):
    return (a - _shift(a, axis, -1)) / h


def _d0(a, axis, h):
    return (_shift(a, axis, 1) - _shift(a, axis, -1)) / (2.0 * h)


def _d2(a, axis, h):
    return (_shift(a, axis, 1) - 2.0 * a + _shift(a, axis, -1)) / (h * h)


def _half(a, axis):
    """Average to the half node ``i + 1/2`` (stored at ``i``)."""
    return 0.5 * (a + _shift(a, axis, 1))


def _grad0(a: np.ndarray, dim: int, h) -> np.ndarray:
    """Centred gradient; derivative axis appended last."""
    return np.stack([_d0(a, ax, h[ax]) for ax in range(dim)], axis=-1)


def _spow(r: np.ndarray, q: float) -> np.ndarray:
    """Odd power ``sign(r)|r|^q`` (equal to ``r`` when ``q = 1``)."""
    return np.sign(r) * np.abs(r) ** q


# ---------------------------------------------------------------------------
# background data
# ---------------------------------------------------------------------------

class _Background:
    def __init__(self, state):
        self.state = state
        self.grid = state.grid
        self.dim = state.grid.dim
        self.h = state.grid.spacing
        self.kap = state.params.kappa
        kn = state.known
        self.known = kn
        self.mask = state.mask
        cb = state.coeffs
        self.r = np.where(kn, state.r.values, np.nan)
        self.G = cb.G
        self.a2 = cb.a2
        self.F = np.linalg.inv(np.where(kn[..., None, None], cb.G, np.eye(self.dim)))
        self.F[~kn] = np.nan
        self.dr = _grad0(self.r, self.dim, self.h)


def _as_array(field, bg: _Background, scalar: bool) -> np.ndarray:
    vals = field.values if isinstance(field, Field) else np.asarray(field, dtype=float)
    if scalar:
        if vals.shape != bg.grid.shape:
            raise DomainError("the L1 family acts on scalar fields")
    else:
        if vals.shape == bg.grid.shape and bg.dim == 1:
            vals = vals[..., None]
        if vals.shape != bg.grid.shape + (bg.dim,):
            raise DomainError("the L2/L3 families act on d-vector fields")
    return vals


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def _L1(s, bg):
    q = 1.0 / bg.kap
    K = _spow(bg.r, q)[..., None, None] * bg.a2[..., None, None] * bg.G
    flux_div = np.zeros(bg.grid.shape)
    for i in range(bg.dim):
        for j in range(bg.dim):
            if i == j:
                flux_div = flux_div + _dm(_half(K[..., i, i], i) * _dp(s, i, bg.h[i]), i, bg.h[i])
            else:
                flux_div = flux_div + _d0(K[..., i, j] * _d0(s, j, bg.h[j]), i, bg.h[i])
    return _spow(bg.r, 1.0 - q) * flux_div


def _tL1(s, bg):
    q = 1.0 / bg.kap
    out = np.zeros(bg.grid.shape)
    ds = _grad0(s, bg.dim, bg.h)
    for i in range(bg.dim):
        for j in range(bg.dim):
            if i == j:
                dd = _d2(s, i, bg.h[i])
            else:
                dd = _d0(_d0(s, j, bg.h[j]), i, bg.h[i])
            out = out + bg.G[..., i, j] * (bg.r * dd + q * bg.dr[..., i] * ds[..., j])
    return bg.a2 * out


def _L2(w, bg):
    q = 1.0 / bg.kap
    c = bg.a2**2 * _spow(bg.r, 1.0 - q)
    M = (_spow(bg.r, q) / bg.a2)[..., None, None] * bg.G
    Mw = np.einsum("...ml,...l->...m", M, w)
    if bg.dim == 1:
        return _dm(_half(c, 0) * _dp(Mw[..., 0], 0, bg.h[0]), 0, bg.h[0])[..., None]
    div = sum(_d0(Mw[..., m], m, bg.h[m]) for m in range(bg.dim))
    return _grad0(c * div, bg.dim, bg.h)


def _pointwise_div_terms(w, bg):
    """``dw[..., l, m] = d_m w_l`` and ``d_i d_m w_l`` with central stencils."""
    dw = np.stack([_d0(w, ax, bg.h[ax]) for ax in range(bg.dim)], axis=-1)
    return dw


def _hatL2(w, bg):
    q = 1.0 / bg.kap
    dw = _pointwise_div_terms(w, bg)  # [..., l, m] = d_m w_l
    inner = bg.r * np.einsum("...ml,...lm->...", bg.G, dw)
    d_inner = _grad0(inner, bg.dim, bg.h)
    low = q * np.einsum("...ml,...m,...li->...i", bg.G, bg.dr, dw)
    return bg.a2[..., None] * (d_inner + low)


def _tL2(w, bg):
    q = 1.0 / bg.kap
    dw = _pointwise_div_terms(w, bg)
    out = np.zeros(bg.grid.shape + (bg.dim,))
    for i in range(bg.dim):
        for m in range(bg.dim):
            for l in range(bg.dim):
                if i == m:
                    ddw = _d2(w[..., l], i, bg.h[i])
                else:
                    ddw = _d0(dw[..., l, m], i, bg.h[i])
                term = bg.dr[..., i] * dw[..., l, m] + bg.r * ddw + q * bg.dr[..., m] * dw[..., l, i]
                out[..., i] = out[..., i] + bg.G[..., m, l] * term
    return bg.a2[..., None] * out


def _vorticity_tensor(w, bg):
    """``W[..., m, p] = d_m w_p - d_p w_m`` with centred differences."""
    dw = _pointwise_div_terms(w, bg)  # [..., p, m] = d_m w_p
    dmwp = np.swapaxes(dw, -1, -2)    # [..., m, p] = d_m w_p
    return dmwp - np.swapaxes(dmwp, -1, -2)


def _L3(w, bg):
    if bg.dim == 1:
        return np.where(np.isfinite(w), 0.0, np.nan)
    q = 1.0 / bg.kap
    W = _vorticity_tensor(w, bg)
    Y = _spow(bg.r, 1.0 + q)[..., None, None] * np.einsum("...lm,...jp,...mp->...lj", bg.G, bg.G, W)
    divY = sum(_d0(Y[..., l, :], l, bg.h[l]) for l in range(bg.dim))  # [..., j]
    pref = _spow(bg.r, -q) * bg.a2
    pref = np.where(bg.mask, pref, np.nan)
    return pref[..., None] * np.einsum("...ij,...j->...i", bg.F, divY)


def _tL3(w, bg):
    if bg.dim == 1:
        return np.where(np.isfinite(w), 0.0, np.nan)
    q = 1.0 / bg.kap
    W = _vorticity_tensor(w, bg)  # [..., l, j]
    dW = sum(_d0(W[..., l, :], l, bg.h[l]) for l in range(bg.dim))  # d_l W_lj
    drW = np.einsum("...l,...lj->...j", bg.dr, W)
    inner = bg.r[..., None] * dW + (1.0 + q) * drW
    return bg.a2[..., None] * np.einsum("...ij,...j->...i", bg.G, inner)


_IMPL = {"L1": _L1, "tL1": _tL1, "L2": _L2, "hatL2": _hatL2, "tL2": _tL2,
         "L3": _L3, "tL3": _tL3}


def _apply_arr(tag: str, vals: np.ndarray, bg: _Background) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        out = _IMPL[tag](vals, bg)
    return out


def apply(op, field, state) -> Field:
    """Evaluate a transition operator on the state's grid.

    ``op`` is an :class:`OperatorId` or its tag.  The result is NaN wherever
    the stencil reaches outside the known region.
    """
    oid = op if isinstance(op, OperatorId) else OperatorId(op)
    bg = _Background(state)
    vals = _as_array(field, bg, oid.scalar)
    out = _apply_arr(oid.tag, vals, bg)
    return Field(state.grid, out, state.mask & _finite(out, bg.dim))


def _finite(a: np.ndarray, dim: int) -> np.ndarray:
    fin = np.isfinite(a)
    return fin if fin.ndim == dim else np.all(fin, axis=tuple(range(dim, fin.ndim)))


def curl(w, state) -> np.ndarray:
    """Centred-difference curl ``d_1 w_2 - d_2 w_1`` (zero in one dimension)."""
    bg = _Background(state)
    vals = _as_array(w, bg, scalar=False)
    if bg.dim == 1:
        return np.where(np.isfinite(vals[..., 0]), 0.0, np.nan)
    return _d0(vals[..., 1], 0, bg.h[0]) - _d0(vals[..., 0], 1, bg.h[1])


# ---------------------------------------------------------------------------
# comparison of operators
# ---------------------------------------------------------------------------

def _interior(state, width: int = RELATION_COLLAR) -> np.ndarray:
    from scipy import ndimage

    cross = ndimage.generate_binary_structure(state.grid.dim, 1)
    return ndimage.binary_erosion(state.mask, structure=cross, iterations=width, border_value=1)


def _relation_L1(s, bg):
    """``L1 s - tL1 s`` and the lower-order side ``r d_i(a2 G^{ij}) d_j s``."""
    lhs = _L1(s, bg) - _tL1(s, bg)
    aG = bg.a2[..., None, None] * bg.G
    ds = _grad0(s, bg.dim, bg.h)
    rhs = np.zeros(bg.grid.shape)
    for i in range(bg.dim):
        for j in range(bg.dim):
            rhs = rhs + _d0(aG[..., i, j], i, bg.h[i]) * ds[..., j]
    return lhs, bg.r * rhs


def _relation_L2(w, bg):
    """``L2 w - hatL2 w`` and its lower-order expression.

    ``(L2 - hatL2) w_i = d_i a2 r d_m(G^{ml} w_l) + a2 d_i(r d_m G^{ml} w_l)
    + d_i(a2^2 r d_m(a2^-1) G^{ml} w_l) + (1/k) d_i(a2 G^{ml} d_m r) w_l``
    """
    q = 1.0 / bg.kap
    lhs = _L2(w, bg) - _hatL2(w, bg)
    dim, h = bg.dim, bg.h
    Gw = np.einsum("...ml,...l->...m", bg.G, w)
    divGw = sum(_d0(Gw[..., m], m, h[m]) for m in range(dim))
    da2 = _grad0(bg.a2, dim, h)
    t1 = da2 * (bg.r * divGw)[..., None]
    dG_w = sum(np.einsum("...l,...l->...", _d0(bg.G[..., m, :], m, h[m]), w) for m in range(dim))
    t2 = bg.a2[..., None] * _grad0(bg.r * dG_w, dim, h)
    dinv = _grad0(1.0 / bg.a2, dim, h)
    inner3 = bg.a2**2 * bg.r * np.einsum("...m,...m->...", dinv, Gw)
    t3 = _grad0(inner3, dim, h)
    coef = bg.a2[..., None] * np.einsum("...ml,...m->...l", bg.G, bg.dr)  # [..., l]
    dcoef = np.stack([_d0(coef, ax, h[ax]) for ax in range(dim)], axis=-1)  # [..., l, i]
    t4 = q * np.einsum("...li,...l->...i", dcoef, w)
    return lhs, t1 + t2 + t3 + t4


def relation_defect(field, state, width: int = RELATION_COLLAR) -> float:
    """Max mismatch between the two sides of the operator comparison identity.

    A scalar field (node shape) is tested against
    ``L1 - tL1 = r d_i(a2 G^{ij}) d_j``; a vector field (trailing component
    axis, also in one dimension) against the corresponding identity for ``L2 - hatL2``.  The
    maximum is taken over mask nodes at least ``width`` steps inside.
    """
    bg = _Background(state)
    vals = field.values if isinstance(field, Field) else np.asarray(field, dtype=float)
    scalar = vals.shape == bg.grid.shape
    with np.errstate(invalid="ignore", divide="ignore"):
        if scalar:
            lhs, rhs = _relation_L1(vals, bg)
        else:
            vals = _as_array(vals, bg, scalar=False)
            lhs, rhs = _relation_L2(vals, bg)
    inner = _interior(state, width)
    diff = np.abs(lhs - rhs)
    if diff.ndim > bg.dim:
        diff = np.max(diff, axis=-1)
    sel = diff[inner]
    if sel.size == 0:
        raise DomainError("no interior nodes left for the relation check")
    if not np.all(np.isfinite(sel)):
        raise DomainError("relation check needs the field on the whole domain")
    return float(np.max(sel))


# ---------------------------------------------------------------------------
# adjointness
# ---------------------------------------------------------------------------

def _weight_scalar(bg):
    return _spow(bg.r, 1.0 / bg.kap - 1.0)


def _metric_vector(bg):
    return (_spow(bg.r, 1.0 / bg.kap) / bg.a2)[..., None, None] * bg.G


def _ip_arrays(a, b, bg, scalar: bool) -> float:
    """Weighted node sum restricted to nodes where either factor is nonzero."""
    cell = float(np.prod(bg.h))
    if scalar:
        dens = _weight_scalar(bg) * a * b
        support = (a != 0) & (b != 0)
    else:
        dens = np.einsum("...ij,...i,...j->...", _metric_vector(bg), a, b)
        support = np.any(a != 0, axis=-1) & np.any(b != 0, axis=-1)
    support = support & bg.mask
    vals = dens[support]
    if not np.all(np.isfinite(vals)):
        raise DomainError("inner product support leaves the known region")
    return float(np.sum(vals) * cell)


def inner_product(op, u, w, state) -> float:
    """Discrete weighted inner product that makes ``op`` self-adjoint."""
    oid = op if isinstance(op, OperatorId) else OperatorId(op)
    bg = _Background(state)
    return _ip_arrays(_as_array(u, bg, oid.scalar), _as_array(w, bg, oid.scalar), bg, oid.scalar)


def _support_ok(vals, bg, scalar, width=2) -> bool:
    from scipy import ndimage

    nz = (vals != 0) if scalar else np.any(vals != 0, axis=-1)
    cross = ndimage.generate_binary_structure(bg.dim, 1)
    inner = ndimage.binary_erosion(bg.mask, structure=cross, iterations=width, border_value=1)
    return not np.any(nz & ~inner)


def adjoint_defect(op, u, w, state) -> float:
    """Signed relative defect ``(<op u, w> - <u, op w>) / (|op u||w| + |u||op w|)``.

    ``op`` is one of ``L1``, ``L2``, ``L3``; the inner products are those of
    :func:`inner_product`.  ``u`` and ``w`` should vanish near the boundary;
    otherwise a warning is issued since boundary terms may appear.
    """
    oid = op if isinstance(op, OperatorId) else OperatorId(op)
    if oid.tag not in ("L1", "L2", "L3"):
        raise DomainError("adjointness is asserted for L1, L2 and L3 only")
    bg = _Background(state)
    ua = _as_array(u, bg, oid.scalar)
    wa = _as_array(w, bg, oid.scalar)
    for arr in (ua, wa):
        if not _support_ok(arr, bg, oid.scalar):
            warnings.warn("test field support reaches the boundary collar; boundary terms may appear",
                          RuntimeWarning, stacklevel=2)
    Lu = _apply_arr(oid.tag, ua, bg)
    Lw = _apply_arr(oid.tag, wa, bg)
    # Off the support of the partner the operator output is irrelevant.
    if oid.scalar:
        Lu = np.where(wa != 0, Lu, 0.0)
        Lw = np.where(ua != 0, Lw, 0.0)
    else:
        Lu = np.where(np.any(wa != 0, axis=-1)[..., None], Lu, 0.0)
        Lw = np.where(np.any(ua != 0, axis=-1)[..., None], Lw, 0.0)
    left = _ip_arrays(Lu, wa, bg, oid.scalar)
    right = _ip_arrays(ua, Lw, bg, oid.scalar)
    full_Lu = np.nan_to_num(_apply_arr(oid.tag, ua, bg))
    full_Lw = np.nan_to_num(_apply_arr(oid.tag, wa, bg))

    def nrm(a):
        return np.sqrt(max(_ip_arrays(a, a, bg, oid.scalar), 0.0))

    scale = nrm(full_Lu) * nrm(wa) + nrm(ua) * nrm(full_Lw)
    if scale == 0.0:
        return 0.0
    return (left - right) / scale


# ---------------------------------------------------------------------------
# coercivity
# ---------------------------------------------------------------------------

def _sample_fields(grid, scalar: bool, n: int = 20):
    from .spaces import family_functions

    funcs = family_functions("smooth20")[:n]
    X = grid.coords
    out = []
    for k, f in enumerate(funcs):
        if grid.dim == 1:
            base = f(X[..., 0])
            out.append(base if scalar else base[..., None])
        else:
            g = funcs[(k + 7) % len(funcs)]
            a = f(X[..., 0]) * g(X[..., 1])
            if scalar:
                out.append(a)
            else:
                b = g(X[..., 0]) * f(X[..., 1])
                out.append(np.stack([a, b], axis=-1))
    return out


def coercivity_ratio(family: str, state, samples=None, check_A: bool = True) -> float:
    """Largest ratio of the left to the right side of the elliptic bound.

    ``family`` is ``"tL1"`` (scalar bound with weights ``1/(2k) + 1/2`` and
    ``1/(2k) - 1/2``) or ``"tL2+tL3"`` (vector bound with weights
    ``1/(2k) + 1`` and ``1/(2k)``).  ``samples`` defaults to twenty smooth
    fields.  Raises :class:`HypothesisError` when ``A`` exceeds ``A_MAX``.
    """
    if family not in ("tL1", "tL2+tL3"):
        raise DomainError("family must be 'tL1' or 'tL2+tL3'")
    if check_A:
        A = control_A(state)
        if A > A_MAX:
            raise HypothesisError(f"control norm A = {A:.3g} exceeds {A_MAX}; the bound is not claimed")
    scalar = family == "tL1"
    bg = _Background(state)
    if samples is None:
        samples = _sample_fields(state.grid, scalar)
    if len(samples) < 1:
        raise DomainError("no sample fields")
    kap = bg.kap
    if scalar:
        top, mid, low = 1 / (2 * kap) + 0.5, 1 / (2 * kap) - 0.5, (1 - kap) / (2 * kap)
    else:
        top, mid, low = 1 / (2 * kap) + 1.0, 1 / (2 * kap), 1 / (2 * kap)
    best = 0.0
    for smp in samples:
        vals = _as_array(smp, bg, scalar)
        if not np.any(vals[state.mask]):
            continue
        if scalar:
            Lv = _apply_arr("tL1", vals, bg)
        else:
            Lv = _apply_arr("tL2", vals, bg) + _apply_arr("tL3", vals, bg)
        lhs = norm_Hjsigma(vals, NormSpec(2, top), state.r)
        rhs = norm_Hjsigma(Lv, NormSpec(0, mid), state.r) + norm_Hjsigma(vals, NormSpec(0, low), state.r)
        if rhs > 0:
            best = max(best, lhs / rhs)
    return best
