"""Weighted Sobolev norms, control norms and the interpolation harness.

Norms
-----
``H^{j,sigma}``
    ``sum_{|alpha| <= j} || r**sigma d^alpha f ||_{L^2}^2`` over ``{r > 0}``.
``calH``
    ``int r**((1-k)/k) (s^2 + r G^{ij} w_i w_j / a2)`` for a state-dependent
    metric (``k`` is kappa).
``calH^{2k}``
    the pair norm in which a derivative of order ``|alpha|`` of ``s`` is
    weighted by ``r**((1-k)/(2k) + a)`` and of ``w`` by
    ``r**((1-k)/(2k) + 1/2 + a)`` for every ``0 <= a <= k`` with
    ``|alpha| - a <= k``.

Control norms
-------------
``A = |grad r - N|_inf + [v]_{C^1/2}`` with ``N`` equal to ``grad r`` at the
nearest located boundary point, and
``B = A + |grad r|_{tilde C^1/2} + |grad v|_inf`` where the tilde
seminorm divides ``|f(x) - f(y)|`` by ``r(x)**.5 + r(y)**.5 + |x-y|**.5``.
Suprema over pairs are exhaustive in one dimension and use a structured
sample in two (all pairs at dyadic offsets along grid lines plus random
pairs from a fixed seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisError, UnsupportedLevelError
from .goodvars import Params
from .grid import Field, Grid, weighted_integral
from .kernels import holder_sup
from .stencils import masked_derivative

__all__ = [
    "NormSpec", "ControlNorms", "norm_Hjsigma", "norm_H2k", "norm_H", "norm_H_squared",
    "control_A", "control_B", "control_norms", "tildeC_half", "holder_half",
    "interp_check", "embedding_check", "family_functions", "interp_triples",
    "check_interp_hypotheses", "derivative_multi", "multi_indices",
]

PROPS = ("gen", "Linf", "Chalf", "Ctilde")


@dataclass(frozen=True)
class NormSpec:
    """Derivative count ``j`` and weight exponent ``sigma`` of ``H^{j,sigma}``."""

    j: int
    sigma: float

    def __post_init__(self) -> None:
        if self.j < 0:
            raise DomainError("derivative count must be nonnegative")
        if not self.sigma > -0.5:
            raise DomainError(f"weight exponent {self.sigma} must exceed -1/2")


@dataclass(frozen=True)
class ControlNorms:
    A: float
    B: float
    N_field: np.ndarray
    parts: dict


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def multi_indices(dim: int, order: int):
    """All multi-indices ``alpha`` with ``|alpha| == order``."""
    if dim == 1:
        return [(order,)]
    return [(a, order - a) for a in range(order, -1, -1)]


def derivative_multi(values: np.ndarray, known: np.ndarray, grid: Grid, alpha,
                     accuracy: int = 4) -> np.ndarray:
    """``d^alpha`` of node data, applying one axis at a time."""
    out = values
    kn = known
    for axis, order in enumerate(alpha):
        if order == 0:
            continue
        out = masked_derivative(out, kn, axis, order, grid.spacing[axis], accuracy)
        fin = np.isfinite(out)
        kn = fin if fin.ndim == grid.dim else np.all(fin, axis=tuple(range(grid.dim, fin.ndim)))
    return out


def _sq(values: np.ndarray, dim: int) -> np.ndarray:
    sq = values * values
    if sq.ndim > dim:
        sq = np.sum(sq.reshape(sq.shape[:dim] + (-1,)), axis=-1)
    return sq


def _field_parts(f, r: Field):
    if isinstance(f, Field):
        return f.values, f.known
    vals = np.asarray(f, dtype=float)
    fin = np.isfinite(vals)
    kn = fin if fin.ndim == r.grid.dim else np.all(fin, axis=tuple(range(r.grid.dim, fin.ndim)))
    return vals, kn


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------

def norm_Hjsigma(f, spec: NormSpec, r: Field) -> float:
    """``||f||_{H^{j,sigma}}`` over ``{r > 0}``."""
    if spec.j > 4:
        raise UnsupportedLevelError("at most four derivatives are supported")
    vals, kn = _field_parts(f, r)
    total = 0.0
    for order in range(spec.j + 1):
        for alpha in multi_indices(r.grid.dim, order):
            d = derivative_multi(vals, kn, r.grid, alpha)
            total += weighted_integral(_sq(d, r.grid.dim), 2.0 * spec.sigma, r)
    return float(np.sqrt(max(total, 0.0)))


def norm_H2k(s, w, k: float, r: Field, p: Params) -> float:
    """Pair norm of ``calH^{2k}`` for ``k`` a multiple of 1/2 with ``2k <= 4``.

    For integer ``k`` the weight offsets ``a`` run over ``0..k``; for the odd
    levels ``2k = 1, 3`` they run over ``0, 1/2, ..., k`` so that the
    norm sits between its integer neighbours.
    """
    two_k = 2 * k
    if two_k != int(two_k) or k < 0:
        raise UnsupportedLevelError("k must be a nonnegative multiple of 1/2")
    two_k = int(two_k)
    if two_k > 4:
        raise UnsupportedLevelError("levels above 2k = 4 are not supported")
    step = 1.0 if two_k % 2 == 0 else 0.5
    a_all = [i * step for i in range(int(round(k / step)) + 1)]
    kap = p.kappa
    base_s = (1.0 - kap) / (2.0 * kap)
    base_w = base_s + 0.5
    sv, skn = _field_parts(s, r)
    wv, wkn = _field_parts(w, r)
    total = 0.0
    dim = r.grid.dim
    for order in range(two_k + 1):
        a_vals = [a for a in a_all if order - a <= k]
        if not a_vals:
            continue
        for alpha in multi_indices(dim, order):
            ds = _sq(derivative_multi(sv, skn, r.grid, alpha), dim)
            dw = _sq(derivative_multi(wv, wkn, r.grid, alpha), dim)
            for a in a_vals:
                total += weighted_integral(ds, 2.0 * (base_s + a), r)
                total += weighted_integral(dw, 2.0 * (base_w + a), r)
    return float(np.sqrt(max(total, 0.0)))


def norm_H_squared(s, w, state) -> float:
    """``int r**((1-k)/k) (s^2 + a2**-1 r G^{ij} w_i w_j)`` on the state's domain."""
    r = state.r
    sv, _ = _field_parts(s, r)
    wv, _ = _field_parts(w, r)
    if wv.shape == r.grid.shape:
        wv = wv[..., None]
    cb = state.coeffs
    rv = state.r.values
    gww = np.einsum("...ij,...i,...j->...", cb.G, wv, wv)
    dens = sv * sv + rv * gww / cb.a2
    kap = state.params.kappa
    return weighted_integral(dens, (1.0 - kap) / kap, r)


def norm_H(s, w, state) -> float:
    """Square root of :func:`norm_H_squared`."""
    return float(np.sqrt(max(norm_H_squared(s, w, state), 0.0)))


# ---------------------------------------------------------------------------
# Hoelder-type seminorms
# ---------------------------------------------------------------------------

def _pair_sample(grid: Grid, mask: np.ndarray, seed: int = 0, n_random: int = 10_000):
    """Structured pair sample on masked nodes (flat indices into the masked list)."""
    idx_grid = -np.ones(grid.shape, dtype=np.int64)
    nodes = np.argwhere(mask)
    idx_grid[tuple(nodes.T)] = np.arange(len(nodes))
    I, J = [], []
    for axis in range(grid.dim):
        n = grid.N[axis]
        off = 1
        while off < n:
            a = [slice(None)] * grid.dim
            b = [slice(None)] * grid.dim
            a[axis] = slice(0, n - off)
            b[axis] = slice(off, n)
            ia, ib = idx_grid[tuple(a)].ravel(), idx_grid[tuple(b)].ravel()
            ok = (ia >= 0) & (ib >= 0)
            I.append(ia[ok])
            J.append(ib[ok])
            off *= 2
    rng = np.random.default_rng(seed)
    m = len(nodes)
    I.append(rng.integers(0, m, n_random))
    J.append(rng.integers(0, m, n_random))
    return np.concatenate(I), np.concatenate(J)


def _holder(values: np.ndarray, mask: np.ndarray, grid: Grid, rhalf=None,
            exhaustive=None, seed: int = 0) -> float:
    pts = grid.coords[mask]
    vals = values[mask]
    rh = None if rhalf is None else rhalf[mask]
    if exhaustive is None:
        exhaustive = grid.dim == 1 and pts.shape[0] <= 4096
    pairs = None if exhaustive else _pair_sample(grid, mask, seed)
    return holder_sup(vals, pts, rh, pairs=pairs)


def holder_half(f, mask=None, seed: int = 0, exhaustive=None) -> float:
    """``sup |f(x) - f(y)| / |x - y|**(1/2)`` over masked nodes."""
    if not isinstance(f, Field):
        raise DomainError("holder_half expects a Field")
    m = f.mask if mask is None else mask
    return _holder(f.values, m, f.grid, None, exhaustive, seed)


def tildeC_half(f, r: Field, seed: int = 0, exhaustive=None) -> float:
    """``sup |f(x)-f(y)| / (r(x)**.5 + r(y)**.5 + |x-y|**.5)`` over ``{r > 0}``."""
    vals = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    m = r.mask
    rh = np.sqrt(np.where(m, np.maximum(r.values, 0.0), 0.0))
    return _holder(vals, m, r.grid, rh, exhaustive, seed)


# ---------------------------------------------------------------------------
# control norms
# ---------------------------------------------------------------------------

def _nearest_boundary_gradient(state) -> np.ndarray:
    b = state.boundary
    X = state.grid.coords
    d2 = np.sum((X[..., None, :] - b.points) ** 2, axis=-1)
    nearest = np.argmin(d2, axis=-1)
    return b.grads[nearest]


def control_norms(state, seed: int = 0) -> ControlNorms:
    """Both control norms with their components."""
    m = state.mask
    gr = state.grad_r
    if state.boundary is None:
        N = np.zeros_like(gr)
    else:
        N = _nearest_boundary_gradient(state)
    dev = float(np.max(np.linalg.norm((gr - N)[m], axis=-1)))
    vh = _holder(state.v.values, m, state.grid, None, None, seed)
    A = dev + vh
    rh = np.sqrt(np.where(m, np.maximum(state.r.values, 0.0), 0.0))
    grt = _holder(gr, m, state.grid, rh, None, seed)
    gv = float(np.max(np.linalg.norm(state.grad_v[m].reshape(int(m.sum()), -1), axis=-1)))
    B = A + grt + gv
    parts = {"grad_r_minus_N": dev, "v_C_half": vh, "grad_r_tildeC_half": grt,
             "grad_v_inf": gv}
    return ControlNorms(A=A, B=B, N_field=N, parts=parts)


def control_A(state, seed: int = 0) -> float:
    return control_norms(state, seed).A


def control_B(state, seed: int = 0) -> float:
    return control_norms(state, seed).B


# ---------------------------------------------------------------------------
# interpolation and embedding harness
# ---------------------------------------------------------------------------

def family_functions(name: str = "smooth20"):
    """Test functions ``f(x)`` (vectorized) of a named family.

    ``smooth20`` holds twenty products ``exp(a x) cos(b x + c)`` with fixed
    coefficients; ``monomials`` holds ``x**n`` for ``n = 1..8``.
    """
    if name == "smooth20":
        out = []
        for k in range(20):
            a = 0.6 * np.sin(1.3 * k + 0.4)
            b = 0.7 + 0.35 * k
            c = 0.45 * k + 0.2
            out.append(lambda x, a=a, b=b, c=c: np.exp(a * x) * np.cos(b * x + c))
        return out
    if name == "monomials":
        return [lambda x, n=n: x**n for n in range(1, 9)]
    raise DomainError(f"unknown function family {name!r}")


def _family_domain(domain: str, N: int):
    if domain == "parabola":
        grid = Grid.uniform(1, -1.25, 1.25, N)
        x = grid.axes[0]
        rv = 1.0 - x * x
    elif domain == "slice":
        grid = Grid.uniform(1, -0.25, 1.0, N)
        x = grid.axes[0]
        rv = x.copy()
    else:
        raise DomainError(f"unknown domain {domain!r}")
    r = Field(grid, rv, rv > 0)
    return grid, x, r


def check_interp_hypotheses(prop: str, j: int, m: int, sigma_m: float,
                            sigma_0: float = 0.0, d: int = 1) -> dict:
    """Validate an exponent choice; return ``theta``, ``p_j`` and ``sigma_j``."""
    if prop not in PROPS:
        raise DomainError(f"unknown inequality {prop!r}")
    if not (0 < j < m):
        raise HypothesisError("need 0 < j < m")
    if m > 4:
        raise HypothesisError("m <= 4 (stencil availability)")
    if prop == "gen":
        theta = j / m
        p_j = 2.0
        sigma_j = sigma_0 * (1 - theta) + sigma_m * theta
        if not m - sigma_m > -sigma_0:
            raise HypothesisError("violated: m - sigma_m - d(1/p_m - 1/p_0) > -sigma_0")
        if not sigma_j > -1.0 / p_j:
            raise HypothesisError("violated: sigma_j > -1/p_j")
    elif prop == "Linf":
        if not sigma_m > -0.5:
            raise HypothesisError("violated: sigma_m > -1/2")
        if not m - sigma_m - d / 2 > 0:
            raise HypothesisError("violated: m - sigma_m - d/2 > 0")
        theta = j / m
        p_j = 2.0 / theta
        sigma_j = sigma_m * theta
    elif prop == "Chalf":
        if not sigma_m > -0.5:
            raise HypothesisError("violated: sigma_m > -1/2")
        if not m - 0.5 - sigma_m - d / 2 > 0:
            raise HypothesisError("violated: m - 1/2 - sigma_m - d/2 > 0")
        theta = (2 * j - 1) / (2 * m - 1)
        p_j = 2.0 / theta
        sigma_j = sigma_m * theta
    else:
        if not sigma_m > (m - 2) / 2:
            raise HypothesisError("violated: sigma_m > (m-2)/2")
        if not m - 0.5 - sigma_m - d / 2 > 0:
            raise HypothesisError("violated: m - 1/2 - sigma_m - d/2 > 0")
        theta = j / m
        p_j = 2.0 / theta
        sigma_j = sigma_m * theta - 0.5 * (1 - theta)
    if not p_j * sigma_j > -1.0:
        raise HypothesisError("violated: integrability of the left side, p_j sigma_j > -1")
    return {"theta": theta, "p_j": p_j, "sigma_j": sigma_j}


_SIGMAS = (-0.25, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5)


def interp_triples(prop: str, d: int = 1) -> list:
    """All admissible ``(j, m, sigma_m, sigma_0)`` with ``m <= 4`` on a fixed sigma grid."""
    out = []
    s0_list = (0.0, 0.5) if prop == "gen" else (0.0,)
    for m in (2, 3, 4):
        for j in range(1, m):
            for sm in _SIGMAS:
                for s0 in s0_list:
                    try:
                        check_interp_hypotheses(prop, j, m, sm, s0, d)
                    except HypothesisError:
                        continue
                    out.append((j, m, sm, s0))
    return out


def _lp_weighted(dvals, p: float, sigma: float, r: Field) -> float:
    return weighted_integral(np.abs(dvals) ** p, p * sigma, r) ** (1.0 / p)


def interp_check(family: str = "smooth20", prop: str = "gen", N: int = 513,
                 domain: str = "parabola", triples=None) -> dict:
    """Max over the family of LHS/RHS for every admissible exponent triple.

    Returns ``{(j, m, sigma_m, sigma_0): ratio}``.
    """
    if prop not in PROPS:
        raise DomainError(f"unknown inequality {prop!r}")
    grid, x, r = _family_domain(domain, N)
    funcs = family_functions(family)
    triples = interp_triples(prop) if triples is None else triples
    for t in triples:
        check_interp_hypotheses(prop, t[0], t[1], t[2], t[3])
    known = np.ones(grid.shape, dtype=bool)
    ders = []
    for f in funcs:
        vals = f(x)
        ders.append([vals] + [masked_derivative(vals, known, 0, o, grid.h) for o in range(1, 5)])
    sup_norm = [float(np.max(np.abs(dd[0][r.mask]))) for dd in ders]
    fields = [Field(grid, dd[0], r.mask) for dd in ders]
    chalf = [holder_half(fl) if prop == "Chalf" else 0.0 for fl in fields]
    ctil = [tildeC_half(fl, r) if prop == "Ctilde" else 0.0 for fl in fields]
    out = {}
    for (j, m, sm, s0) in triples:
        h = check_interp_hypotheses(prop, j, m, sm, s0)
        theta, p_j, s_j = h["theta"], h["p_j"], h["sigma_j"]
        best = 0.0
        for n, dd in enumerate(ders):
            lhs = _lp_weighted(dd[j], p_j, s_j, r)
            top = _lp_weighted(dd[m], 2.0, sm, r)
            if prop == "gen":
                low = _lp_weighted(dd[0], 2.0, s0, r)
            elif prop == "Linf":
                low = sup_norm[n]
            elif prop == "Chalf":
                low = chalf[n]
            else:
                low = ctil[n]
            rhs = low ** (1 - theta) * top**theta
            if rhs <= 0:
                continue
            best = max(best, lhs / rhs)
        out[(j, m, sm, s0)] = best
    return out


_EMBEDDINGS = ((1, 1.0, 0, 0.0), (2, 2.0, 1, 1.0), (2, 1.75, 0, -0.25), (3, 2.0, 1, 0.0),
               (4, 3.0, 2, 1.0), (2, 1.0, 1, 0.0), (3, 3.0, 0, 0.0), (4, 2.5, 3, 1.5))


def embedding_check(family: str = "smooth20", N: int = 513, domain: str = "parabola",
                    pairs=_EMBEDDINGS) -> dict:
    """Max over the family of ``||f||_{H^{s2,sig2}} / ||f||_{H^{s1,sig1}}``.

    Each pair must satisfy ``s1 - s2 = sig1 - sig2 > 0`` and ``sig2 > -1/2``.
    """
    grid, x, r = _family_domain(domain, N)
    out = {}
    funcs = family_functions(family)
    for (s1, g1, s2, g2) in pairs:
        if not (s1 > s2 >= 0 and np.isclose(s1 - s2, g1 - g2) and g2 > -0.5):
            raise HypothesisError(f"embedding {(s1, g1, s2, g2)} violates s1-s2 = sig1-sig2 > 0")
        best = 0.0
        for f in funcs:
            fl = Field(grid, f(x), np.ones(grid.shape, dtype=bool))
            lo = norm_Hjsigma(fl, NormSpec(s2, g2), r)
            hi = norm_Hjsigma(fl, NormSpec(s1, g1), r)
            best = max(best, lo / hi)
        out[(s1, g1, s2, g2)] = best
    return out
