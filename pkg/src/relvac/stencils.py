"""Finite-difference weights and masked directional derivatives."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def fornberg_weights(z: float, x, m: int) -> np.ndarray:
    """Weights for derivatives 0..m at ``z`` from nodes ``x`` (Fornberg 1988).

    Returns an array of shape ``(m + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


# Candidate stencils per derivative order, most accurate first.  The first
# entry is the 4th-order central stencil; the rest are 2nd-order central or
# one-sided fallbacks used near the edge of the known region.
_OFFSETS = {
    1: [range(-2, 3), range(-1, 2), range(0, 3), range(-2, 1), range(0, 2), range(-1, 1)],
    2: [range(-2, 3), range(-1, 2), range(0, 4), range(-3, 1), range(-1, 3), range(-2, 2)],
    3: [range(-3, 4), range(-2, 3), range(0, 5), range(-4, 1), range(-1, 4), range(-3, 2)],
    4: [range(-3, 4), range(-2, 3), range(0, 6), range(-5, 1), range(-1, 5), range(-4, 2)],
}


@lru_cache(maxsize=None)
def _stencils(order: int, accuracy: int):
    out = []
    for offs in _OFFSETS[order]:
        offs = tuple(offs)
        if accuracy <= 2 and len(offs) > order + 2 and 0 in offs and offs[0] == -offs[-1]:
            # drop the wide central stencil when only 2nd order is requested
            continue
        w = fornberg_weights(0.0, offs, order)[order]
        out.append((offs, w))
    return tuple(out)


def masked_derivative(values: np.ndarray, known: np.ndarray, axis: int, order: int,
                      h: float, accuracy: int = 4) -> np.ndarray:
    """Derivative of ``values`` along spatial ``axis`` using only known nodes.

    ``values`` has shape ``grid.shape + extra``; ``known`` has ``grid.shape``.
    At each known node the most accurate stencil from the candidate list
    whose nodes are all known is used.  Nodes without any admissible
    stencil (and unknown nodes) get NaN.
    """
    if order == 0:
        return np.where(_bcast(known, values), values, np.nan)
    ndim = known.ndim
    pad = 5
    pad_width = [(0, 0)] * values.ndim
    pad_width[axis] = (pad, pad)
    vpad = np.pad(np.where(_bcast(known, values), values, 0.0), pad_width)
    kpad = np.pad(known, [(pad, pad) if a == axis else (0, 0) for a in range(ndim)])
    n = known.shape[axis]
    out = np.full(values.shape, np.nan)
    done = ~known.copy()

    def sl(arr, off):
        idx = [slice(None)] * arr.ndim
        idx[axis] = slice(pad + off, pad + off + n)
        return arr[tuple(idx)]

    for offs, w in _stencils(order, accuracy):
        ok = known.copy()
        for o in offs:
            ok &= sl(kpad, o)
        use = ok & ~done
        if not use.any():
            continue
        acc = np.zeros(values.shape)
        for o, wt in zip(offs, w):
            if wt != 0.0:
                acc += wt * sl(vpad, o)
        acc /= h**order
        ub = _bcast(use, values)
        out = np.where(ub, acc, out)
        done |= use
    return out


def _bcast(mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    extra = values.ndim - mask.ndim
    return mask.reshape(mask.shape + (1,) * extra)


def lagrange_weights(xs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Lagrange basis weights; ``xs`` shape (..., m), ``x`` shape (...)."""
    xs = np.asarray(xs, dtype=float)
    x = np.asarray(x, dtype=float)[..., None]
    m = xs.shape[-1]
    w = np.ones(xs.shape)
    for j in range(m):
        for k in range(m):
            if k != j:
                w[..., j] *= (x[..., 0] - xs[..., k]) / (xs[..., j] - xs[..., k])
    return w
