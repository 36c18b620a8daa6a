"""Pure-numpy implementations of the compiled kernels.

Signatures and results match ``_kernels.pyx``; the loops are vectorized
over one index so the cost stays acceptable for the grid sizes used in
tests (a few thousand nodes).
"""

from __future__ import annotations

import numpy as np


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def holder_sup_all(f, x, rh, alpha: float = 0.5) -> float:
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    rh = np.asarray(rh, dtype=float)
    n = f.shape[0]
    best = 0.0
    for k in range(1, n):
        num = np.sqrt(np.sum((f[k:] - f[:-k]) ** 2, axis=1))
        dist = np.sqrt(np.sum((x[k:] - x[:-k]) ** 2, axis=1))
        den = dist**alpha + rh[k:] + rh[:-k]
        q = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        if q.size:
            best = max(best, float(q.max()))
    return best


def holder_sup_pairs(f, x, rh, I, J, alpha: float = 0.5) -> float:
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    rh = np.asarray(rh, dtype=float)
    I = np.asarray(I)
    J = np.asarray(J)
    keep = I != J
    I, J = I[keep], J[keep]
    if I.size == 0:
        return 0.0
    num = np.sqrt(np.sum((f[I] - f[J]) ** 2, axis=1))
    dist = np.sqrt(np.sum((x[I] - x[J]) ** 2, axis=1))
    den = dist**alpha + rh[I] + rh[J]
    q = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(q.max())


def mollify_1d(f, width, radius, h: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    width = np.asarray(width, dtype=float)
    radius = np.asarray(radius)
    n, c = f.shape
    out = f.copy()
    active = radius >= 1
    if not active.any():
        return out
    M = int(radius.max())
    idx = np.nonzero(active)[0]
    acc = np.zeros((idx.size, c))
    wsum = np.zeros(idx.size)
    for k in range(-M, M + 1):
        use = np.abs(k) <= radius[idx]
        wt = np.where(use, _bump(k * h / width[idx]), 0.0)
        j = np.clip(idx + k, 0, n - 1)
        acc += wt[:, None] * f[j]
        wsum += wt
    out[idx] = acc / wsum[:, None]
    return out


def mollify_2d(f, width, radius, h: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    width = np.asarray(width, dtype=float)
    radius = np.asarray(radius)
    nx, ny, c = f.shape
    out = f.copy()
    active = radius >= 1
    if not active.any():
        return out
    M = int(radius.max())
    ii, jj = np.nonzero(active)
    acc = np.zeros((ii.size, c))
    wsum = np.zeros(ii.size)
    rad = radius[ii, jj]
    wid = width[ii, jj]
    for a in range(-M, M + 1):
        for b in range(-M, M + 1):
            use = (np.abs(a) <= rad) & (np.abs(b) <= rad)
            wt = np.where(use, _bump(np.hypot(a, b) * h / wid), 0.0)
            ia = np.clip(ii + a, 0, nx - 1)
            jb = np.clip(jj + b, 0, ny - 1)
            acc += wt[:, None] * f[ia, jb]
            wsum += wt
    out[ii, jj] = acc / wsum[:, None]
    return out
