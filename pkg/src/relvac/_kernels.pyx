# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Hoelder-quotient suprema and variable-width mollifier.

The pure-Python module ``_kernels_py`` implements the same functions with
identical signatures and is used when this extension is not built.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, fabs

cnp.import_array()


cdef inline Py_ssize_t _clamp(Py_ssize_t j, Py_ssize_t n) nogil:
    if j < 0:
        return 0
    if j >= n:
        return n - 1
    return j


cdef inline double _bump(double s) nogil:
    if s >= 1.0 or s <= -1.0:
        return 0.0
    return exp(-1.0 / (1.0 - s * s))


def holder_sup_all(double[:, ::1] f, double[:, ::1] x, double[::1] rh, double alpha=0.5):
    """max over i < j of |f_i - f_j| / (|x_i - x_j|**alpha + rh_i + rh_j)."""
    cdef Py_ssize_t n = f.shape[0], c = f.shape[1], d = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double best = 0.0, num, dist, t, den
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                num = 0.0
                for k in range(c):
                    t = f[i, k] - f[j, k]
                    num += t * t
                dist = 0.0
                for k in range(d):
                    t = x[i, k] - x[j, k]
                    dist += t * t
                if alpha == 0.5:
                    den = sqrt(sqrt(dist))
                else:
                    den = dist ** (0.5 * alpha)
                den += rh[i] + rh[j]
                if den > 0.0:
                    num = sqrt(num) / den
                    if num > best:
                        best = num
    return best


def holder_sup_pairs(double[:, ::1] f, double[:, ::1] x, double[::1] rh,
                     long[::1] I, long[::1] J, double alpha=0.5):
    """Same quotient maximized over the listed index pairs (I[p], J[p])."""
    cdef Py_ssize_t m = I.shape[0], c = f.shape[1], d = x.shape[1]
    cdef Py_ssize_t p, k, i, j
    cdef double best = 0.0, num, dist, t, den
    with nogil:
        for p in range(m):
            i = I[p]
            j = J[p]
            if i == j:
                continue
            num = 0.0
            for k in range(c):
                t = f[i, k] - f[j, k]
                num += t * t
            dist = 0.0
            for k in range(d):
                t = x[i, k] - x[j, k]
                dist += t * t
            den = dist ** (0.5 * alpha) + rh[i] + rh[j]
            if den > 0.0:
                num = sqrt(num) / den
                if num > best:
                    best = num
    return best


def mollify_1d(double[:, ::1] f, double[::1] width, long[::1] radius, double h):
    """Normalized bump average with node-dependent width and integer radius.

    Nodes with ``radius < 1`` are copied unchanged.  Stencil indices past the
    array ends are clamped to the end nodes.
    """
    cdef Py_ssize_t n = f.shape[0], c = f.shape[1]
    cdef Py_ssize_t i, j, jj, k, m
    cdef double wsum, wt
    out = np.empty((n, c))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            m = radius[i]
            if m < 1:
                for k in range(c):
                    o[i, k] = f[i, k]
                continue
            wsum = 0.0
            for k in range(c):
                o[i, k] = 0.0
            for j in range(i - m, i + m + 1):
                wt = _bump((j - i) * h / width[i])
                wsum += wt
                jj = _clamp(j, n)
                for k in range(c):
                    o[i, k] += wt * f[jj, k]
            for k in range(c):
                o[i, k] /= wsum
    return out


def mollify_2d(double[:, :, ::1] f, double[:, ::1] width, long[:, ::1] radius, double h):
    """Two-dimensional radial version of :func:`mollify_1d`."""
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], c = f.shape[2]
    cdef Py_ssize_t i, j, a, b, aa, bb, k, m
    cdef double wsum, wt, s
    out = np.empty((nx, ny, c))
    cdef double[:, :, ::1] o = out
    with nogil:
        for i in range(nx):
            for j in range(ny):
                m = radius[i, j]
                if m < 1:
                    for k in range(c):
                        o[i, j, k] = f[i, j, k]
                    continue
                wsum = 0.0
                for k in range(c):
                    o[i, j, k] = 0.0
                for a in range(i - m, i + m + 1):
                    for b in range(j - m, j + m + 1):
                        s = sqrt(<double>((a - i) * (a - i) + (b - j) * (b - j))) * h / width[i, j]
                        wt = _bump(s)
                        if wt == 0.0:
                            continue
                        wsum += wt
                        aa = _clamp(a, nx)
                        bb = _clamp(b, ny)
                        for k in range(c):
                            o[i, j, k] += wt * f[aa, bb, k]
                for k in range(c):
                    o[i, j, k] /= wsum
    return out
