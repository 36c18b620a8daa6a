"""Backend selection for the hot loops.

The compiled extension ``relvac._kernels`` is used when it can be imported;
otherwise the numpy fallback ``relvac._kernels_py`` takes over.  Setting
the environment variable ``RELVAC_PURE_PYTHON=1`` forces the fallback.
``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import _kernels_py

logger = logging.getLogger(__name__)

_compiled = None
if os.environ.get("RELVAC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        logger.debug("compiled kernels unavailable, using the numpy fallback")
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ("cython", "python") or the default."""
    if name is None:
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernel extension is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def _c2(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return np.ascontiguousarray(a.reshape(a.shape[0], -1))


def holder_sup(f, x, rh=None, pairs=None, alpha: float = 0.5, backend: str | None = None) -> float:
    """Supremum of ``|f_i - f_j| / (|x_i - x_j|**alpha + rh_i + rh_j)``.

    ``pairs`` is ``None`` for all pairs or a tuple of index arrays ``(I, J)``.
    """
    mod = get_backend(backend)
    f2 = _c2(f)
    x2 = _c2(x)
    n = f2.shape[0]
    rh = np.zeros(n) if rh is None else np.ascontiguousarray(rh, dtype=float)
    if n < 2:
        return 0.0
    if pairs is None:
        return float(mod.holder_sup_all(f2, x2, rh, alpha))
    I = np.ascontiguousarray(pairs[0], dtype=np.int64)
    J = np.ascontiguousarray(pairs[1], dtype=np.int64)
    return float(mod.holder_sup_pairs(f2, x2, rh, I, J, alpha))


def mollify(values, width, radius, h: float, backend: str | None = None) -> np.ndarray:
    """Variable-width normalized bump average on a 1-d or 2-d node array.

    ``values`` has shape ``grid.shape`` or ``grid.shape + (c,)``; ``width``
    and ``radius`` have ``grid.shape``.  The caller guarantees every node
    within ``radius`` of an active node holds finite data.
    """
    mod = get_backend(backend)
    values = np.asarray(values, dtype=float)
    width = np.ascontiguousarray(width, dtype=float)
    radius = np.ascontiguousarray(radius, dtype=np.int64)
    dim = width.ndim
    shape = values.shape
    flat = np.ascontiguousarray(values.reshape(width.shape + (-1,)))
    flat = np.where(np.isfinite(flat), flat, 0.0)
    if dim == 1:
        out = mod.mollify_1d(np.ascontiguousarray(flat), width, radius, float(h))
    else:
        out = mod.mollify_2d(np.ascontiguousarray(flat), width, radius, float(h))
    out = np.asarray(out).reshape(shape)
    return np.where(np.isfinite(values), out, values)
