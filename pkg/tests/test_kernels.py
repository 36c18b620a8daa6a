"""Compiled and pure-Python kernels agree; fallback selection works."""

from __future__ import annotations

import importlib
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relvac import kernels

BACKENDS = kernels.available_backends()


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_compiled_backend_built():
    # the package ships a build script; an installed checkout carries the extension
    assert "cython" in BACKENDS


def test_forced_fallback():
    out = subprocess.run([sys.executable, "-c", "from relvac import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env={"RELVAC_PURE_PYTHON": "1",
                                                              "PATH": "/usr/bin:/bin"})
    assert out.stdout.strip() == "python"


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 60), alpha=st.sampled_from([0.5, 1.0]))
def test_holder_backends_agree(seed, n, alpha):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(n, 2))
    x = np.sort(rng.uniform(0, 1, n))
    rh = rng.uniform(0, 0.1, n)
    vals = [kernels.holder_sup(f, x, rh, alpha=alpha, backend=b) for b in BACKENDS]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-13)
    I = rng.integers(0, n, 30)
    J = rng.integers(0, n, 30)
    vals = [kernels.holder_sup(f, x, rh, pairs=(I, J), alpha=alpha, backend=b) for b in BACKENDS]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-13)


def test_holder_oracle():
    x = np.array([0.0, 0.25, 1.0])
    f = np.array([0.0, 1.0, 1.0])
    for b in BACKENDS:
        assert kernels.holder_sup(f, x, backend=b) == pytest.approx(1.0 / 0.5)


@pytest.mark.parametrize("dim", [1, 2])
def test_mollify_backends_agree(dim, rng):
    shape = (80,) if dim == 1 else (40, 40)
    vals = rng.normal(size=shape + (2,))
    width = rng.uniform(0.02, 0.1, shape)
    h = 0.01
    radius = np.floor(width / h).astype(np.int64)
    radius[(0,) * dim] = 0
    outs = [kernels.mollify(vals, width, radius, h, backend=b) for b in BACKENDS]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
def test_mollify_preserves_linear_functions(backend):
    x = np.linspace(0, 1, 101)
    h = x[1] - x[0]
    width = np.full(x.shape, 0.05)
    radius = np.full(x.shape, 5, dtype=np.int64)
    radius[:5] = 0
    radius[-5:] = 0
    out = kernels.mollify(3 * x + 1, width, radius, h, backend=backend)
    np.testing.assert_allclose(out[5:-5], (3 * x + 1)[5:-5], atol=1e-12)
    np.testing.assert_allclose(out[:5], (3 * x + 1)[:5])


def test_fallback_module_importable():
    mod = importlib.import_module("relvac._kernels_py")
    assert hasattr(mod, "mollify_1d") and hasattr(mod, "holder_sup_all")
