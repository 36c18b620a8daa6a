"""Compiled versus pure-Python kernels on representative problem sizes.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and size with the best wall time of each backend
and the speed-up.  Outputs of the two backends are checked for agreement
before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from relvac import kernels


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(rng):
    for n in (512, 2048):
        x = np.linspace(-1, 1, n)
        f = np.cos(3 * x)[:, None] + 0.01 * rng.normal(size=(n, 1))
        rh = np.sqrt(np.maximum(1 - x * x, 0.0))
        yield (f"holder_sup all pairs n={n}",
               lambda b, f=f, x=x, rh=rh: kernels.holder_sup(f, x, rh, backend=b))
    for n in (1024, 8192):
        x = np.linspace(-1.5, 1.5, n)
        h = x[1] - x[0]
        vals = np.stack([np.maximum(1 - x * x, 0), x], axis=-1)
        width = np.full(n, 12 * h)
        radius = np.full(n, 12, dtype=np.int64)
        radius[:12] = radius[-12:] = 0
        yield (f"mollify 1d n={n} radius=12",
               lambda b, v=vals, w=width, r=radius, h=h: kernels.mollify(v, w, r, h, backend=b))
    n = 128
    ax = np.linspace(-1.5, 1.5, n)
    h = ax[1] - ax[0]
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    vals = np.stack([np.maximum(1 - X * X - Y * Y, 0), X, Y], axis=-1)
    width = np.full((n, n), 4 * h)
    radius = np.full((n, n), 4, dtype=np.int64)
    radius[:4] = radius[-4:] = 0
    radius[:, :4] = radius[:, -4:] = 0
    yield (f"mollify 2d n={n}x{n} radius=4",
           lambda b, v=vals, w=width, r=radius, h=h: kernels.mollify(v, w, r, h, backend=b))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} " + " ".join(f"{b:>12s}" for b in backends) + "   speed-up")
    for name, fn in _cases(rng):
        outs = [np.asarray(fn(b)) for b in backends]
        for o in outs[1:]:
            np.testing.assert_allclose(o, outs[0], rtol=1e-12, atol=1e-13)
        times = [_best(lambda b=b: fn(b), args.repeat) for b in backends]
        speed = f"{times[0] / times[-1]:9.1f}x" if len(times) > 1 else ""
        print(f"{name:40s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + f"  {speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
