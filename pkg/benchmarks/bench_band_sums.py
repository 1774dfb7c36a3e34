"""Time the numba and numpy band-sum kernels on a realistic node set.

    python benchmarks/bench_band_sums.py [--t 200] [--nx 401] [--repeat 3]

The first numba call includes JIT compilation (or a cache load) and is
reported separately.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from dislocated_dirac import _kernels
from dislocated_dirac.decay import DatumSpec
from dislocated_dirac.propagator import Propagator


def _timed(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=math.pi)
    ap.add_argument("--t", type=float, default=200.0)
    ap.add_argument("--nx", type=int, default=401)
    ap.add_argument("--window", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    prop = Propagator(DatumSpec().field(), args.tau)
    xs = np.linspace(-args.window, args.window, args.nx)
    nodes, (pl, ql, pr, qr), _ = prop.pos.node_arrays(args.t, args.window)
    call = (nodes.k, nodes.wk, nodes.wg, nodes.band, nodes.frac, pl, ql, pr, qr)
    print(f"nodes={nodes.k.size} points={xs.size} pairs={nodes.k.size * xs.size:.3e}")

    results = {}
    for which in ("numba", "numpy"):
        if which == "numba" and not _kernels.HAVE_NUMBA:
            print("numba: not installed")
            continue
        if which == "numba":
            t0 = time.perf_counter()
            _kernels.band_sums(*call, xs, nodes.nbands, which=which)
            _kernels.band_sums(*call, xs[::7], nodes.nbands, which=which)
            print(f"numba: first calls (compile or cache load) {time.perf_counter() - t0:.2f} s")
        for label, pts in (("uniform", xs), ("scattered", np.sort(xs + 1e-3 * np.sin(7 * xs)))):
            sec, out = _timed(lambda p=pts: _kernels.band_sums(*call, p, nodes.nbands, which=which),
                              args.repeat)
            results[(which, label)] = out
            ns = 1e9 * sec / (nodes.k.size * pts.size)
            print(f"{which:6s} {label:9s} {sec:8.3f} s  {ns:6.1f} ns/pair")

    for label in ("uniform", "scattered"):
        a, b = results.get(("numba", label)), results.get(("numpy", label))
        if a is not None and b is not None:
            scale = np.abs(b[0]).max()
            print(f"max |numba - numpy| / max |value| ({label}): {np.abs(a[0] - b[0]).max() / scale:.2e}")


if __name__ == "__main__":
    main()
