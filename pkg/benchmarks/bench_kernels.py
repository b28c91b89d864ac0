"""Compiled vs pure-Python kernels: steps per second of the QR accumulator.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeat R]

Both backends drive identical kernels (same table knots, same kick
coefficients) with the same noise block, so the timings compare like with
like. The Python backend runs a shorter prefix of that block (--python-steps).
"""
import argparse
import math
import time

import numpy as np

from rdslab import _pykernels
from rdslab.geometry import Disk, Ellipse, PerturbedDisk, SurfaceKind, build_table
from rdslab.noise import NoiseSampler, RngStream, UniformBall

try:
    from rdslab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases():
    tables = {
        "billiard disk E2": (Disk(1 / (2 * math.pi)), SurfaceKind.EUCLIDEAN),
        "billiard ellipse E2": (Ellipse(1.5, 1.0), SurfaceKind.EUCLIDEAN),
        "billiard pdisk H2": (PerturbedDisk(1.0, 0.1, 3), SurfaceKind.HYPERBOLIC),
    }
    out = {"standard map K=1": ("KickKernel", (0.0, [0.0], [1.0], 1))}
    for name, (spec, surface) in tables.items():
        kernel = build_table(spec, surface).kernel
        if not isinstance(kernel, _ckernels.StepKernel):
            raise SystemExit("unset RDSLAB_PURE_PYTHON: tables must be built by the compiled backend")
        # the pickle arguments carry the arclength knots, so both backends get the same table
        _, args = kernel.__reduce__()
        out[name] = ("BilliardKernel", args)
    return out


def time_accumulate(mod, cls_name, args, noise, repeat):
    kernel = getattr(mod, cls_name)(*args)
    best = math.inf
    for _ in range(repeat):
        y = np.array([0.3, 0.1])
        Q = np.array([1.0, 0.0, 0.0, 1.0])
        t0 = time.perf_counter()
        mod.accumulate(kernel, y, Q, noise, 8)
        best = min(best, time.perf_counter() - t0)
    return noise.shape[0] / best


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--python-steps", type=int, default=20_000,
                   help="steps for the pure-Python backend")
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    noise = NoiseSampler(UniformBall(0.05), RngStream(0)).draw(a.steps)
    print(f"{'case':24s} {'cython steps/s':>16s} {'python steps/s':>16s} {'speedup':>9s}")
    for name, (cls_name, args) in cases().items():
        fast = time_accumulate(_ckernels, cls_name, args, noise, a.repeat)
        slow = time_accumulate(_pykernels, cls_name, args, noise[:a.python_steps], a.repeat)
        print(f"{name:24s} {fast:16.3e} {slow:16.3e} {fast / slow:9.1f}")


if __name__ == "__main__":
    main()
