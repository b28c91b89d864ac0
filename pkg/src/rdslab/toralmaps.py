"""Standard map g_K, the kicked family G_V, and torus arithmetic.

G_V(y1, y2) = (y1 + y2 + V(y1), y2 + V(y1)) mod 1; the standard map is
V(y) = K sin(2 pi y).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from rdslab import kernels
from rdslab.cocycle import Cocycle2

TWO_PI = 2.0 * math.pi


def wrap(y: Sequence[float], periods: Sequence[float] = (1.0, 1.0),
         lows: Sequence[float] = (0.0, 0.0)) -> tuple[float, float]:
    """Reduce a point into the fundamental domain prod [low, low + period)."""
    out = []
    for v, p, lo in zip(y, periods, lows):
        w = v - p * math.floor((v - lo) / p)
        if w >= lo + p:
            w -= p
        out.append(w)
    return out[0], out[1]


def torus_delta(a: float, b: float, period: float = 1.0) -> float:
    """Signed difference a - b reduced to [-period/2, period/2)."""
    d = (a - b) / period
    return period * (d - math.floor(d + 0.5))


def torus_close(p, q, tol: float = 1e-12, periods=(1.0, 1.0)) -> bool:
    return all(abs(torus_delta(a, b, per)) <= tol for a, b, per in zip(p, q, periods))


@dataclass(frozen=True)
class KickFunction:
    """Periodic kick V with its derivative.

    Trigonometric kicks ``v0 + sum_k cos_k cos(2 pi k y) + sin_k sin(2 pi k y)``
    also drive the compiled kernels; arbitrary callables run on the Python path.
    """

    V: Callable[[float], float]
    dV: Callable[[float], float]
    name: str = "custom"
    trig: tuple | None = field(default=None, compare=False)

    @classmethod
    def trigonometric(cls, v0=0.0, cos_coeffs=(), sin_coeffs=(), name="trig"):
        n = max(len(cos_coeffs), len(sin_coeffs))
        a = tuple(float(v) for v in cos_coeffs) + (0.0,) * (n - len(cos_coeffs))
        b = tuple(float(v) for v in sin_coeffs) + (0.0,) * (n - len(sin_coeffs))

        def V(y):
            return v0 + sum(a[k] * math.cos(TWO_PI * (k + 1) * y)
                            + b[k] * math.sin(TWO_PI * (k + 1) * y) for k in range(n))

        def dV(y):
            return sum(TWO_PI * (k + 1) * (b[k] * math.cos(TWO_PI * (k + 1) * y)
                                           - a[k] * math.sin(TWO_PI * (k + 1) * y))
                       for k in range(n))

        return cls(V, dV, name, (float(v0), a, b))

    @classmethod
    def standard(cls, K: float) -> "KickFunction":
        return cls.trigonometric(0.0, (0.0,), (float(K),), name=f"standard(K={K:g})")

    @classmethod
    def constant(cls, c: float) -> "KickFunction":
        return cls.trigonometric(float(c), (), (), name=f"constant({c:g})")

    def kernel(self, iterations: int = 1):
        """Step kernel for G_V composed ``iterations`` times."""
        if self.trig is None:
            return _CallableKick(self, iterations)
        v0, a, b = self.trig
        return kernels.KickKernel(v0, list(a), list(b), iterations)


class _CallableKick:
    """Python-only kernel for kicks given as arbitrary callables."""

    lo2 = 0.0
    len2 = 1.0

    def __init__(self, kick: KickFunction, iterations: int):
        self.kick = kick
        self.iterations = iterations

    def step(self, y0, y1):
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
        for _ in range(self.iterations):
            v = self.kick.V(y0)
            dv = self.kick.dV(y0)
            a, b, c, d = a + dv * a + c, b + dv * b + d, dv * a + c, dv * b + d
            y0, y1 = wrap((y0 + y1 + v, y1 + v))
        return y0, y1, a, b, c, d


def gv_map(V: KickFunction, y) -> tuple[float, float]:
    v = V.V(y[0])
    return wrap((y[0] + y[1] + v, y[1] + v))


def gv_derivative(V: KickFunction, y) -> Cocycle2:
    dv = V.dV(y[0])
    return Cocycle2(1.0 + dv, 1.0, dv, 1.0)


def standard_map(K: float, y) -> tuple[float, float]:
    kick = K * math.sin(TWO_PI * y[0])
    return wrap((y[0] + y[1] + kick, y[1] + kick))


def standard_derivative(K: float, y) -> Cocycle2:
    c = TWO_PI * K * math.cos(TWO_PI * y[0])
    return Cocycle2(1.0 + c, 1.0, c, 1.0)


def translate(y, x) -> tuple[float, float]:
    return wrap((y[0] + x[0], y[1] + x[1]))


def swap(x) -> tuple[float, float]:
    """The coordinate swap I(y1, y2) = (y2, y1)."""
    return x[1], x[0]


def pair_translation(x, xp) -> tuple[float, float]:
    """x + x' + I x: the single translation equivalent to two vertical kicks."""
    return wrap((x[0] + xp[0] + x[1], x[1] + xp[1] + x[0]))


def two_step_reduction(K: float, a: float, b: float, y):
    """Both sides of f_(0,b) o f_(0,a) = tau_(a, a+b) o g_K^2 evaluated at y."""
    lhs = translate(standard_map(K, translate(standard_map(K, y), (0.0, a))), (0.0, b))
    g2 = standard_map(K, standard_map(K, y))
    rhs = translate(g2, (a, a + b))
    return lhs, rhs


def trace_g2(K: float, y) -> float:
    """Closed-form trace of D(g_K^2) at y."""
    c0 = math.cos(TWO_PI * y[0])
    c1 = math.cos(TWO_PI * (y[0] + y[1] + K * math.sin(TWO_PI * y[0])))
    w = TWO_PI * K
    return 2.0 + 2.0 * w * c0 + 2.0 * w * c1 + w * w * c0 * c1
