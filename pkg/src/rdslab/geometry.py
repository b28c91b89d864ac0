"""Constant-curvature surfaces and convex billiard tables on them.

Surface models: the plane (K = 0, points are 2-vectors), the unit sphere in
R^3 (K = +1) and the upper sheet of the hyperboloid <x, x> = -1 in
Minkowski space R^{2,1} (K = -1). Internally the kernels embed plane points
as (x, y, 0) so a single bilinear form diag(1, 1, K) serves all three.

Tables are boundary curves given in closed form in a curve parameter u and
reparametrized by normalized arc length s in [0, 1). The physical perimeter
is kept in :attr:`Table.length`; curvature is the geodesic curvature with
respect to physical arc length.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from rdslab import kernels
from rdslab.errors import NonConvexSpec, UnsupportedCombination

N_KNOTS = 4096
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class SurfaceKind(enum.IntEnum):
    """Sign of the (unit-modulus) Gaussian curvature."""

    HYPERBOLIC = -1
    EUCLIDEAN = 0
    SPHERICAL = 1

    @classmethod
    def parse(cls, value) -> "SurfaceKind":
        if isinstance(value, str):
            aliases = {"e2": 0, "euclidean": 0, "plane": 0, "s2": 1, "sphere": 1,
                       "spherical": 1, "h2": -1, "hyperbolic": -1}
            try:
                return cls(aliases[value.strip().lower()])
            except KeyError:
                pass
        return cls(int(value))


@dataclass(frozen=True)
class Disk:
    """Geodesic disk of the given geodesic radius."""

    radius: float


@dataclass(frozen=True)
class Ellipse:
    """Euclidean ellipse with semi-axes a >= b > 0."""

    a: float
    b: float


@dataclass(frozen=True)
class PerturbedDisk:
    """Boundary rho(phi) = radius * (1 + amplitude * cos(mode * phi)) in geodesic polar coordinates."""

    radius: float
    amplitude: float
    mode: int = 3


TableSpec = Union[Disk, Ellipse, PerturbedDisk]


class Table:
    """Arc-length parametrized strictly convex table. Immutable after construction."""

    def __init__(self, spec: TableSpec, surface: SurfaceKind, length: float, kernel):
        self.spec = spec
        self.surface = SurfaceKind(surface)
        self.length = float(length)
        self.kernel = kernel

    def __repr__(self):
        return f"Table({self.spec!r}, {self.surface.name}, length={self.length:.12g})"

    def _model(self, v):
        v = np.asarray(v, dtype=float)
        return v[:2] if self.surface == SurfaceKind.EUCLIDEAN else v

    def position(self, s: float) -> np.ndarray:
        return self._model(self.kernel.chart(s)[0])

    def tangent(self, s: float) -> np.ndarray:
        """Unit tangent (physical arc length) in the positive direction."""
        return self._model(self.kernel.chart(s)[1])

    def normal(self, s: float) -> np.ndarray:
        """Inward unit normal, tangent to the surface."""
        return self._model(self.kernel.chart(s)[2])

    def curvature(self, s: float) -> float:
        return self.kernel.chart(s)[3]

    def curvatures(self, n: int = N_KNOTS) -> np.ndarray:
        return np.array([self.kernel.chart(k / n)[3] for k in range(n)])


def _curve_speed(surface: int, spec: TableSpec, u: np.ndarray) -> np.ndarray:
    """|dX/du| for the closed-form chart, u = phi / (2 pi)."""
    phi = 2.0 * np.pi * u
    if isinstance(spec, Ellipse):
        return 2.0 * np.pi * np.hypot(spec.a * np.sin(phi), spec.b * np.cos(phi))
    eps = spec.amplitude if isinstance(spec, PerturbedDisk) else 0.0
    m = spec.mode if isinstance(spec, PerturbedDisk) else 0
    rho = spec.radius * (1.0 + eps * np.cos(m * phi))
    drho = -spec.radius * eps * m * np.sin(m * phi)
    if surface == 0:
        S = rho
    elif surface == 1:
        S = np.sin(rho)
    else:
        S = np.sinh(rho)
    # geodesic polar metric: d rho^2 + S(rho)^2 d phi^2
    return 2.0 * np.pi * np.sqrt(drho**2 + S**2)


def _cumulative_length(surface, spec, n):
    u = np.arange(n + 1) / n
    lo, hi = u[:-1], u[1:]
    half = 0.5 * (hi - lo)
    nodes = (lo + half)[:, None] + half[:, None] * _GL_NODES[None, :]
    panel = half * (_curve_speed(surface, spec, nodes) @ _GL_WEIGHTS)
    return u, np.concatenate([[0.0], np.cumsum(panel)])


def _partial_length(surface, spec, u0, u):
    half = 0.5 * (u - u0)
    nodes = (u0 + half)[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (_curve_speed(surface, spec, nodes) @ _GL_WEIGHTS)


def _arclength_knots(surface, spec, n=N_KNOTS):
    """u(s_k) and du/ds(s_k) on the uniform grid s_k = k / n."""
    u_grid, cum = _cumulative_length(surface, spec, n)
    length = cum[-1]
    target = np.arange(n + 1) / n * length
    u = np.interp(target, cum, u_grid)
    for _ in range(6):
        j = np.clip(np.searchsorted(u_grid, u, side="right") - 1, 0, n - 1)
        sigma = cum[j] + _partial_length(surface, spec, u_grid[j], u)
        u = u - (sigma - target) / _curve_speed(surface, spec, u)
    u[0], u[-1] = 0.0, 1.0
    du = length / _curve_speed(surface, spec, u)
    return length, u, du


def _validate(spec, surface):
    if isinstance(spec, Ellipse):
        if surface != SurfaceKind.EUCLIDEAN:
            raise UnsupportedCombination("Ellipse tables are only defined on the Euclidean plane")
        if not (spec.a >= spec.b > 0):
            raise ValueError(f"Ellipse needs a >= b > 0, got a={spec.a}, b={spec.b}")
        return
    if not spec.radius > 0:
        raise ValueError(f"radius must be positive, got {spec.radius}")
    rmax = spec.radius
    if isinstance(spec, PerturbedDisk):
        if spec.amplitude < 0 or spec.amplitude >= 1:
            raise ValueError(f"amplitude must lie in [0, 1), got {spec.amplitude}")
        if int(spec.mode) != spec.mode or spec.mode < 2:
            raise ValueError(f"mode must be an integer >= 2, got {spec.mode}")
        rmax = spec.radius * (1 + spec.amplitude)
    if surface == SurfaceKind.SPHERICAL and rmax >= math.pi / 2:
        raise NonConvexSpec(f"spherical tables need geodesic radius < pi/2, got {rmax}")


def build_table(spec: TableSpec, surface=SurfaceKind.EUCLIDEAN) -> Table:
    """Construct a unit-perimeter (normalized) table; raises NonConvexSpec if kappa <= 0 anywhere."""
    surface = SurfaceKind.parse(surface)
    _validate(spec, surface)
    length, u, du = _arclength_knots(int(surface), spec)
    if isinstance(spec, Ellipse):
        shape, params = kernels.SHAPE_ELLIPSE, (spec.a, spec.b, 0.0)
    elif isinstance(spec, PerturbedDisk):
        shape, params = kernels.SHAPE_POLAR, (spec.radius, spec.amplitude, float(spec.mode))
    else:
        shape, params = kernels.SHAPE_POLAR, (spec.radius, 0.0, 0.0)
    kernel = kernels.BilliardKernel(int(surface), shape, *params, length, u, du)
    table = Table(spec, surface, length, kernel)
    kappa = table.curvatures(N_KNOTS)
    if not np.all(kappa > 0):
        bad = int(np.argmin(kappa))
        raise NonConvexSpec(f"{spec!r} has curvature {kappa[bad]:.3g} <= 0 at s={bad / N_KNOTS}")
    return table


def curvature_fd(table: Table, s: float, h: float = 1e-4) -> float:
    """Geodesic curvature from 5-point central differences of the chart in s."""
    pts = [np.asarray(table.kernel.chart(s + k * h)[0]) for k in (-2, -1, 0, 1, 2)]
    d1 = (pts[0] - 8 * pts[1] + 8 * pts[3] - pts[4]) / (12 * h)
    d2 = (-pts[0] + 16 * pts[1] - 30 * pts[2] + 16 * pts[3] - pts[4]) / (12 * h * h)
    N = np.asarray(table.kernel.chart(s)[2])
    g = np.array([1.0, 1.0, float(table.surface)])
    return float(np.sum(g * d2 * N) / np.sum(g * d1 * d1))


def chart_speed_fd(table: Table, s: float, h: float = 1e-5) -> float:
    """|dX/ds| / length by central differences; 1 for an arc-length chart."""
    a = np.asarray(table.kernel.chart(s - h)[0])
    b = np.asarray(table.kernel.chart(s + h)[0])
    d = (b - a) / (2 * h)
    g = np.array([1.0, 1.0, float(table.surface)])
    return float(np.sqrt(np.sum(g * d * d))) / table.length


# -- geodesic primitives ----------------------------------------------------
def _minkowski(a, b):
    return a[0] * b[0] + a[1] * b[1] - a[2] * b[2]


def geodesic_step(surface, point, direction, t: float):
    """Transport (point, unit direction) a geodesic distance t."""
    surface = SurfaceKind.parse(surface)
    p = np.asarray(point, dtype=float)
    v = np.asarray(direction, dtype=float)
    if surface == SurfaceKind.EUCLIDEAN:
        return p + t * v, v.copy()
    if surface == SurfaceKind.SPHERICAL:
        q = math.cos(t) * p + math.sin(t) * v
        w = -math.sin(t) * p + math.cos(t) * v
        q /= np.linalg.norm(q)
        w -= np.dot(w, q) * q
        return q, w / np.linalg.norm(w)
    q = math.cosh(t) * p + math.sinh(t) * v
    w = math.sinh(t) * p + math.cosh(t) * v
    q /= math.sqrt(-_minkowski(q, q))
    w += _minkowski(w, q) * q
    return q, w / math.sqrt(_minkowski(w, w))


def geodesic_distance(surface, p, q) -> float:
    surface = SurfaceKind.parse(surface)
    w = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    if surface == SurfaceKind.EUCLIDEAN:
        return float(np.linalg.norm(w))
    if surface == SurfaceKind.SPHERICAL:
        return 2.0 * math.asin(min(0.5 * float(np.linalg.norm(w)), 1.0))
    return 2.0 * math.asinh(0.5 * math.sqrt(max(_minkowski(w, w), 0.0)))
