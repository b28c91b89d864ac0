"""Billiard map of a convex table in (s, theta), (s, r) and torus coordinates.

Angles follow the usual convention: theta in [0, pi] is measured from the
positively oriented tangent, r = -cos(theta). Derivatives returned by
:func:`dphi` and :func:`dPhi` are in physical arc length; :func:`torus_map`
works in normalized arc length s in [0, 1) and r in [-1, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from rdslab.cocycle import Cocycle2
from rdslab.errors import DegenerateAngle
from rdslab.geometry import Table
from rdslab.kernels import GRAZING

__all__ = [
    "CollisionState", "CollisionResult", "Cocycle2", "collide", "dphi", "dPhi",
    "torus_map", "torus_derivative", "is_grazing",
]


@dataclass(frozen=True)
class CollisionState:
    s: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "s", self.s - math.floor(self.s))
        if self.s >= 1.0:
            object.__setattr__(self, "s", 0.0)

    @property
    def r(self) -> float:
        return -math.cos(self.theta)

    @classmethod
    def from_sr(cls, s: float, r: float) -> "CollisionState":
        return cls(s, math.acos(max(-1.0, min(1.0, -r))))


@dataclass(frozen=True)
class CollisionResult:
    next: CollisionState
    flight: float


def is_grazing(theta: float) -> bool:
    return theta < GRAZING or theta > math.pi - GRAZING


def collide(table: Table, state: CollisionState) -> CollisionResult:
    """First boundary hit of the geodesic leaving ``state``; grazing states are fixed."""
    s1, theta1, t = table.kernel.collide(state.s, state.theta)
    return CollisionResult(CollisionState(s1, min(max(theta1, 0.0), math.pi)), t)


def dphi(table: Table, state: CollisionState, result: CollisionResult | None = None) -> Cocycle2:
    """Derivative of phi(s, theta); the grazing limit [[1, 2/kappa], [0, 1]] at theta in {0, pi}."""
    if result is None:
        result = collide(table, state)
    nxt = result.next
    return Cocycle2(*table.kernel.dphi(state.s, state.theta, nxt.s, nxt.theta, result.flight))


def dPhi(table: Table, state: CollisionState, result: CollisionResult | None = None) -> Cocycle2:
    """Derivative of Phi(s, r) = h o phi o h^-1 with h(s, theta) = (s, -cos theta); det = 1."""
    if is_grazing(state.theta):
        raise DegenerateAngle(f"dPhi is undefined on the boundary circle (theta={state.theta!r})")
    if result is None:
        result = collide(table, state)
    m = dphi(table, state, result)
    st = math.sin(state.theta)
    st1 = math.sin(result.next.theta)
    return Cocycle2(m.a11, m.a12 / st, m.a21 * st1, m.a22 * st1 / st)


def torus_map(table: Table, y) -> tuple[float, float]:
    """T on R/Z x R/2Z with fundamental domain [0, 1) x [-1, 1)."""
    z = table.kernel.step(*_reduce(y))
    return z[0], z[1]


def torus_derivative(table: Table, y) -> Cocycle2:
    """DT at y in normalized coordinates; the identity on the boundary circle r = -1."""
    z = table.kernel.step(*_reduce(y))
    return Cocycle2(z[2], z[3], z[4], z[5])


def _reduce(y):
    s = y[0] - math.floor(y[0])
    r = y[1] - 2.0 * math.floor((y[1] + 1.0) / 2.0)
    if r >= 1.0:
        r -= 2.0
    return s, r
