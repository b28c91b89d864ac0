"""2x2 real matrices used as one-step derivative cocycles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Cocycle2:
    a11: float
    a12: float
    a21: float
    a22: float
    det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "det", self.a11 * self.a22 - self.a12 * self.a21)

    @classmethod
    def from_array(cls, m) -> "Cocycle2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    def __matmul__(self, other: "Cocycle2") -> "Cocycle2":
        return Cocycle2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite([self.a11, self.a12, self.a21, self.a22])))
