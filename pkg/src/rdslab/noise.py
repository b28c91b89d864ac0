"""Driving noise: i.i.d. torus translations drawn from a law nu.

Random streams are numpy ``Philox`` generators keyed by (seed, worker
index) through ``SeedSequence``, so a given seed yields the same samples on
every platform and worker streams are independent.

Samplers buffer their output, which makes the sequence of translations
independent of how callers chunk their requests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

_BLOCK = 4096


@dataclass(frozen=True)
class UniformBall:
    """Uniform law on the closed epsilon-ball (flat metric)."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class WrappedGaussian:
    """Isotropic Gaussian truncated at 6 sigma, wrapped onto the torus."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SingularVertical:
    """Law on {0} x [-epsilon, epsilon], absolutely continuous in the second coordinate."""

    epsilon: float
    density: str = "uniform"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.density not in ("uniform", "triangular"):
            raise ValueError(f"unknown density {self.density!r}")


@dataclass(frozen=True)
class Degenerate:
    """Point mass at the origin (deterministic baseline)."""


NoiseModel = Union[UniformBall, WrappedGaussian, SingularVertical, Degenerate]


class RngStream:
    """Deterministic counter-based random stream for one worker."""

    def __init__(self, seed: int, worker: int = 0):
        self.seed = int(seed)
        self.worker = int(worker)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.worker,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, worker={self.worker})"

    def split(self, worker: int) -> "RngStream":
        """Independent stream for ``worker``, derived from the same seed."""
        return RngStream(self.seed, worker)


class NoiseSampler:
    """Buffered sampler for one model on one stream."""

    def __init__(self, model: NoiseModel, rng: RngStream):
        self.model = model
        self.rng = rng
        self._buf = np.empty((0, 2))

    def _block(self) -> np.ndarray:
        g = self.rng.generator
        m = self.model
        if isinstance(m, UniformBall):
            cand = g.uniform(-m.epsilon, m.epsilon, size=(_BLOCK, 2))
            return cand[np.einsum("ij,ij->i", cand, cand) <= m.epsilon**2]
        if isinstance(m, WrappedGaussian):
            cand = g.normal(0.0, m.sigma, size=(_BLOCK, 2))
            return cand[np.all(np.abs(cand) <= 6.0 * m.sigma, axis=1)]
        if isinstance(m, SingularVertical):
            out = np.zeros((_BLOCK, 2))
            if m.density == "uniform":
                out[:, 1] = g.uniform(-m.epsilon, m.epsilon, size=_BLOCK)
            else:
                out[:, 1] = g.triangular(-m.epsilon, 0.0, m.epsilon, size=_BLOCK)
            return out
        if isinstance(m, Degenerate):
            return np.zeros((_BLOCK, 2))
        raise TypeError(f"unknown noise model {m!r}")

    def draw(self, k: int) -> np.ndarray:
        """Next ``k`` translations as a C-contiguous (k, 2) array."""
        parts = [self._buf]
        have = len(self._buf)
        while have < k:
            blk = self._block()
            parts.append(blk)
            have += len(blk)
        pool = np.concatenate(parts) if len(parts) > 1 else self._buf
        self._buf = pool[k:]
        return np.ascontiguousarray(pool[:k])


def sample(model: NoiseModel, rng: RngStream | NoiseSampler) -> tuple[float, float]:
    """One translation x ~ nu."""
    sampler = rng if isinstance(rng, NoiseSampler) else NoiseSampler(model, rng)
    x = sampler.draw(1)[0]
    return float(x[0]), float(x[1])


def describe(model: NoiseModel) -> str:
    if isinstance(model, UniformBall):
        return f"uniform_ball(eps={model.epsilon:g})"
    if isinstance(model, WrappedGaussian):
        return f"wrapped_gaussian(sigma={model.sigma:g})"
    if isinstance(model, SingularVertical):
        return f"singular_vertical(eps={model.epsilon:g},{model.density})"
    return "degenerate"
