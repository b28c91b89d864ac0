"""Random skew products F(omega, y) = (sigma omega, g(y) + omega_0) and their exponents.

Exponents are extracted by accumulating the derivative cocycle along one
random orbit with periodic QR re-orthonormalization; the logs of both
diagonal factors give lambda+ and lambda- together. Uncertainty comes from
batch means over 50 consecutive batches.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rdslab import kernels
from rdslab.cocycle import Cocycle2
from rdslab.geometry import Table
from rdslab.noise import (Degenerate, NoiseModel, NoiseSampler, RngStream,
                          SingularVertical, describe)
from rdslab.toralmaps import KickFunction

CHUNK = 1 << 16
BURN_IN = 1000
N_BATCHES = 50


class RandomSystem:
    """nu-random additive perturbation of a toral map g.

    ``kernel.step(y0, y1)`` returns g(y) and Dg(y); the derivative of each
    random step f_x = tau_x o g equals Dg because translations have identity
    derivative.
    """

    def __init__(self, kernel, noise: NoiseModel, name: str,
                 periods=(1.0, 1.0), lows=(0.0, 0.0)):
        self.kernel = kernel
        self.noise = noise
        self.name = name
        self.periods = tuple(float(p) for p in periods)
        self.lows = tuple(float(v) for v in lows)

    def __repr__(self):
        return f"RandomSystem({self.name}, {describe(self.noise)})"

    @property
    def area(self) -> float:
        return self.periods[0] * self.periods[1]

    def wrap(self, y):
        out = []
        for v, p, lo in zip(y, self.periods, self.lows):
            w = v - p * math.floor((v - lo) / p)
            out.append(w - p if w >= lo + p else w)
        return out[0], out[1]

    def base_map(self, y):
        z = self.kernel.step(*self.wrap(y))
        return z[0], z[1]

    def derivative(self, y) -> Cocycle2:
        z = self.kernel.step(*self.wrap(y))
        return Cocycle2(z[2], z[3], z[4], z[5])

    def step(self, y, x):
        """f_x(y) = g(y) + x reduced to the fundamental domain."""
        z = self.base_map(y)
        return self.wrap((z[0] + x[0], z[1] + x[1]))

    def uniform_point(self, rng: RngStream):
        u = rng.generator.random(2)
        return self.lows[0] + self.periods[0] * u[0], self.lows[1] + self.periods[1] * u[1]


def billiard_system(table: Table, noise: NoiseModel) -> RandomSystem:
    name = f"billiard[{table.surface.name.lower()}:{table.spec!r}]"
    return RandomSystem(table.kernel, noise, name, periods=(1.0, 2.0), lows=(0.0, -1.0))


def gv_system(kick: KickFunction, noise: NoiseModel, iterations: int = 1) -> RandomSystem:
    name = kick.name if iterations == 1 else f"{kick.name}^{iterations}"
    return RandomSystem(kick.kernel(iterations), noise, name)


def standard_system(K: float, noise: NoiseModel, iterations: int = 1) -> RandomSystem:
    return gv_system(KickFunction.standard(K), noise, iterations)


class _CallableKernel:
    lo2 = 0.0
    len2 = 1.0

    def __init__(self, g, Dg, lo2, len2):
        self.g = g
        self.Dg = Dg
        self.lo2 = lo2
        self.len2 = len2

    def step(self, y0, y1):
        z = self.g((y0, y1))
        m = np.asarray(self.Dg((y0, y1)), dtype=float)
        return float(z[0]), float(z[1]), m[0, 0], m[0, 1], m[1, 0], m[1, 1]


def callable_system(g: Callable, Dg: Callable, noise: NoiseModel, name: str = "custom",
                    periods=(1.0, 1.0), lows=(0.0, 0.0)) -> RandomSystem:
    """System from Python callables g(y) -> point and Dg(y) -> 2x2 (runs on the Python path)."""
    return RandomSystem(_CallableKernel(g, Dg, lows[1], periods[1]), noise, name, periods, lows)


# -- orbits -------------------------------------------------------------------
def random_orbit(system: RandomSystem, y0, n: int, rng: RngStream | NoiseSampler) -> np.ndarray:
    """(n + 1, 2) array y_0, ..., y_n with y_{k+1} = g(y_k) + x_k."""
    if n < 0:
        raise ValueError("n must be non-negative")
    sampler = _sampler(system, rng)
    drv = kernels.drivers_for(system.kernel)
    out = np.empty((n + 1, 2))
    y = np.array(system.wrap(y0), dtype=float)
    out[0] = y
    k = 0
    while k < n:
        m = min(CHUNK, n - k)
        drv.orbit(system.kernel, y, sampler.draw(m), out[k + 1:k + 1 + m])
        k += m
    return out


def _sampler(system, rng):
    if isinstance(rng, NoiseSampler):
        return rng
    return NoiseSampler(system.noise, rng)


# -- Lyapunov exponents ---------------------------------------------------------
@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_plus: float
    lambda_minus: float
    n_steps: int
    std_error: float
    renorm_interval: int
    std_error_minus: float = float("nan")
    batches: tuple = field(default=(), repr=False)
    batches_minus: tuple = field(default=(), repr=False)

    @property
    def zero_sum(self) -> float:
        return self.lambda_plus + self.lambda_minus

    def zero_sum_ok(self, k: float = 3.0) -> bool:
        return abs(self.zero_sum) <= k * self.std_error

    def stationarity_gap(self) -> tuple[float, float]:
        """(first-half mean - second-half mean, its standard error)."""
        b = np.asarray(self.batches)
        h = len(b) // 2
        first, second = b[:h], b[h:]
        se = math.sqrt(first.var(ddof=1) / len(first) + second.var(ddof=1) / len(second))
        return float(first.mean() - second.mean()), se

    def stationary(self, k: float = 3.0, atol: float = 1e-8) -> bool:
        """Half-vs-half batch means agree within k SE (plus a round-off floor)."""
        gap, se = self.stationarity_gap()
        return abs(gap) <= k * se + atol


def _check_args(n, renorm_interval):
    if n < 10_000:
        raise ValueError(f"n must be at least 10^4 for a batch-means estimate, got {n}")
    if not 1 <= renorm_interval <= 64:
        raise ValueError(f"renorm_interval must lie in [1, 64], got {renorm_interval}")


def _batch_sizes(n, n_batches):
    base, extra = divmod(n, n_batches)
    return [base + (1 if i < extra else 0) for i in range(n_batches)]


def _estimate(kernel, y0, draw, n, renorm, burn_in, n_batches, scale=1.0):
    drv = kernels.drivers_for(kernel)
    y = np.array(y0, dtype=float)
    Q = np.array([1.0, 0.0, 0.0, 1.0])

    def advance(m):
        s1 = s2 = 0.0
        while m > 0:
            k = min(CHUNK, m)
            a, b = drv.accumulate(kernel, y, Q, draw(k), renorm)
            s1 += a
            s2 += b
            m -= k
        return s1, s2

    advance(burn_in)
    sizes = _batch_sizes(n, n_batches)
    plus, minus = [], []
    tot1 = tot2 = 0.0
    for m in sizes:
        a, b = advance(m)
        tot1 += a
        tot2 += b
        plus.append(scale * a / m)
        minus.append(scale * b / m)
    if tot1 < tot2:
        # only possible when both exponents vanish; report the ordered spectrum
        tot1, tot2, plus, minus = tot2, tot1, minus, plus
    plus = np.array(plus)
    minus = np.array(minus)
    rt = math.sqrt(n_batches)
    return LyapunovEstimate(
        lambda_plus=scale * tot1 / n,
        lambda_minus=scale * tot2 / n,
        n_steps=n,
        std_error=float(plus.std(ddof=1) / rt),
        renorm_interval=renorm,
        std_error_minus=float(minus.std(ddof=1) / rt),
        batches=tuple(plus.tolist()),
        batches_minus=tuple(minus.tolist()),
    )


def lyapunov(system: RandomSystem, y0, n: int, renorm_interval: int = 8,
             rng: RngStream | NoiseSampler | None = None, burn_in: int = BURN_IN,
             n_batches: int = N_BATCHES) -> LyapunovEstimate:
    """Estimate (lambda+, lambda-) along one random orbit of length n after burn-in."""
    _check_args(n, renorm_interval)
    sampler = _sampler(system, rng if rng is not None else RngStream(0))
    return _estimate(system.kernel, system.wrap(y0), sampler.draw, n, renorm_interval,
                     burn_in, n_batches)


def lyapunov_singular(K: float, model: SingularVertical, y0, n: int,
                      rng: RngStream, renorm_interval: int = 8, burn_in: int = BURN_IN,
                      n_batches: int = N_BATCHES):
    """Direct and two-step-reduced estimates of lambda+ for vertical noise.

    ``reduced`` runs g_K^2 over n/2 steps driven by the paired translations
    (a, a + b) built from the same noise sequence, and reports the rate per
    single step (half the two-step rate).
    """
    if n % 2:
        raise ValueError("n must be even")
    if burn_in % 2:
        raise ValueError("burn_in must be even")
    _check_args(n, renorm_interval)
    if not isinstance(model, SingularVertical):
        raise TypeError("lyapunov_singular needs a SingularVertical noise model")
    kick = KickFunction.standard(K)
    total = n + burn_in
    omega = NoiseSampler(model, rng).draw(total)
    pairs = pushforward_pairs(omega)

    def source(arr):
        pos = [0]

        def draw(k):
            out = arr[pos[0]:pos[0] + k]
            pos[0] += k
            return np.ascontiguousarray(out)
        return draw

    y = tuple(float(v) for v in y0)
    direct = _estimate(kick.kernel(1), y, source(omega), n, renorm_interval, burn_in, n_batches)
    reduced = _estimate(kick.kernel(2), y, source(pairs), n // 2, renorm_interval,
                        burn_in // 2, n_batches, scale=0.5)
    return direct, reduced


def pushforward_pairs(omega: np.ndarray) -> np.ndarray:
    """Translations phi(omega_2k, omega_2k+1) = x + x' + I x; (0,a),(0,b) -> (a, a+b)."""
    x = omega[0::2]
    xp = omega[1::2]
    out = np.empty_like(x)
    out[:, 0] = x[:, 0] + xp[:, 0] + x[:, 1]
    out[:, 1] = x[:, 1] + xp[:, 1] + x[:, 0]
    return out


def lyapunov_bruteforce(system: RandomSystem, y0, n: int, rng: RngStream | NoiseSampler,
                        burn_in: int = BURN_IN, n_batches: int = N_BATCHES) -> tuple[float, float]:
    """lambda+ from the straight matrix product without QR, rescaling on overflow.

    Returns (estimate, batch-means standard error). Independent of the QR
    accumulator: only the map and its one-step derivative are shared.
    """
    sampler = _sampler(system, rng)
    y = system.wrap(y0)
    for x in sampler.draw(burn_in):
        y = system.step(y, x)
    p00, p01, p10, p11 = 1.0, 0.0, 0.0, 1.0
    log_scale = 0.0
    marks = [0.0]
    sizes = _batch_sizes(n, n_batches)
    xs = sampler.draw(n)
    k = 0
    for m in sizes:
        for _ in range(m):
            z = system.kernel.step(*y)
            a, b, c, d = z[2], z[3], z[4], z[5]
            p00, p01, p10, p11 = (a * p00 + b * p10, a * p01 + b * p11,
                                  c * p00 + d * p10, c * p01 + d * p11)
            big = max(abs(p00), abs(p01), abs(p10), abs(p11))
            if big > 1e100:
                p00, p01, p10, p11 = p00 / big, p01 / big, p10 / big, p11 / big
                log_scale += math.log(big)
            y = system.wrap((z[0] + xs[k, 0], z[1] + xs[k, 1]))
            k += 1
        norm = np.linalg.norm(np.array([[p00, p01], [p10, p11]]), 2)
        marks.append(log_scale + math.log(norm))
    inc = np.diff(marks) / np.array(sizes)
    return marks[-1] / n, float(inc.std(ddof=1) / math.sqrt(n_batches))


def cocycle_product(system: RandomSystem, y0, n: int) -> np.ndarray:
    """Directly multiplied derivative chain Dg(y_{n-1}) ... Dg(y_0) for Degenerate noise."""
    if not isinstance(system.noise, Degenerate):
        raise ValueError("cocycle_product is defined for Degenerate noise only")
    P = np.eye(2)
    y = system.wrap(y0)
    for _ in range(n):
        P = system.derivative(y).matrix @ P
        y = system.base_map(y)
    return P


def timed(fn, *args, **kwargs):
    """(result, wall seconds)."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0
