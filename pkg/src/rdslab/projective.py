"""Projective action on P^1, stationary measures and the positivity classifier.

A line through the origin is stored as its angle phi in [0, pi); the line
e = [1:0] is phi = 0.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rdslab import kernels
from rdslab.cocycle import Cocycle2
from rdslab.errors import SingularMatrix
from rdslab.noise import NoiseSampler, RngStream
from rdslab.rds import BURN_IN, CHUNK, RandomSystem

PI = math.pi
HIST_BINS = 512
E_LINE = 0.0


def reduce_angle(phi: float) -> float:
    """phi mod pi in [0, pi)."""
    w = phi - PI * math.floor(phi / PI)
    return 0.0 if w >= PI else w


def proj_distance(a, b):
    """d(a, b) = min(|a - b|, pi - |a - b|) after reduction; works on arrays."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), PI))
    out = np.minimum(d, PI - d)
    return float(out) if out.ndim == 0 else out


def _as_entries(m):
    if isinstance(m, Cocycle2):
        return m.a11, m.a12, m.a21, m.a22
    m = np.asarray(m, dtype=float)
    return m[0, 0], m[0, 1], m[1, 0], m[1, 1]


def project_action(m, phi: float) -> float:
    """Angle of the line m . (cos phi, sin phi)."""
    a, b, c, d = _as_entries(m)
    if abs(a * d - b * c) <= 1e-14:
        raise SingularMatrix(f"|det| = {abs(a * d - b * c):.3g} is below 1e-14")
    vx, vy = math.cos(phi), math.sin(phi)
    return reduce_angle(math.atan2(c * vx + d * vy, a * vx + b * vy))


def project_many(m, phis: np.ndarray) -> np.ndarray:
    """Vectorized action of one matrix, or of a stack of matrices (k, 2, 2), on angles."""
    m = np.asarray(m.matrix if isinstance(m, Cocycle2) else m, dtype=float)
    phis = np.asarray(phis, dtype=float)
    vx, vy = np.cos(phis), np.sin(phis)
    if m.ndim == 2:
        m = m[None]
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    if np.any(np.abs(det) <= 1e-14):
        raise SingularMatrix("a matrix in the stack has |det| below 1e-14")
    wx = m[:, 0, 0] * vx + m[:, 0, 1] * vy
    wy = m[:, 1, 0] * vx + m[:, 1, 1] * vy
    return _mod_pi(np.arctan2(wy, wx))


def _mod_pi(x):
    # np.mod(-tiny, pi) rounds up to pi; fold that back to 0
    out = np.mod(x, PI)
    out[out >= PI] = 0.0
    return out


# -- measures -----------------------------------------------------------------
@dataclass
class EmpiricalMeasure:
    """Equal-weight sample of angles in [0, pi) with a 512-bin histogram view."""

    samples: np.ndarray
    bins: int = HIST_BINS
    _sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.samples = _mod_pi(np.atleast_1d(np.asarray(self.samples, dtype=float)))
        if self.samples.size == 0:
            raise ValueError("empty measure")
        self._sorted = np.sort(self.samples)

    def __len__(self):
        return self.samples.size

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """(bin centers, masses); masses sum to 1."""
        counts, edges = np.histogram(self.samples, bins=self.bins, range=(0.0, PI))
        return 0.5 * (edges[:-1] + edges[1:]), counts / counts.sum()

    def mass_within(self, center: float = E_LINE, radius: float = 0.05) -> float:
        return float(np.mean(proj_distance(self.samples, center) <= radius))

    def resample(self, k: int, rng: RngStream) -> np.ndarray:
        return self.samples[rng.generator.integers(0, self.samples.size, size=k)]


def kuiper(a: np.ndarray, b: np.ndarray | None = None) -> float:
    """Kuiper distance D+ + D- between angle samples on [0, pi).

    With ``b`` None the comparison is against the uniform law. D+ + D- is
    the largest classical KS statistic over all choices of the circle's cut
    point, so it does not depend on where [0, pi) starts.
    """
    x = np.sort(_mod_pi(np.atleast_1d(np.asarray(a, dtype=float)))) / PI
    n = x.size
    if b is None:
        i = np.arange(1, n + 1)
        return float(np.max(i / n - x) + np.max(x - (i - 1) / n))
    y = np.sort(_mod_pi(np.atleast_1d(np.asarray(b, dtype=float)))) / PI
    grid = np.concatenate([x, y])
    d = np.searchsorted(x, grid, side="right") / n - np.searchsorted(y, grid, side="right") / y.size
    return float(max(d.max(), 0.0) + max(-d.min(), 0.0))


def stationary_measure(system: RandomSystem, n: int, rng: RngStream, phi0: float | None = None,
                       y0=None, burn_in: int = BURN_IN) -> EmpiricalMeasure:
    """Empirical law of phi_k along the pair chain (f_x(y), Dg(y) . phi) after burn-in.

    The start line is drawn uniformly from ``rng`` unless ``phi0`` is given;
    the start point likewise from the uniform law on the torus.
    """
    if n < 100_000:
        raise ValueError(f"n must be at least 10^5, got {n}")
    if y0 is None:
        y0 = system.uniform_point(rng)
    if phi0 is None:
        phi0 = float(rng.generator.uniform(0.0, PI))
    sampler = NoiseSampler(system.noise, rng)
    drv = kernels.drivers_for(system.kernel)
    y = np.array(system.wrap(y0), dtype=float)
    phi = float(phi0)
    out = np.empty(n)
    scratch = np.empty(min(CHUNK, max(burn_in, 1)))
    k = 0
    while k < burn_in:
        m = min(scratch.size, burn_in - k)
        phi = drv.projective_chain(system.kernel, y, phi, sampler.draw(m), scratch[:m])
        k += m
    k = 0
    while k < n:
        m = min(CHUNK, n - k)
        phi = drv.projective_chain(system.kernel, y, phi, sampler.draw(m), out[k:k + m])
        k += m
    return EmpiricalMeasure(out)


def invariance_defect(system: RandomSystem, measure: EmpiricalMeasure, n_push: int,
                      rng: RngStream) -> float:
    """Kuiper distance between Dg(y)_* eta and eta, pooled over y ~ m and phi ~ eta."""
    g = rng.generator
    lo = np.array(system.lows)
    per = np.array(system.periods)
    ys = lo + per * g.random((n_push, 2))
    phis = measure.resample(n_push, rng)
    mats = np.empty((n_push, 2, 2))
    step = system.kernel.step
    for i, (a, b) in enumerate(ys):
        z = step(a, b)
        mats[i] = ((z[2], z[3]), (z[4], z[5]))
    pushed = project_many(mats, phis)
    return kuiper(pushed, measure.samples)


def pushforward_mass(m, center: float = E_LINE, radius: float = 0.1, n: int = 100_000) -> float:
    """Mass of m_*(uniform law on P^1) within ``radius`` of ``center`` (midpoint rule)."""
    phis = (np.arange(n) + 0.5) * PI / n
    return float(np.mean(proj_distance(project_many(m, phis), center) <= radius))


# -- classifier ---------------------------------------------------------------
class Outcome(enum.Enum):
    POSITIVE_EXPONENT_CERTIFICATE = "PositiveExponentCertificate"
    INVARIANT_LINE_DETECTED = "InvariantLineDetected"
    COMPACT_LIKELY = "CompactLikely"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Witness:
    point: tuple
    matrix: Cocycle2
    trace: float


@dataclass(frozen=True)
class ClassifierVerdict:
    outcome: Outcome
    witnesses: tuple = ()
    line: float | None = None
    form: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.outcome is Outcome.POSITIVE_EXPONENT_CERTIFICATE and len(self.witnesses) != 2:
            raise ValueError("a positivity certificate needs two witnesses")

    def describe(self) -> str:
        lines = [f"outcome: {self.outcome.value}"]
        if self.line is not None:
            lines.append(f"line: {self.line:.12g}")
        for k, w in enumerate(self.witnesses, 1):
            m = w.matrix
            lines.append(f"h{k}: point=({w.point[0]:.6g}, {w.point[1]:.6g}) trace={w.trace:.12g} "
                         f"matrix=[[{m.a11:.12g}, {m.a12:.12g}], [{m.a21:.12g}, {m.a22:.12g}]]")
        return "\n".join(lines)


ID_TOL = 1e-10
TRACE_MARGIN = 1e-8
LINE_TOL = 1e-8
FORM_TOL = 1e-6
TIE_TOL = 1e-12


def _is_pm_identity(m: Cocycle2) -> bool:
    return any(abs(m.a11 - s) <= ID_TOL and abs(m.a22 - s) <= ID_TOL
               and abs(m.a12) <= ID_TOL and abs(m.a21) <= ID_TOL for s in (1.0, -1.0))


def _is_scalar(m: Cocycle2) -> bool:
    scale = max(abs(m.a11), abs(m.a22), 1.0)
    return (abs(m.a12) <= ID_TOL * scale and abs(m.a21) <= ID_TOL * scale
            and abs(m.a11 - m.a22) <= ID_TOL * scale)


def eigenlines(m: Cocycle2) -> list[float]:
    """Angles of the real eigenlines of m (nearly parabolic matrices give one line)."""
    a, b, c, d = m.a11, m.a12, m.a21, m.a22
    tr = a + d
    disc = tr * tr - 4.0 * (a * d - b * c)
    if disc < -1e-8 * max(1.0, tr * tr):
        return []
    roots = [0.5 * tr] if abs(disc) <= 1e-8 * max(1.0, tr * tr) else \
        [0.5 * (tr + math.sqrt(disc)), 0.5 * (tr - math.sqrt(disc))]
    out = []
    for lam in roots:
        # both rows of (m - lam) give a kernel vector; use the better conditioned one
        u, w = (b, lam - a), (lam - d, c)
        v = u if math.hypot(*u) >= math.hypot(*w) else w
        if v == (0.0, 0.0):
            continue
        out.append(reduce_angle(math.atan2(v[1], v[0])))
    return out


def _preserves(m: Cocycle2, phi: float) -> bool:
    vx, vy = math.cos(phi), math.sin(phi)
    wx = m.a11 * vx + m.a12 * vy
    wy = m.a21 * vx + m.a22 * vy
    return abs(wx * vy - wy * vx) <= LINE_TOL * math.hypot(wx, wy)


def _common_form(mats: list[Cocycle2], iters: int = 2000):
    """Fixed point of Q -> mean M^T Q M (normalized to det 1) and its residual."""
    stack = np.array([m.matrix for m in mats])
    Q = np.eye(2)
    for _ in range(iters):
        nxt = np.einsum("kji,jl,klm->im", stack, Q, stack) / len(stack)
        det = np.linalg.det(nxt)
        if not np.isfinite(det) or det <= 0:
            return None, math.inf
        nxt /= math.sqrt(det)
        if np.max(np.abs(nxt - Q)) < 1e-14:
            Q = nxt
            break
        Q = nxt
    pulled = np.einsum("kji,jl,klm->kim", stack, Q, stack)
    resid = float(np.max(np.abs(pulled - Q)) / np.max(np.abs(Q)))
    if np.any(np.linalg.eigvalsh(Q) <= 0):
        return None, math.inf
    return Q, resid


def grid_points(grid: int, periods=(1.0, 1.0), lows=(0.0, 0.0), offsets=(0.0, 0.0)):
    """Base points lows + periods * (i + offset) / grid in row-major (y1-major) order."""
    return [(lows[0] + periods[0] * (i + offsets[0]) / grid,
             lows[1] + periods[1] * (j + offsets[1]) / grid)
            for i in range(grid) for j in range(grid)]


def classify(derivative_field: Callable, grid: int, periods=(1.0, 1.0), lows=(0.0, 0.0),
             offsets=(0.0, 0.0)) -> ClassifierVerdict:
    """Scan Dg over a grid and sort the sampled matrix set into the positivity trichotomy.

    Witnesses: h1 is the sampled matrix with the largest |trace| (>= 2, not +-I);
    h2 the sampled matrix with the smallest |trace| in (1e-8, 2 - 1e-8), the
    first in scan order on ties (traces within 1e-12).
    """
    if grid < 64:
        raise ValueError(f"grid must be at least 64, got {grid}")
    pts = grid_points(grid, periods, lows, offsets)
    mats = []
    for p in pts:
        m = derivative_field(p)
        mats.append(m if isinstance(m, Cocycle2) else Cocycle2.from_array(m))

    h1 = h2 = None
    for p, m in zip(pts, mats):
        t = abs(m.trace)
        if t >= 2.0 - ID_TOL and not _is_pm_identity(m):
            if h1 is None or t > abs(h1.trace) + TIE_TOL:
                h1 = Witness(p, m, m.trace)
        elif TRACE_MARGIN < t < 2.0 - TRACE_MARGIN:
            if h2 is None or t < abs(h2.trace) - TIE_TOL:
                h2 = Witness(p, m, m.trace)
    if h1 is not None and h2 is not None:
        return ClassifierVerdict(Outcome.POSITIVE_EXPONENT_CERTIFICATE, (h1, h2))

    ref = next((m for m in mats if not _is_scalar(m)), None)
    if ref is None:
        return ClassifierVerdict(Outcome.INVARIANT_LINE_DETECTED, line=E_LINE)
    for phi in eigenlines(ref):
        if all(_preserves(m, phi) for m in mats):
            return ClassifierVerdict(Outcome.INVARIANT_LINE_DETECTED, line=phi)

    if all(abs(m.trace) < 2.0 for m in mats):
        Q, resid = _common_form(mats)
        if Q is not None and resid < FORM_TOL:
            return ClassifierVerdict(Outcome.COMPACT_LIKELY, form=Q)
    return ClassifierVerdict(Outcome.INCONCLUSIVE)


def classify_system(system: RandomSystem, grid: int = 100) -> ClassifierVerdict:
    """classify over the system's fundamental domain; billiard r-samples avoid r = -1."""
    offsets = (0.0, 0.5) if system.lows[1] != 0.0 else (0.0, 0.0)
    return classify(system.derivative, grid, system.periods, system.lows, offsets)
