"""Occupation statistics of random orbits against the normalized volume m."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from rdslab.errors import InsufficientSamples

DEFAULT_BINS = 16
ALPHA = 0.01


@dataclass
class BinGrid:
    """n_bins x n_bins equal-volume cells over the fundamental domain.

    Cell (i, j) covers [lo + i*p/n, lo + (i+1)*p/n) per axis, so the billiard
    torus (r-period 2) gets cells twice as tall as the standard torus.
    """

    n_bins: int
    counts: np.ndarray
    periods: tuple = (1.0, 1.0)
    lows: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.n_bins, self.n_bins):
            raise ValueError(f"counts must have shape ({self.n_bins}, {self.n_bins})")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def empty(cls, n_bins: int = DEFAULT_BINS, periods=(1.0, 1.0), lows=(0.0, 0.0)) -> "BinGrid":
        return cls(n_bins, np.zeros((n_bins, n_bins), dtype=np.int64), tuple(periods), tuple(lows))

    @classmethod
    def from_points(cls, points, n_bins: int = DEFAULT_BINS, periods=(1.0, 1.0),
                    lows=(0.0, 0.0)) -> "BinGrid":
        grid = cls.empty(n_bins, periods, lows)
        grid.add(points)
        return grid

    def cell_index(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - np.asarray(self.lows)) / np.asarray(self.periods)
        u -= np.floor(u)
        return np.clip((u * self.n_bins).astype(np.int64), 0, self.n_bins - 1)

    def add(self, points) -> None:
        idx = self.cell_index(points)
        flat = idx[:, 0] * self.n_bins + idx[:, 1]
        self.counts += np.bincount(flat, minlength=self.n_bins ** 2).reshape(self.n_bins, self.n_bins)

    def csv_rows(self):
        """(i, j, cell center y1, cell center y2, count) per cell."""
        n = self.n_bins
        for i in range(n):
            for j in range(n):
                c1 = self.lows[0] + (i + 0.5) * self.periods[0] / n
                c2 = self.lows[1] + (j + 0.5) * self.periods[1] / n
                yield i, j, c1, c2, int(self.counts[i, j])


def chi_square_uniform(grid: BinGrid) -> tuple[float, float]:
    """Pearson statistic against equal cell probabilities and its chi2(n^2 - 1) p-value."""
    k = grid.n_bins ** 2
    total = grid.total
    if total < 100 * k:
        raise InsufficientSamples(f"{total} samples; need at least {100 * k} for {grid.n_bins}^2 cells")
    expected = total / k
    stat = float(np.sum((grid.counts - expected) ** 2) / expected)
    return stat, float(stats.chi2.sf(stat, k - 1))


def density_check(grid: BinGrid) -> float:
    """Fraction of empty cells (0 for a dense orbit at large n)."""
    return float(np.mean(grid.counts == 0))


@dataclass(frozen=True)
class DependentChiSquare:
    statistic: float
    p_naive: float
    p_value: float
    scale: float
    dof: float


def chi_square_dependent(points, n_bins: int = DEFAULT_BINS, periods=(1.0, 1.0),
                         lows=(0.0, 0.0), n_batches: int = 50) -> DependentChiSquare:
    """Pearson statistic referred to a Satterthwaite law fitted to orbit dependence.

    For a Markov-chain orbit the Pearson statistic is asymptotically a
    weighted sum of chi2(1) variables, the weights being the eigenvalues of
    the long-run covariance of the cell frequencies (divided by 1/k). Its
    trace and squared Frobenius norm are estimated from ``n_batches`` batch
    means with the Wishart bias corrections, and the statistic is compared
    with scale * chi2(dof) matching those two moments. For independent
    samples scale is about 1 and dof about k - 1.
    """
    pts = np.asarray(points, dtype=float)
    grid = BinGrid.from_points(pts, n_bins, periods, lows)
    stat, p_naive = chi_square_uniform(grid)
    k = n_bins ** 2
    size = len(pts) // n_batches
    idx = grid.cell_index(pts[:size * n_batches])
    flat = (idx[:, 0] * n_bins + idx[:, 1]).reshape(n_batches, size)
    freq = np.stack([np.bincount(row, minlength=k) for row in flat]) / size
    cov = size * k * np.cov(freq, rowvar=False)
    m = n_batches - 1
    frob = float(np.sum(cov * cov))
    tr_sq = float(np.trace(cov)) ** 2
    t2 = (frob - tr_sq / m) / (1.0 + 1.0 / m - 2.0 / m ** 2)
    t1_sq = tr_sq - 2.0 * t2 / m
    if not (t2 > 0.0 and t1_sq > 0.0):
        # no measurable fluctuation across batches: fall back to the independent law
        return DependentChiSquare(stat, p_naive, p_naive, 1.0, float(k - 1))
    scale = t2 / np.sqrt(t1_sq)
    dof = t1_sq / t2
    return DependentChiSquare(stat, p_naive, float(stats.chi2.sf(stat / scale, dof)),
                              float(scale), float(dof))
