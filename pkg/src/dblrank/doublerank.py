"""Local papers located in the world ranking: double ranks and percentile series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    BadGrid,
    CitationSet,
    NonMonotone,
    NotSubset,
    PercentilePoint,
    PercentileSeries,
)

DEFAULT_GRID = (1, 2, 4, 7, 12, 20, 35, 60, 100)
NSB_GRID = (1, 5, 10, 25, 50)


@dataclass(frozen=True, eq=False)
class PreparedWorld:
    """World citation counts reduced to tie blocks, ready for rank lookups."""

    label: str
    size: int
    values: np.ndarray  # distinct citation counts, descending
    multiplicity: np.ndarray
    above: np.ndarray  # papers strictly more cited than each value

    @classmethod
    def from_set(cls, world: CitationSet) -> "PreparedWorld":
        values, mult = np.unique(world.counts, return_counts=True)
        values, mult = values[::-1], mult[::-1]
        above = np.r_[0, np.cumsum(mult)[:-1]]
        for arr in (values, mult, above):
            arr.setflags(write=False)
        return cls(world.label, world.size, values, mult, above)

    def midranks(self, counts: np.ndarray) -> np.ndarray:
        """Average world rank over the tie block of each count."""
        idx = np.searchsorted(-self.values, -np.asarray(counts))
        return self.above[idx] + (self.multiplicity[idx] + 1) / 2.0

    def check_subset(self, local: CitationSet) -> None:
        values, mult = np.unique(local.counts, return_counts=True)
        idx = np.searchsorted(-self.values, -values)
        idx = np.minimum(idx, self.values.size - 1)
        present = self.values[idx] == values
        if not present.all():
            missing = values[~present][0]
            raise NotSubset(f"{local.label!r} has a paper with {missing} citations absent from {self.label!r}")
        over = mult > self.multiplicity[idx]
        if over.any():
            c = values[over][0]
            raise NotSubset(f"{local.label!r} has more papers with {c} citations than {self.label!r}")


def _prepare(world) -> PreparedWorld:
    return world if isinstance(world, PreparedWorld) else PreparedWorld.from_set(world)


def global_ranks(local: CitationSet, world) -> list[tuple[int, float]]:
    """(local rank, global midrank) for each local paper, by local rank."""
    pw = _prepare(world)
    pw.check_subset(local)
    ordered = np.sort(local.counts)[::-1]
    mid = pw.midranks(ordered)
    return [(i + 1, float(m)) for i, m in enumerate(mid)]


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise BadGrid("percentile grid is empty")
    if not np.all((g > 0) & (g <= 100)):
        raise BadGrid("grid percentiles must lie in (0, 100]")
    if np.any(np.diff(g) <= 0):
        raise BadGrid("grid percentiles must be strictly increasing")
    return g


def local_percentiles(local: CitationSet, world) -> np.ndarray:
    """World top-percentile of every local paper (midrank / world size * 100)."""
    pw = _prepare(world)
    pw.check_subset(local)
    return pw.midranks(local.counts) / pw.size * 100.0


def percentile_series(local: CitationSet, world, grid: Sequence[float] = DEFAULT_GRID) -> PercentileSeries:
    """Count local papers inside each world top-x percentile of ``grid``."""
    g = _check_grid(grid)
    pw = _prepare(world)
    pw.check_subset(local)
    mid = np.sort(pw.midranks(local.counts))
    # midrank/size*100 <= x  <=>  midrank*100 <= x*size; kept in that form to
    # avoid division rounding at block boundaries
    n = np.searchsorted(mid * 100.0, g * pw.size, side="right")
    points = [PercentilePoint(float(x), float(k), 100.0 * k / local.size) for x, k in zip(g, n)]
    return PercentileSeries(
        pw.label,
        local.label,
        pw.size,
        float(local.size),
        tuple(points),
        local_percentiles=mid / pw.size * 100.0,
    )


def series_from_shares(
    shares, local_size: Optional[float] = None, local_label: str = "local", world_label: str = "world"
) -> PercentileSeries:
    """Wrap published percentile shares (x, percent of papers) as a series.

    Without ``local_size`` the counts are the shares themselves (a nominal
    size of 100) and the series is flagged ``synthetic_counts``.
    """
    pairs = [(float(x), float(s)) for x, s in (shares.items() if hasattr(shares, "items") else shares)]
    if not pairs:
        raise BadGrid("no shares given")
    for (x0, s0), (x1, s1) in zip(pairs, pairs[1:]):
        if x1 <= x0:
            raise BadGrid("share percentiles must be strictly increasing")
        if s1 < s0:
            raise NonMonotone(f"share decreases from {s0} at x={x0} to {s1} at x={x1}")
    synthetic = local_size is None
    size = 100.0 if synthetic else float(local_size)
    points = [PercentilePoint(x, s * size / 100.0, s) for x, s in pairs]
    return PercentileSeries(world_label, local_label, None, size, tuple(points), synthetic_counts=synthetic)
