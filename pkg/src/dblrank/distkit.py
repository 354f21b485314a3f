"""Single-distribution views: histograms, log bins, rank-frequency, CSS, tail fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CitationSet, CssResult, DegenerateSet, DoubleRankError, PowerLawFit, TooFewPoints
from .fitkit import chi2_pvalue, ols_loglog


@dataclass(frozen=True, eq=False)
class RankFrequency:
    """Papers ranked from most to least cited (rank 1 = most cited).

    ``citations`` is non-increasing and ``ranks`` strictly increasing. Built
    from a set, there is one entry per paper; ``from_pairs`` accepts arbitrary
    (citations, rank) points, e.g. an analytic curve.
    """

    citations: np.ndarray
    ranks: np.ndarray
    size: float

    def __post_init__(self):
        c = np.asarray(self.citations, dtype=float)
        r = np.asarray(self.ranks, dtype=float)
        if c.shape != r.shape or c.ndim != 1 or c.size == 0:
            raise DoubleRankError("citations and ranks must be equal-length, non-empty")
        if np.any(np.diff(c) > 0) or np.any(np.diff(r) <= 0):
            raise DoubleRankError("ranks must increase as citations decrease")
        for name, arr in (("citations", c), ("ranks", r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_pairs(cls, pairs, size: float | None = None) -> "RankFrequency":
        ordered = sorted(pairs, key=lambda p: (-p[0], p[1]))
        c = [p[0] for p in ordered]
        r = [p[1] for p in ordered]
        return cls(np.array(c, float), np.array(r, float), size if size is not None else max(r))

    def cumulative_probability(self, c: float) -> float:
        """Fraction of papers with at least ``c`` citations."""
        # citations are descending: count entries >= c
        k = int(np.searchsorted(-self.citations, -c, side="right"))
        if k == 0:
            return 0.0
        return float(self.ranks[k - 1] / self.size)

    def distinct(self) -> tuple[np.ndarray, np.ndarray]:
        """One point per citation value, carrying the last (largest) rank."""
        c = self.citations
        last = np.r_[c[1:] != c[:-1], True]
        return c[last], self.ranks[last]


def histogram(cs: CitationSet, max_citations: int) -> tuple[list[tuple[int, int]], int]:
    """Paper counts for citation values 0..max_citations, plus the omitted tail."""
    if max_citations < 0:
        raise DoubleRankError("max_citations must be >= 0")
    counts = np.bincount(cs.counts, minlength=max_citations + 1)
    shown = counts[: max_citations + 1]
    omitted = int(cs.size - shown.sum())
    return [(i, int(n)) for i, n in enumerate(shown)], omitted


def log_bins(cs: CitationSet) -> list[tuple[int, int, int]]:
    """Power-of-two bins: 0, 1-2, 3-4, 5-8, 9-16, ... (inclusive bounds)."""
    counts = cs.counts
    top = int(counts.max())
    bins = [(0, 0)]
    lo, hi = 1, 2
    while lo <= max(top, 1):
        bins.append((lo, hi))
        lo, hi = hi + 1, hi * 2
    out = []
    for lo, hi in bins:
        out.append((lo, hi, int(np.count_nonzero((counts >= lo) & (counts <= hi)))))
    return out


def rank_frequency(cs: CitationSet) -> RankFrequency:
    c = np.sort(cs.counts)[::-1]
    return RankFrequency(c, np.arange(1, c.size + 1), cs.size)


def css_classify(cs: CitationSet, depth: int) -> CssResult:
    """Characteristic scores and scales by iterated means.

    A paper exactly at a threshold stays in the lower class.
    """
    if depth < 1:
        raise DoubleRankError("depth must be >= 1")
    counts = cs.counts.astype(float)
    if counts.min() == counts.max():
        raise DegenerateSet("all papers have the same citation count")
    thresholds = [counts.mean()]
    while len(thresholds) < depth:
        above = counts[counts > thresholds[-1]]
        if above.size == 0:
            raise DegenerateSet(f"no papers above m_{len(thresholds)} = {thresholds[-1]:.4g}")
        thresholds.append(above.mean())
    edges = np.r_[-np.inf, thresholds, np.inf]
    sizes = [np.count_nonzero((counts > lo) & (counts <= hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    shares = [100.0 * k / counts.size for k in sizes]
    return CssResult(tuple(thresholds), tuple(shares), depth)


def tail_power_fit(rf: RankFrequency, fit_lo: float = 50, fit_hi: float = 400) -> PowerLawFit:
    """Fit ``rank = a * citations**(-alpha)`` over a citation window.

    Uses one point per distinct citation value inside [fit_lo, fit_hi] and
    least squares on log-transformed pairs.
    """
    if not fit_lo < fit_hi:
        raise DoubleRankError("fit_lo must be below fit_hi")
    c, r = rf.distinct()
    sel = (c >= fit_lo) & (c <= fit_hi) & (c > 0)
    if np.count_nonzero(sel) < 5:
        raise TooFewPoints(
            f"{np.count_nonzero(sel)} points in citation window [{fit_lo}, {fit_hi}], need 5"
        )
    c, r = c[sel][::-1], r[sel][::-1]
    log_a, slope = ols_loglog(c, r)
    a, alpha = float(np.exp(log_a)), float(-slope)
    pred = a * c ** (-alpha)
    chi2 = float(np.sum((r - pred) ** 2 / pred))
    dof = c.size - 2
    return PowerLawFit(
        a, alpha, "LR", chi2, dof, chi2_pvalue(chi2, dof), tuple(zip(c, r)), decreasing=True
    )


def tail_deviation(rf: RankFrequency, fit: PowerLawFit) -> list[tuple[float, float, float]]:
    """(citations, observed rank, fitted rank) for every distinct citation value."""
    c, r = rf.distinct()
    pos = c > 0
    return [(float(ci), float(ri), float(fit.predict(ci))) for ci, ri in zip(c[pos], r[pos])]
