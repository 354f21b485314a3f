"""Domain types and errors shared by the rest of the package."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

METHODS = ("LR", "LM", "ML", "CLOSED_FORM")


class DoubleRankError(ValueError):
    """Base class for every domain error raised by dblrank."""


class EmptySet(DoubleRankError):
    pass


class NegativeCount(DoubleRankError):
    pass


class NonIntegralCount(DoubleRankError):
    pass


class DegenerateSet(DoubleRankError):
    pass


class NotSubset(DoubleRankError):
    pass


class BadGrid(DoubleRankError):
    pass


class NonMonotone(DoubleRankError):
    pass


class TooFewPoints(DoubleRankError):
    pass


class ZeroCount(DoubleRankError):
    pass


class NoConvergence(DoubleRankError):
    pass


class Degenerate(DoubleRankError):
    pass


class NonPositiveDof(DoubleRankError):
    pass


class BadPercentile(DoubleRankError):
    pass


class BadCounts(DoubleRankError):
    pass


class ParseError(DoubleRankError):
    pass


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CitationSet:
    """Citations-per-paper for one group (world, country, institution)."""

    label: str
    counts: np.ndarray

    def __post_init__(self):
        if not isinstance(self.label, str) or not self.label:
            raise DoubleRankError("label must be a non-empty string")
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise EmptySet(f"citation set {self.label!r} has no papers")
        if counts.dtype.kind not in "iu":
            raise NonIntegralCount(f"citation set {self.label!r} holds non-integer counts")
        if (counts < 0).any():
            raise NegativeCount(f"citation set {self.label!r} holds negative counts")
        object.__setattr__(self, "counts", _frozen_array(counts, np.int64))

    def __len__(self) -> int:
        return int(self.counts.size)

    @property
    def size(self) -> int:
        return int(self.counts.size)

    def same_as(self, other: "CitationSet") -> bool:
        return self.label == other.label and np.array_equal(self.counts, other.counts)


def validate_citation_set(raw: Sequence, label: str) -> CitationSet:
    """Check raw counts and wrap them in a CitationSet.

    Accepts ints and integral floats (``3.0``); rejects anything else.
    """
    values = list(raw)
    if not values:
        raise EmptySet(f"citation set {label!r} has no papers")
    clean = []
    for v in values:
        if isinstance(v, bool):
            raise NonIntegralCount(f"boolean citation count {v!r}")
        try:
            fv = float(v)
        except (TypeError, ValueError):
            raise NonIntegralCount(f"citation count {v!r} is not a number") from None
        if not math.isfinite(fv) or fv != math.floor(fv):
            raise NonIntegralCount(f"citation count {v!r} is not an integer")
        if fv < 0:
            raise NegativeCount(f"negative citation count {v!r} in {label!r}")
        clean.append(int(v) if isinstance(v, (int, np.integer)) else int(fv))
    return CitationSet(label, np.array(clean, dtype=np.int64))


@dataclass(frozen=True)
class LognormalSpec:
    mu: float
    sigma: float
    n_papers: int
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma > 0) or not math.isfinite(self.sigma):
            raise DoubleRankError(f"sigma must be > 0, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise DoubleRankError(f"mu must be finite, got {self.mu}")
        if int(self.n_papers) != self.n_papers or self.n_papers < 1:
            raise DoubleRankError(f"n_papers must be a positive integer, got {self.n_papers}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DoubleRankError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class PercentilePoint:
    x: float
    n_local: float
    share: float


@dataclass(frozen=True, eq=False)
class PercentileSeries:
    """Local paper counts inside the world top-x percentiles.

    ``world_size`` is None for series built from published shares, where
    no world set exists. ``synthetic_counts`` marks series whose counts were
    derived from shares with an assumed local size of 100.
    ``local_percentiles`` keeps the per-paper world percentiles when the
    series came from raw data (used by the per-paper ML estimator).
    """

    world_label: str
    local_label: str
    world_size: Optional[int]
    local_size: float
    points: tuple
    synthetic_counts: bool = False
    local_percentiles: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.local_size > 0:
            raise DoubleRankError("local_size must be positive")
        if self.world_size is not None and self.world_size < 1:
            raise DoubleRankError("world_size must be positive")
        pts = tuple(p if isinstance(p, PercentilePoint) else PercentilePoint(*p) for p in self.points)
        if not pts:
            raise BadGrid("percentile series has no points")
        prev_x, prev_n = 0.0, -math.inf
        for p in pts:
            if not 0 < p.x <= 100:
                raise BadGrid(f"percentile {p.x} outside (0, 100]")
            if p.x <= prev_x:
                raise BadGrid("percentiles must be strictly increasing")
            if p.n_local < prev_n:
                raise NonMonotone(f"local count decreases at x={p.x}")
            if p.n_local < 0 or p.n_local > self.local_size * (1 + 1e-12):
                raise DoubleRankError(f"local count {p.n_local} outside [0, {self.local_size}]")
            prev_x, prev_n = p.x, p.n_local
        if pts[-1].x == 100 and not math.isclose(pts[-1].n_local, self.local_size, rel_tol=1e-9):
            raise DoubleRankError("local count at x=100 must equal local_size")
        object.__setattr__(self, "points", pts)
        if self.local_percentiles is not None:
            object.__setattr__(
                self, "local_percentiles", _frozen_array(self.local_percentiles, np.float64)
            )

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def n_local(self) -> np.ndarray:
        return np.array([p.n_local for p in self.points])

    @property
    def shares(self) -> np.ndarray:
        return np.array([p.share for p in self.points])

    def with_points(self, points) -> "PercentileSeries":
        return PercentileSeries(
            self.world_label,
            self.local_label,
            self.world_size,
            self.local_size,
            tuple(points),
            self.synthetic_counts,
            self.local_percentiles,
        )


@dataclass(frozen=True)
class PowerLawFit:
    """A fitted power law ``a * x**alpha``.

    Tail fits of rank against citations (``decreasing=True``) follow the
    ``a * x**(-alpha)`` convention, so alpha stays positive there too.
    CLOSED_FORM fits have no residual freedom: chi2, dof and p_value are None.
    """

    a: float
    alpha: float
    method: str
    chi2: Optional[float]
    dof: Optional[int]
    p_value: Optional[float]
    points_used: tuple
    decreasing: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise DoubleRankError(f"unknown fit method {self.method!r}")
        if not (self.a > 0) or not math.isfinite(self.a):
            raise DoubleRankError(f"prefactor must be positive and finite, got {self.a}")
        if not math.isfinite(self.alpha):
            raise DoubleRankError(f"exponent must be finite, got {self.alpha}")
        if self.method == "CLOSED_FORM":
            if not (self.chi2 is None and self.dof is None and self.p_value is None):
                raise DoubleRankError("closed-form fits carry no goodness-of-fit statistics")
        else:
            if self.dof is None or self.dof < 1:
                raise NonPositiveDof(f"dof must be >= 1, got {self.dof}")
            if self.chi2 is None or not self.chi2 >= 0:
                raise DoubleRankError(f"chi2 must be >= 0, got {self.chi2}")
            if self.p_value is None or not 0 <= self.p_value <= 1:
                raise DoubleRankError(f"p_value must lie in [0, 1], got {self.p_value}")
        object.__setattr__(
            self, "points_used", tuple((float(x), float(y)) for x, y in self.points_used)
        )

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        exponent = -self.alpha if self.decreasing else self.alpha
        out = self.a * x**exponent
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IndicatorSet:
    """Breakthrough indicators derived from one double-rank fit.

    ``quality`` is "ok" unless alpha <= 0, in which case e_p >= 1 and the
    values are reported as computed.
    """

    e_p: float
    p_top_1: float
    p_top_10: float
    p_top_001: float
    n_total: float
    alpha: float
    percentile: float
    prob: float
    freq: float
    method: str
    quality: str = "ok"

    def prob_at(self, x: float) -> float:
        if not 0 < x <= 100:
            raise BadPercentile(f"percentile {x} outside (0, 100]")
        return (x / 100.0) ** self.alpha

    def freq_at(self, x: float) -> float:
        return self.n_total * self.prob_at(x)


@dataclass(frozen=True)
class CssResult:
    thresholds: tuple
    class_shares: tuple
    k: int

    def __post_init__(self):
        th = tuple(float(t) for t in self.thresholds)
        sh = tuple(float(s) for s in self.class_shares)
        if len(th) != self.k or len(sh) != self.k + 1:
            raise DoubleRankError("CSS result needs k thresholds and k+1 shares")
        if any(b <= a for a, b in zip(th, th[1:])):
            raise DoubleRankError("CSS thresholds must be strictly increasing")
        if any(s < 0 for s in sh) or abs(sum(sh) - 100.0) > 1e-9:
            raise DoubleRankError("CSS class shares must be >= 0 and sum to 100")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "class_shares", sh)
