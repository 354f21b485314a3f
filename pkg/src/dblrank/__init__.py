"""Percentile-based double-rank analysis of citation distributions."""

from .core import (
    CitationSet,
    CssResult,
    DoubleRankError,
    IndicatorSet,
    LognormalSpec,
    PercentilePoint,
    PercentileSeries,
    PowerLawFit,
    validate_citation_set,
)
from .distkit import css_classify, histogram, log_bins, rank_frequency, tail_power_fit
from .doublerank import PreparedWorld, global_ranks, percentile_series, series_from_shares
from .fitkit import clean_series, fit_lm, fit_lr, fit_ml, score_fit
from .indicators import ep_from_alpha, ep_from_ptops, freq_at, indicator_set, p_top_001, prob_at
from .synthgen import compose_world, sample_lognormal

__version__ = "0.1.0"
