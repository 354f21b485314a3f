"""Breakthrough indicators from a double-rank power law."""

from __future__ import annotations

import math
from typing import Optional

from .core import BadCounts, BadPercentile, IndicatorSet, PowerLawFit

DEFAULT_PERCENTILE = 0.01


def _check_x(x: float) -> None:
    if not 0 < x <= 100:
        raise BadPercentile(f"percentile {x} outside (0, 100]")


def prob_at(fit: PowerLawFit, x: float) -> float:
    """Probability that a local paper lands in the world top-x percent."""
    _check_x(x)
    return (x / 100.0) ** fit.alpha


def freq_at(fit: PowerLawFit, x: float, n_total: Optional[float] = None) -> float:
    """Expected number of local papers in the world top-x percent.

    With ``n_total`` this is ``n_total * prob_at(fit, x)``. Without it the
    fitted prefactor is used directly (``A * x**alpha``), which is how
    share-based fits extrapolate to the 100th percentile.
    """
    _check_x(x)
    if n_total is None:
        return fit.a * x**fit.alpha
    if n_total < 1:
        raise BadCounts(f"n_total must be >= 1, got {n_total}")
    return n_total * prob_at(fit, x)


def ep_from_alpha(alpha: float) -> float:
    return 10.0 ** (-alpha)


def ep_from_ptops(p_top1: float, p_top10: float) -> tuple[float, float, float]:
    """(e_p, A, alpha) from the top-1% and top-10% paper counts."""
    if not (p_top1 > 0 and p_top10 > 0):
        raise BadCounts("P_top1% and P_top10% must both be positive")
    if p_top10 < p_top1:
        raise BadCounts("P_top10% cannot be smaller than P_top1%")
    alpha = math.log10(p_top10 / p_top1)
    return p_top1 / p_top10, float(p_top1), alpha


def closed_form_fit(p_top1: float, p_top10: float) -> PowerLawFit:
    """Two-point power law through (1, P_top1%) and (10, P_top10%)."""
    _, a, alpha = ep_from_ptops(p_top1, p_top10)
    return PowerLawFit(a, alpha, "CLOSED_FORM", None, None, None, ((1.0, p_top1), (10.0, p_top10)))


def p_top_001(n_total: float, e_p: float) -> float:
    """Expected papers in the world top 0.01%: N * e_p**4."""
    if n_total < 1:
        raise BadCounts(f"n_total must be >= 1, got {n_total}")
    return n_total * e_p**4


def indicator_set(
    fit: PowerLawFit,
    n_total: float,
    percentile: float = DEFAULT_PERCENTILE,
) -> IndicatorSet:
    """All indicators for one group of ``n_total`` papers."""
    _check_x(percentile)
    if n_total < 1:
        raise BadCounts(f"n_total must be >= 1, got {n_total}")
    e_p = ep_from_alpha(fit.alpha)
    return IndicatorSet(
        e_p=e_p,
        p_top_1=freq_at(fit, 1.0, n_total),
        p_top_10=freq_at(fit, 10.0, n_total),
        p_top_001=p_top_001(n_total, e_p),
        n_total=float(n_total),
        alpha=fit.alpha,
        percentile=float(percentile),
        prob=prob_at(fit, percentile),
        freq=freq_at(fit, percentile, n_total),
        method=fit.method,
        quality="ok" if 0 < e_p < 1 else "alpha_nonpositive",
    )
