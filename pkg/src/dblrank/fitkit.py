"""Power-law fits N(x) = A x**alpha to percentile series, and their scoring.

Three estimators are provided: least squares on log-transformed data (LR),
Levenberg-Marquardt in linear space (LM) and maximum likelihood on the
local papers' world percentiles (ML). Goodness of fit uses Pearson's
chi-square with expected-count denominators.
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaincc

from .core import (
    Degenerate,
    DoubleRankError,
    NoConvergence,
    NonPositiveDof,
    PercentileSeries,
    PowerLawFit,
    TooFewPoints,
    ZeroCount,
)

log = logging.getLogger(__name__)

DEFAULT_EXCLUDE = (100.0,)
DEFAULT_MIN_COUNT = 10


def chi2_pvalue(chi2: float, dof: int) -> float:
    """Upper-tail chi-square probability, Q(dof/2, chi2/2)."""
    if dof < 1:
        raise NonPositiveDof(f"dof must be >= 1, got {dof}")
    if chi2 < 0:
        raise DoubleRankError(f"chi2 must be >= 0, got {chi2}")
    return float(gammaincc(dof / 2.0, chi2 / 2.0))


def ols_loglog(x, y) -> tuple[float, float]:
    """Intercept and slope of ln(y) regressed on ln(x)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    lx_mean, ly_mean = lx.mean(), ly.mean()
    dx = lx - lx_mean
    slope = float(np.dot(dx, ly - ly_mean) / np.dot(dx, dx))
    return float(ly_mean - slope * lx_mean), slope


def _fit_points(series, exclude: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, PercentileSeries):
        x, n = series.x, series.n_local
    else:
        pairs = sorted((float(a), float(b)) for a, b in series)
        x = np.array([p[0] for p in pairs])
        n = np.array([p[1] for p in pairs])
    excl = np.asarray(sorted(exclude or ()), dtype=float)
    keep = ~np.isclose(x[:, None], excl[None, :], rtol=0, atol=1e-9).any(axis=1) if excl.size else np.ones(x.size, bool)
    x, n = x[keep], n[keep]
    if x.size < 3:
        raise TooFewPoints(f"{x.size} points left to fit, need at least 3")
    return x, n


def _scored(a: float, alpha: float, method: str, x: np.ndarray, n: np.ndarray) -> PowerLawFit:
    points = tuple(zip(x.tolist(), n.tolist()))
    chi2, dof, p = _pearson(a, alpha, x, n)
    return PowerLawFit(a, alpha, method, chi2, dof, p, points)


def _pearson(a, alpha, x, n):
    expected = a * x**alpha
    chi2 = float(np.sum((n - expected) ** 2 / expected))
    dof = x.size - 2
    return chi2, dof, chi2_pvalue(chi2, dof)


def fit_lr(series, exclude: Iterable[float] = DEFAULT_EXCLUDE) -> PowerLawFit:
    """Ordinary least squares of ln N on ln x."""
    x, n = _fit_points(series, exclude)
    if np.any(n <= 0):
        raise ZeroCount(f"zero local count at x={x[n <= 0][0]:g}; clean the series first")
    log_a, alpha = ols_loglog(x, n)
    return _scored(math.exp(log_a), alpha, "LR", x, n)


def fit_lm(
    series,
    exclude: Iterable[float] = DEFAULT_EXCLUDE,
    lam0: float = 1e-3,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> PowerLawFit:
    """Least squares in linear space by Levenberg-Marquardt, started from LR.

    Damping uses Marquardt's diagonal scaling with lambda divided by 10 after
    an accepted step and multiplied by 10 after a rejected one.
    """
    x, n = _fit_points(series, exclude)
    pos = n > 0
    if np.count_nonzero(pos) < 2:
        raise ZeroCount("need at least two non-zero counts to initialise LM")
    log_a, alpha = ols_loglog(x[pos], n[pos])
    p = np.array([math.exp(log_a), alpha])
    lx = np.log(x)

    def sse(q):
        return float(np.sum((n - q[0] * x ** q[1]) ** 2))

    cost = sse(p)
    lam = lam0
    change = math.inf
    for it in range(max_iter):
        f = p[0] * x ** p[1]
        J = np.column_stack([x ** p[1], f * lx])
        g = J.T @ (n - f)
        H = J.T @ J
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(H + lam * np.diag(np.diag(H)), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = p + step
            if trial[0] > 0 and np.all(np.isfinite(trial)):
                trial_cost = sse(trial)
                if trial_cost <= cost:
                    change = float(np.max(np.abs(step) / np.maximum(np.abs(p), 1e-300)))
                    p, cost = trial, trial_cost
                    lam /= 10
                    accepted = True
                    break
            lam *= 10
        if not accepted:
            # no descent direction left: p is a minimum to working precision
            change = 0.0
            break
        if change < tol:
            break
    else:
        if change > math.sqrt(tol):
            raise NoConvergence(f"LM stopped after {max_iter} iterations, last relative step {change:.3g}")
    if not (p[0] > 0 and np.all(np.isfinite(p))):
        raise NoConvergence(f"LM produced invalid parameters {p.tolist()}")
    log.debug("LM finished after %d iterations, cost %.6g", it + 1, cost)
    return _scored(float(p[0]), float(p[1]), "LM", x, n)


def ml_alpha_per_paper(percentiles, x_max: float = 100.0) -> float:
    """Closed-form MLE of alpha for P(X <= x) = (x / x_max)**alpha.

    Percentiles above ``x_max`` are outside the fitted range and ignored.
    """
    pct = np.asarray(percentiles, dtype=float)
    pct = pct[pct <= x_max]
    if pct.size == 0:
        raise TooFewPoints("no percentiles at or below x_max")
    if np.any(pct <= 0):
        raise DoubleRankError("percentiles must be positive")
    total = float(np.sum(np.log(x_max / pct)))
    if total == 0.0:
        raise Degenerate("every paper sits at x_max; the exponent diverges")
    return pct.size / total


def grouped_loglik(alpha: float, x, n) -> float:
    """Multinomial log-likelihood of cumulative counts ``n`` at grid ``x``.

    Bin j holds the papers between x[j-1] and x[j]; the model probability
    of that bin is (x[j]/x_max)**alpha - (x[j-1]/x_max)**alpha.
    """
    x, n = np.asarray(x, float), np.asarray(n, float)
    c = np.diff(np.r_[0.0, n])
    a = np.log(x / x[-1])
    d = -np.diff(a)  # log(x[j-1]/x[j]) < 0
    logp = np.empty_like(a)
    logp[0] = alpha * a[0]
    logp[1:] = alpha * a[1:] + np.log(-np.expm1(alpha * d))
    mask = c > 0
    return float(np.sum(c[mask] * logp[mask]))


def _grouped_score(alpha: float, a: np.ndarray, d: np.ndarray, c: np.ndarray) -> float:
    with np.errstate(over="ignore"):
        return float(c[0] * a[0] + np.sum(c[1:] * (a[1:] - d / np.expm1(-alpha * d))))


def ml_alpha_grouped(x, n) -> float:
    """MLE of alpha from cumulative grid counts (log-likelihood is concave)."""
    x, n = np.asarray(x, float), np.asarray(n, float)
    c = np.diff(np.r_[0.0, n])
    if np.any(c < 0):
        raise DoubleRankError("cumulative counts must be non-decreasing")
    a = np.log(x / x[-1])
    d = -np.diff(a)
    lo, hi = 1e-8, 1e3
    s_lo, s_hi = _grouped_score(lo, a, d, c), _grouped_score(hi, a, d, c)
    if s_lo <= 0 or s_hi >= 0:
        raise Degenerate("grouped likelihood has no interior maximum")
    return float(brentq(_grouped_score, lo, hi, args=(a, d, c), xtol=1e-15, rtol=4 * np.finfo(float).eps))


def fit_ml(
    series,
    exclude: Iterable[float] = DEFAULT_EXCLUDE,
    percentiles=None,
    per_paper: Optional[bool] = None,
) -> PowerLawFit:
    """Maximum-likelihood fit on local papers' world percentiles.

    Per-paper percentiles (given explicitly, or carried by a series built
    from raw data) use the closed form; otherwise the grid counts are
    treated as grouped draws. ``per_paper=False`` forces the grouped route.
    A is implied by alpha and the count at the largest fitted percentile.
    """
    x, n = _fit_points(series, exclude)
    if percentiles is None and per_paper is not False and isinstance(series, PercentileSeries):
        percentiles = series.local_percentiles
    if per_paper and percentiles is None:
        raise DoubleRankError("per-paper ML requested but no per-paper percentiles available")
    x_max = float(x[-1])
    if percentiles is not None and per_paper is not False:
        pct = np.asarray(percentiles, float)
        pct = pct[pct <= x_max * (1 + 1e-12)]
        alpha = ml_alpha_per_paper(np.minimum(pct, x_max), x_max)
        total = float(pct.size)
    else:
        alpha = ml_alpha_grouped(x, n)
        total = float(n[-1])
    a = total * x_max ** (-alpha)
    if not a > 0:
        raise Degenerate("no papers inside the fitted range")
    return _scored(a, alpha, "ML", x, n)


def score_fit(series, fit: PowerLawFit) -> tuple[float, int, float]:
    """Pearson chi-square, dof and p-value of ``fit`` over its fitted points."""
    if not fit.points_used:
        raise NonPositiveDof("fit carries no points")
    x = np.array([p[0] for p in fit.points_used])
    n = np.array([p[1] for p in fit.points_used])
    if series is not None and isinstance(series, PercentileSeries):
        grid = series.x
        if not np.isclose(x[:, None], grid[None, :], rtol=0, atol=1e-9).any(axis=1).all():
            raise DoubleRankError("fit points do not belong to this series")
    if x.size - 2 < 1:
        raise NonPositiveDof(f"{x.size} points leave no degrees of freedom")
    return _pearson(fit.a, fit.alpha, x, n)


def clean_series(series: PercentileSeries, min_count: float = DEFAULT_MIN_COUNT) -> PercentileSeries:
    """Drop low-count points (below ``min_count``), always keeping the last one."""
    if min_count < 0:
        raise DoubleRankError("min_count must be >= 0")
    pts = series.points
    kept = [p for p in pts[:-1] if p.n_local >= min_count] + [pts[-1]]
    return series.with_points(kept)


def residuals(series: PercentileSeries, fit: PowerLawFit) -> list[tuple[float, float, float, float]]:
    """(x, observed, fitted, observed - fitted) at every series point.

    Values are in share points (percent of the local set), and excluded
    points are reported alongside the fitted ones.
    """
    scale = 100.0 / series.local_size
    out = []
    for p in series.points:
        pred = fit.predict(p.x) * scale
        obs = p.n_local * scale
        out.append((p.x, obs, pred, obs - pred))
    return out


FITTERS = {"LR": fit_lr, "LM": fit_lm, "ML": fit_ml}
