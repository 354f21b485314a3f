import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import FIG3_GRID, TEN_SEEDS, fig3
from dblrank.core import BadCounts, BadPercentile, PowerLawFit
from dblrank.doublerank import percentile_series
from dblrank.fitkit import clean_series, fit_lr
from dblrank.indicators import (
    closed_form_fit,
    ep_from_alpha,
    ep_from_ptops,
    freq_at,
    indicator_set,
    p_top_001,
    prob_at,
)


def fit(alpha, a=1.0):
    return PowerLawFit(a, alpha, "LR", 0.0, 1, 1.0, ((1, a), (10, a * 10**alpha), (50, a * 50**alpha)))


def test_prob_at_examples():
    assert prob_at(fit(0.37), 100) == 1.0
    assert prob_at(fit(1.0), 0.01) == pytest.approx(1e-4, rel=1e-12)
    # 10**(-4 * 0.876) evaluated directly
    assert prob_at(fit(0.876), 0.01) == pytest.approx(3.133e-4, rel=1e-3)


def test_freq_at_examples():
    assert freq_at(fit(1.0), 100, 500) == pytest.approx(500)
    assert freq_at(fit(2.0), 10, 1000) == pytest.approx(10)


def test_freq_at_a_form():
    assert freq_at(fit(0.876, 1.9911), 100) == pytest.approx(1.9911 * 100**0.876, rel=1e-12)


def test_bad_percentile():
    for x in (0, -1, 100.5):
        with pytest.raises(BadPercentile):
            prob_at(fit(1), x)
        with pytest.raises(BadPercentile):
            freq_at(fit(1), x, 10)


def test_ep_from_alpha_examples():
    assert ep_from_alpha(1.0) == pytest.approx(0.1, rel=1e-15)
    assert round(ep_from_alpha(0.876), 4) == 0.1330
    assert ep_from_alpha(0.0) == 1.0


def test_ep_from_ptops_examples():
    assert ep_from_ptops(1, 10) == pytest.approx((0.1, 1.0, 1.0))
    e_p, a, alpha = ep_from_ptops(1.94, 15.40)
    assert round(alpha, 3) == 0.900
    assert round(e_p, 3) == 0.126
    assert a == 1.94
    assert ep_from_ptops(5, 5) == (1.0, 5.0, 0.0)


@pytest.mark.parametrize("p1, p10", [(0, 1), (1, 0), (-1, 3), (5, 2)])
def test_ep_from_ptops_bad_counts(p1, p10):
    with pytest.raises(BadCounts):
        ep_from_ptops(p1, p10)


def test_p_top_001_examples():
    assert p_top_001(10_000, 0.1) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(BadCounts):
        p_top_001(0, 0.1)


def test_closed_form_fit_passes_through_both_points():
    f = closed_form_fit(1.94, 15.40)
    assert f.method == "CLOSED_FORM"
    assert (f.chi2, f.dof, f.p_value) == (None, None, None)
    assert f.predict(1) == pytest.approx(1.94)
    assert f.predict(10) == pytest.approx(15.40)


@given(st.floats(0.05, 3.0), st.floats(1, 1e7), st.floats(1e-4, 100))
def test_identity_chain(alpha, n, x):
    f = fit(alpha)
    assert freq_at(f, x, n) == pytest.approx(n * prob_at(f, x), rel=1e-12)
    assert p_top_001(n, ep_from_alpha(alpha)) == pytest.approx(freq_at(f, 0.01, n), rel=1e-12)


@given(st.floats(0.01, 1000), st.floats(0.01, 1000))
def test_ptops_round_trip(p1, p10):
    p1, p10 = sorted((p1, p10))
    e_p, _, alpha = ep_from_ptops(p1, p10)
    assert ep_from_alpha(alpha) == pytest.approx(e_p, rel=1e-12)


@given(st.floats(0.05, 3.0), st.floats(0.001, 99.0), st.floats(0.01, 1.0))
def test_monotonicity(alpha, x, dx):
    f = fit(alpha)
    assert prob_at(f, min(x + dx, 100)) > prob_at(f, x)
    assert ep_from_alpha(alpha + dx) < ep_from_alpha(alpha)


def test_indicator_set_fields():
    ind = indicator_set(fit(0.876), 1000)
    assert ind.e_p == pytest.approx(10**-0.876, rel=1e-12)
    assert ind.p_top_001 == pytest.approx(1000 * ind.e_p**4, rel=1e-12)
    assert ind.freq == pytest.approx(ind.p_top_001, rel=1e-12)
    assert ind.percentile == 0.01 and ind.method == "LR"
    assert ind.quality == "ok"
    assert ind.prob_at(100) == 1.0


def test_indicator_set_flags_nonpositive_alpha():
    ind = indicator_set(fit(-0.2), 100)
    assert ind.quality == "alpha_nonpositive"
    assert ind.e_p > 1


def test_fig3_ordering_over_seeds():
    for seed in TEN_SEEDS:
        s1, s7, _, pw = fig3(seed)
        e1 = ep_from_alpha(fit_lr(clean_series(percentile_series(s1, pw, FIG3_GRID), 10), ()).alpha)
        e7 = ep_from_alpha(fit_lr(clean_series(percentile_series(s7, pw, FIG3_GRID), 10), ()).alpha)
        assert e1 > 0.1 > e7, seed
