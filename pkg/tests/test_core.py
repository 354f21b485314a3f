import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dblrank.core import (
    CitationSet,
    CssResult,
    DoubleRankError,
    EmptySet,
    LognormalSpec,
    NegativeCount,
    NonIntegralCount,
    NonMonotone,
    BadGrid,
    PercentileSeries,
    PowerLawFit,
    validate_citation_set,
)


def test_minimal_valid_set():
    cs = validate_citation_set([0, 3, 7], "s1")
    assert cs.size == 3
    assert cs.label == "s1"
    assert cs.counts.dtype == np.int64


def test_empty_set_rejected():
    with pytest.raises(EmptySet):
        validate_citation_set([], "x")


def test_negative_count_rejected():
    with pytest.raises(NegativeCount):
        validate_citation_set([5, -1], "x")


@pytest.mark.parametrize("bad", [[1.5], [float("nan")], ["a"], [True]])
def test_non_integral_rejected(bad):
    with pytest.raises(NonIntegralCount):
        validate_citation_set(bad, "x")


def test_empty_label_rejected():
    with pytest.raises(DoubleRankError):
        validate_citation_set([1], "")


def test_counts_are_read_only():
    cs = validate_citation_set([1, 2], "a")
    with pytest.raises(ValueError):
        cs.counts[0] = 9


@given(st.lists(st.one_of(st.integers(-5, 10**6), st.floats(-10, 1e6), st.just(float("nan"))), max_size=20))
def test_rejection_iff_invariant_violated(raw):
    valid = bool(raw) and all(
        math.isfinite(v) and v >= 0 and float(v) == math.floor(v) for v in raw
    )
    if valid:
        cs = validate_citation_set(raw, "g")
        assert cs.size == len(raw)
        assert np.array_equal(cs.counts, np.array([int(v) for v in raw]))
    else:
        with pytest.raises(DoubleRankError):
            validate_citation_set(raw, "g")


@pytest.mark.parametrize("kw", [dict(sigma=0), dict(sigma=-1), dict(n_papers=0), dict(seed=-1), dict(seed=2**64)])
def test_lognormal_spec_invariants(kw):
    args = dict(mu=1.7, sigma=1.0, n_papers=10, seed=1) | kw
    with pytest.raises(DoubleRankError):
        LognormalSpec(**args)


def test_series_invariants():
    ok = PercentileSeries("w", "l", 10, 4, ((1, 1, 25), (100, 4, 100)))
    assert ok.n_local.tolist() == [1, 4]
    with pytest.raises(BadGrid):
        PercentileSeries("w", "l", 10, 4, ((5, 1, 25), (1, 2, 50)))
    with pytest.raises(NonMonotone):
        PercentileSeries("w", "l", 10, 4, ((1, 3, 75), (5, 2, 50)))
    with pytest.raises(DoubleRankError):
        PercentileSeries("w", "l", 10, 4, ((1, 1, 25), (100, 3, 75)))
    with pytest.raises(BadGrid):
        PercentileSeries("w", "l", 10, 4, ((0, 0, 0),))


def test_powerlaw_fit_invariants():
    PowerLawFit(1.0, 1.0, "LR", 0.0, 1, 1.0, ((1, 1), (2, 2), (3, 3)))
    PowerLawFit(1.0, 1.0, "CLOSED_FORM", None, None, None, ((1, 1), (10, 10)))
    with pytest.raises(DoubleRankError):
        PowerLawFit(0.0, 1.0, "LR", 0.0, 1, 1.0, ())
    with pytest.raises(DoubleRankError):
        PowerLawFit(1.0, 1.0, "LR", 0.0, 0, 1.0, ())
    with pytest.raises(DoubleRankError):
        PowerLawFit(1.0, 1.0, "LR", 0.0, 1, 1.5, ())
    with pytest.raises(DoubleRankError):
        PowerLawFit(1.0, 1.0, "CLOSED_FORM", 0.0, 1, 1.0, ())
    with pytest.raises(DoubleRankError):
        PowerLawFit(1.0, 1.0, "XX", 0.0, 1, 1.0, ())


def test_css_result_invariants():
    CssResult((1.0, 2.0), (70.0, 20.0, 10.0), 2)
    with pytest.raises(DoubleRankError):
        CssResult((2.0, 1.0), (70.0, 20.0, 10.0), 2)
    with pytest.raises(DoubleRankError):
        CssResult((1.0,), (70.0, 20.0), 1)
