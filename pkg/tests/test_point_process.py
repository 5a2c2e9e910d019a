import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nfipp.exceptions import AlignmentError, ArgumentError, DateRangeError
from nfipp.point_process import (
    LOG_ZERO,
    DailyCountSeries,
    IntensitySeries,
    expected_count,
    poisson_log_pmf,
    sample_count,
    sequence_log_likelihood,
)

D0 = dt.date(2000, 1, 1)


@given(st.integers(0, 60), st.floats(1e-3, 50.0), st.floats(0.1, 5.0))
def test_log_pmf_matches_scipy(k, lam, tau):
    assert poisson_log_pmf(k, lam, tau) == pytest.approx(stats.poisson.logpmf(k, lam * tau), rel=1e-12, abs=1e-12)


def test_zero_rate_conventions():
    assert poisson_log_pmf(0, 0.0) == 0.0
    assert poisson_log_pmf(3, 0.0) == LOG_ZERO
    # -inf is absorbing under summation
    assert sequence_log_likelihood(
        DailyCountSeries([0, 2], D0), IntensitySeries([0.5, 0.0], D0)
    ) == LOG_ZERO


@pytest.mark.parametrize("k, lam", [(-1, 1.0), (1.5, 1.0), (1, -0.1), (1, float("nan"))])
def test_invalid_pmf_arguments(k, lam):
    with pytest.raises(ArgumentError):
        poisson_log_pmf(k, lam)


def test_pmf_array_broadcast():
    out = poisson_log_pmf(np.arange(4), np.full(4, 2.0))
    np.testing.assert_allclose(out, stats.poisson.logpmf(np.arange(4), 2.0), rtol=1e-12)


def test_sequence_log_likelihood_is_sum_of_terms():
    k = DailyCountSeries([0, 1, 4, 2], D0)
    lam = IntensitySeries([0.3, 1.2, 3.5, 2.0], D0)
    want = sum(stats.poisson.logpmf(a, b) for a, b in zip(k.counts, lam.values))
    assert sequence_log_likelihood(k, lam) == pytest.approx(want, rel=1e-12)
    assert sequence_log_likelihood(DailyCountSeries([], D0), IntensitySeries([], D0)) == 0.0


def test_sequence_alignment_checked():
    with pytest.raises(AlignmentError):
        sequence_log_likelihood(DailyCountSeries([1, 2], D0), IntensitySeries([1.0], D0))
    with pytest.raises(AlignmentError):
        sequence_log_likelihood(DailyCountSeries([1], D0), IntensitySeries([1.0], D0 + dt.timedelta(1)))


def test_sample_count_moments():
    rng = np.random.default_rng(0)
    draws = np.array([sample_count(2.5, 1.0, rng) for _ in range(20000)])
    assert draws.mean() == pytest.approx(2.5, rel=0.03)
    assert draws.var() == pytest.approx(2.5, rel=0.05)
    assert sample_count(0.0, 1.0, rng) == 0


def test_expected_count_windows():
    lam = IntensitySeries(np.arange(10, dtype=float), D0)
    assert expected_count(lam) == 45.0
    assert expected_count(lam, (D0 + dt.timedelta(2), D0 + dt.timedelta(4))) == 9.0
    assert expected_count(lam, tau=2.0) == 90.0
    with pytest.raises(DateRangeError):
        expected_count(lam, (D0, D0 + dt.timedelta(10)))


def test_series_validation_and_windows():
    s = DailyCountSeries([1, 0, 3], D0, "AFG")
    assert s.end_date == D0 + dt.timedelta(2)
    assert list(s.window(D0 + dt.timedelta(1), s.end_date).counts) == [0, 3]
    with pytest.raises(DateRangeError):
        s.window(D0 - dt.timedelta(1), D0)
    with pytest.raises(ArgumentError):
        DailyCountSeries([-1], D0)
    with pytest.raises(ArgumentError):
        IntensitySeries([np.inf], D0)
    with pytest.raises(ValueError):
        s.counts[0] = 5  # read-only


@settings(max_examples=25)
@given(st.floats(0.05, 20.0))
def test_pmf_sums_to_one(lam):
    k = np.arange(0, int(lam * 10 + 60))
    assert np.exp(poisson_log_pmf(k, lam)).sum() == pytest.approx(1.0, abs=1e-10)
