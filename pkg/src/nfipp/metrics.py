"""Excitation-causality metrics comparing terror-only and terror+climate forecasts.

* likelihood gain: ``tanh(alpha * (L_climate - L_terror))`` per year;
* prediction rate: ``min(K_hat, K) / max(K_hat, K)`` with ``K_hat = sum(lambda_t)``;
* climate gain ratio: extra matched events from climate data, over positive-gain
  years, divided by all observed events.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ArgumentError, DateRangeError

TP_DEFINITIONS = ("count_match", "day_hit")


def likelihood_gain(l1, l2, alpha):
    """``tanh(alpha * (l2 - l1))``; ``l1`` is the terror-only log-likelihood."""
    if not (math.isfinite(l1) and math.isfinite(l2)):
        raise ArgumentError("log-likelihoods must be finite")
    if not alpha > 0 or not math.isfinite(alpha):
        raise ArgumentError("alpha must be positive")
    return math.tanh(alpha * (l2 - l1))


def prediction_rate(k_hat, k):
    """Ratio of the smaller to the larger of predicted and observed counts.

    Both zero is a perfect match (1.0).
    """
    if not (k_hat >= 0 and k >= 0) or not math.isfinite(k_hat):
        raise ArgumentError("counts must be finite and non-negative")
    hi = max(k_hat, k)
    if hi == 0:
        return 1.0
    return min(k_hat, k) / hi


def adaptive_alpha(n_days):
    """Default scaling ``1 / max(1, 0.05 * n_days)`` for a window of ``n_days``."""
    return 1.0 / max(1.0, 0.05 * n_days)


@dataclass(frozen=True)
class MetricsConfig:
    """``alpha=None`` selects :func:`adaptive_alpha` per evaluated year.

    ``tp_definition="count_match"`` counts ``min(K_hat, K)`` matched events per
    year. ``"day_hit"`` instead counts the events on days whose forecast
    intensity is at least ``hit_threshold``.
    """

    alpha: float | None = None
    tp_definition: str = "count_match"
    hit_threshold: float = 0.5

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ArgumentError("alpha must be positive")
        if self.tp_definition not in TP_DEFINITIONS:
            raise ArgumentError(f"tp_definition must be one of {TP_DEFINITIONS}")

    def alpha_for(self, n_days):
        return adaptive_alpha(n_days) if self.alpha is None else float(self.alpha)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class YearEvaluation:
    year: int
    ll_terror_only: float
    ll_with_climate: float
    likelihood_gain: float
    expected_count_terror: float
    expected_count_climate: float
    observed_count: int
    prediction_rate_terror: float
    prediction_rate_climate: float
    alpha: float
    tp_terror: float
    tp_climate: float

    def to_dict(self):
        return asdict(self)


def true_positive_count(k_hat, k):
    """Matched event count ``min(K_hat, K)``."""
    return float(min(k_hat, k))


def day_hit_count(intensities, counts, threshold):
    """Events falling on days with ``lambda_t >= threshold``."""
    intensities = np.asarray(intensities, dtype=np.float64)
    counts = np.asarray(counts)
    return float(np.sum(counts[intensities >= threshold]))


def evaluate_year(year, counts, lam_terror, lam_climate, config=MetricsConfig()):
    """All per-year quantities from daily counts and both modes' daily intensities."""
    from .point_process import poisson_log_pmf

    counts = np.asarray(counts)
    lam_terror = np.asarray(lam_terror, dtype=np.float64)
    lam_climate = np.asarray(lam_climate, dtype=np.float64)
    if not (len(counts) == len(lam_terror) == len(lam_climate)):
        raise ArgumentError("counts and intensities must have equal length")
    alpha = config.alpha_for(len(counts))
    l1 = float(np.sum(poisson_log_pmf(counts, lam_terror)))
    l2 = float(np.sum(poisson_log_pmf(counts, lam_climate)))
    k = int(counts.sum())
    kt = float(lam_terror.sum())
    kc = float(lam_climate.sum())
    if config.tp_definition == "count_match":
        tp_t, tp_c = true_positive_count(kt, k), true_positive_count(kc, k)
    else:
        tp_t = day_hit_count(lam_terror, counts, config.hit_threshold)
        tp_c = day_hit_count(lam_climate, counts, config.hit_threshold)
    return YearEvaluation(
        year=int(year),
        ll_terror_only=l1,
        ll_with_climate=l2,
        likelihood_gain=likelihood_gain(l1, l2, alpha),
        expected_count_terror=kt,
        expected_count_climate=kc,
        observed_count=k,
        prediction_rate_terror=prediction_rate(kt, k),
        prediction_rate_climate=prediction_rate(kc, k),
        alpha=alpha,
        tp_terror=tp_t,
        tp_climate=tp_c,
    )


def climate_gain_ratio(years, counts=None):
    """``max(0, sum of TP differences over positive-gain years) / total observed``.

    Parameters
    ----------
    years : list of YearEvaluation
    counts : DailyCountSeries, optional
        When given, every evaluated year must be fully covered and its
        ``observed_count`` must agree with the series.

    Returns
    -------
    float
        0 when nothing was observed.
    """
    if not years:
        raise ArgumentError("at least one evaluated year is required")
    if counts is not None:
        for y in years:
            first, last = dt.date(y.year, 1, 1), dt.date(y.year, 12, 31)
            if first < counts.start_date or last > counts.end_date:
                raise DateRangeError(f"year {y.year} not covered by the count series")
            if int(counts.window(first, last).counts.sum()) != y.observed_count:
                raise DateRangeError(f"observed count for {y.year} disagrees with the series")
    total = sum(y.observed_count for y in years)
    if total == 0:
        return 0.0
    diff = sum(y.tp_climate - y.tp_terror for y in years if y.likelihood_gain > 0)
    return max(0.0, diff) / total
