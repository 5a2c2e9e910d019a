"""Daily-binned Poisson process primitives.

Counts in each interval ``[t, t + tau)`` are independent Poisson variables with
mean ``lambda_t * tau``. Intensities are per day, so ``tau`` is 1 everywhere in
the protocol; it stays an explicit argument for unit-free toy scenarios.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import AlignmentError, ArgumentError, DateRangeError

#: Log-probability of an impossible outcome; absorbing under addition.
LOG_ZERO = -math.inf

ONE_DAY = dt.timedelta(days=1)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise ArgumentError(f"expected a 1-d sequence, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DailyCountSeries:
    """Gap-free daily event counts for one country.

    ``counts[i]`` is the number of events on ``start_date + i`` days.
    """

    counts: np.ndarray
    start_date: dt.date
    country: str = ""

    def __post_init__(self):
        raw = np.asarray(self.counts)
        if raw.size and not np.all(np.isfinite(raw.astype(float))):
            raise ArgumentError("counts must be finite")
        if raw.size and np.any(raw.astype(float) != np.round(raw.astype(float))):
            raise ArgumentError("counts must be integers")
        arr = _frozen(raw, np.int64)
        if np.any(arr < 0):
            raise ArgumentError("counts must be non-negative")
        object.__setattr__(self, "counts", arr)

    def __len__(self):
        return len(self.counts)

    @property
    def end_date(self):
        """Last covered date (inclusive)."""
        return self.start_date + (len(self) - 1) * ONE_DAY

    def dates(self):
        return [self.start_date + i * ONE_DAY for i in range(len(self))]

    def index_of(self, date):
        return (date - self.start_date).days

    def window(self, start, end):
        """Sub-series covering ``start..end`` inclusive."""
        i, j = self.index_of(start), self.index_of(end)
        if i < 0 or j >= len(self) or j < i - 1:
            raise DateRangeError(
                f"window {start}..{end} outside {self.start_date}..{self.end_date}"
            )
        return DailyCountSeries(self.counts[i : j + 1], start, self.country)

    def __eq__(self, other):
        if not isinstance(other, DailyCountSeries):
            return NotImplemented
        return (
            self.start_date == other.start_date
            and self.country == other.country
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class IntensitySeries:
    """Per-step forward intensities starting at ``start_date``."""

    values: np.ndarray
    start_date: dt.date
    step: dt.timedelta = field(default=ONE_DAY)

    def __post_init__(self):
        arr = _frozen(self.values, np.float64)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ArgumentError("intensities must be finite and non-negative")
        if self.step != ONE_DAY:
            raise ArgumentError("only a one-day step is supported")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    @property
    def end_date(self):
        return self.start_date + (len(self) - 1) * self.step

    def __eq__(self, other):
        if not isinstance(other, IntensitySeries):
            return NotImplemented
        return self.start_date == other.start_date and np.array_equal(
            self.values, other.values
        )


def _check_tau(tau):
    if not tau > 0 or not math.isfinite(tau):
        raise ArgumentError(f"tau must be a positive finite duration, got {tau}")


def poisson_log_pmf(k, lam, tau=1.0):
    """Log-probability of ``k`` events in an interval of length ``tau``.

    Parameters
    ----------
    k : int or array_like of int
        Observed count(s), ``k >= 0``.
    lam : float or array_like
        Intensity per unit time, ``lam >= 0``.
    tau : float, default=1.0
        Interval length.

    Returns
    -------
    float or ndarray
        ``k * log(lam * tau) - lam * tau - log(k!)``. With ``lam == 0`` this is
        0 for ``k == 0`` and :data:`LOG_ZERO` otherwise.
    """
    _check_tau(tau)
    k_arr = np.asarray(k, dtype=np.float64)
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(k_arr < 0) or np.any(k_arr != np.floor(k_arr)):
        raise ArgumentError("k must be a non-negative integer")
    if np.any(~(lam_arr >= 0)):
        raise ArgumentError("lambda must be non-negative")
    mu = lam_arr * tau
    with np.errstate(divide="ignore"):
        out = xlogy(k_arr, mu) - mu - gammaln(k_arr + 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def _check_aligned(counts, intensities):
    if counts.start_date != intensities.start_date or len(counts) != len(intensities):
        raise AlignmentError(
            f"counts ({counts.start_date}, n={len(counts)}) and intensities "
            f"({intensities.start_date}, n={len(intensities)}) are not aligned"
        )


def sequence_log_likelihood(counts, intensities, tau=1.0):
    """Sum of per-day Poisson log-probabilities; 0.0 for empty series."""
    _check_aligned(counts, intensities)
    if len(counts) == 0:
        return 0.0
    return float(np.sum(poisson_log_pmf(counts.counts, intensities.values, tau)))


def sample_count(lam, tau, rng):
    """Draw Poisson(``lam * tau``) count(s) from the caller-owned generator ``rng``."""
    _check_tau(tau)
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(~(lam_arr >= 0)) or not np.all(np.isfinite(lam_arr)):
        raise ArgumentError("lambda must be finite and non-negative")
    draw = rng.poisson(lam_arr * tau)
    if np.ndim(draw) == 0:
        return int(draw)
    return draw.astype(np.int64)


def expected_count(intensities, window=None, tau=1.0):
    """Expected number of events ``sum(lambda_t) * tau`` over an inclusive date window.

    ``window`` is a ``(first_date, last_date)`` pair; ``None`` means the whole
    series.
    """
    _check_tau(tau)
    if window is None:
        return float(np.sum(intensities.values) * tau)
    start, end = window
    i = (start - intensities.start_date).days
    j = (end - intensities.start_date).days
    if i < 0 or j >= len(intensities) or j < i:
        raise DateRangeError(
            f"window {start}..{end} outside {intensities.start_date}..{intensities.end_date}"
        )
    return float(np.sum(intensities.values[i : j + 1]) * tau)
