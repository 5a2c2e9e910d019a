"""Synthetic country panels with a known climate-to-event excitation.

Floods and droughts arrive as a Poisson process; monthly temperature anomalies
follow an AR(1) process. Daily event intensity is::

    lambda_t = base_rate * (1 + excitation * drive_t)

where ``drive_t`` counts flood/drought occurrences in the ``kernel_days`` days
before ``t`` (default: one 182-day crop cycle), or with
``kernel="exponential"`` sums ``exp(-(t - 1 - t_j) / kernel_days)`` over them.
With ``excitation = 0`` climate carries no information about events.
"""

from __future__ import annotations

import calendar
import datetime as dt
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ArgumentError
from .features import ClimatePanel
from .ingest import CountryPanel, check_country
from .point_process import ONE_DAY, DailyCountSeries


@dataclass(frozen=True)
class FixtureConfig:
    start: dt.date = dt.date(1991, 1, 1)
    end: dt.date = dt.date(2019, 12, 31)
    base_rate: float = 0.3
    excitation: float = 1.0
    kernel: str = "window"
    kernel_days: float = 182.0
    flood_drought_per_year: float = 6.0
    anomaly_persistence: float = 0.7
    anomaly_noise: float = 0.4

    def __post_init__(self):
        if self.end < self.start:
            raise ArgumentError("fixture end precedes start")
        if self.kernel not in ("window", "exponential"):
            raise ArgumentError(f"unknown kernel {self.kernel!r}")
        if self.base_rate <= 0 or self.excitation < 0 or self.kernel_days <= 0:
            raise ArgumentError("base_rate and kernel_days must be positive, excitation >= 0")

    def to_dict(self):
        d = asdict(self)
        d["start"], d["end"] = self.start.isoformat(), self.end.isoformat()
        return d

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for key in ("start", "end"):
            if isinstance(data.get(key), str):
                data[key] = dt.date.fromisoformat(data[key])
        return cls(**data)


def _monthly_anomalies(rng, n_months, config):
    mean = np.empty(n_months)
    level = 0.0
    for i in range(n_months):
        level = config.anomaly_persistence * level + rng.normal(0.0, config.anomaly_noise)
        mean[i] = level
    low = mean - np.abs(rng.normal(0.0, 0.5, n_months))
    high = mean + np.abs(rng.normal(0.0, 0.5, n_months))
    # Three decimals, as published station products are.
    return np.round(mean, 3), np.round(low, 3), np.round(high, 3)


def excitation_drive(event_days, n_days, kernel_days, kernel="window"):
    """Climate drive felt on each day from flood/drought days ``t_j < t``.

    ``kernel="window"``: number of events in the ``kernel_days`` days before ``t``.
    ``kernel="exponential"``: ``sum_j exp(-(t - 1 - t_j) / kernel_days)``.
    """
    daily = np.bincount(np.asarray(event_days, dtype=np.int64), minlength=n_days)[:n_days]
    if kernel == "window":
        width = int(round(kernel_days))
        cum = np.concatenate([[0], np.cumsum(daily)])
        t = np.arange(n_days)
        return (cum[t] - cum[np.maximum(t - width, 0)]).astype(np.float64)
    if kernel != "exponential":
        raise ArgumentError(f"unknown kernel {kernel!r}")
    drive = np.zeros(n_days)
    decay = np.exp(-1.0 / kernel_days)
    acc = 0.0
    for t in range(1, n_days):
        acc = acc * decay + daily[t - 1]
        drive[t] = acc
    return drive


def make_panel(country, seed, config=FixtureConfig()):
    """One synthetic :class:`CountryPanel`, deterministic in ``(country, seed, config)``."""
    check_country(country)
    rng = np.random.default_rng([int(seed), *map(ord, country)])
    n_days = (config.end - config.start).days + 1

    # At most one flood and one drought per day: a catalogue lists a day's
    # event of a given type once.
    p = config.flood_drought_per_year / 365.25 / 2
    hits = rng.random((n_days, 2)) < p
    fd_days, kinds = np.nonzero(hits)
    fd_types = tuple(("flood", "drought")[k] for k in kinds)
    fd_dates = tuple(config.start + int(i) * ONE_DAY for i in fd_days)

    months = []
    d = dt.date(config.start.year, config.start.month, 1)
    while d <= config.end:
        months.append(d)
        d = dt.date(d.year + (d.month == 12), d.month % 12 + 1, 1)
    a_mean, a_min, a_max = _monthly_anomalies(rng, len(months), config)
    anomaly = np.empty(n_days)
    for m, mu, lo, hi in zip(months, a_mean, a_min, a_max):
        ndays = calendar.monthrange(m.year, m.month)[1]
        i = max((m - config.start).days, 0)
        j = min((m - config.start).days + ndays, n_days)
        anomaly[i:j] = (abs(mu) + abs(lo) + abs(hi)) / ndays

    drive = excitation_drive(fd_days, n_days, config.kernel_days, config.kernel)
    intensity = config.base_rate * (1.0 + config.excitation * drive)
    counts = rng.poisson(intensity)

    climate = ClimatePanel(fd_dates, anomaly, config.start, country, fd_types)
    return CountryPanel(country, DailyCountSeries(counts, config.start, country), climate)


def make_panels(countries, seed, config=FixtureConfig()):
    return [make_panel(c, seed, config) for c in countries]
