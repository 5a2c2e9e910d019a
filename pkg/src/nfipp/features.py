"""Rolling-window features built from event and climate history.

For a target day ``t`` every window covers the ``w`` days ``t - w .. t - 1``,
so nothing dated ``t`` or later ever enters row ``t``.

Terror columns: mean daily events over 15, 90 and 365 days.
Climate columns: flood/drought occurrences and summed absolute temperature
anomaly over 182 days ("6 months") and 1095 days ("36 months").
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArgumentError, HistoryError
from .point_process import ONE_DAY

TERROR_ONLY = "terror_only"
TERROR_CLIMATE = "terror_climate"
MODES = (TERROR_ONLY, TERROR_CLIMATE)

TERROR_WINDOWS = (15, 90, 365)
SHORT_CLIMATE_WINDOW = 182
LONG_CLIMATE_WINDOW = 1095
CLIMATE_WINDOWS = (SHORT_CLIMATE_WINDOW, LONG_CLIMATE_WINDOW)

TERROR_COLUMNS = ("atk_mean_15d", "atk_mean_90d", "atk_mean_365d")
CLIMATE_COLUMNS = ("fd_count_6m", "fd_count_36m", "anom_sum_6m", "anom_sum_36m")
SPLIT_CLIMATE_COLUMNS = (
    "flood_count_6m", "flood_count_36m", "drought_count_6m", "drought_count_36m",
    "anom_sum_6m", "anom_sum_36m",
)
EVENT_TYPES = ("flood", "drought")


@dataclass(frozen=True, eq=False)
class ClimatePanel:
    """Flood/drought occurrence dates and a daily absolute-anomaly series.

    ``anomaly[i]`` is the summed ``|mean| + |min| + |max|`` anomaly contribution
    of day ``start_date + i``; NaN marks a day without temperature data.
    """

    flood_drought_dates: tuple
    anomaly: np.ndarray
    start_date: dt.date
    country: str = ""
    flood_drought_types: tuple = field(default=())

    def __post_init__(self):
        dates = tuple(self.flood_drought_dates)
        types = tuple(self.flood_drought_types) or ("flood",) * len(dates)
        if len(types) != len(dates):
            raise ArgumentError("one type per flood/drought date required")
        if any(t not in EVENT_TYPES for t in types):
            raise ArgumentError(f"event types must be in {EVENT_TYPES}")
        order = sorted(range(len(dates)), key=lambda i: (dates[i], types[i]))
        object.__setattr__(self, "flood_drought_dates", tuple(dates[i] for i in order))
        object.__setattr__(self, "flood_drought_types", tuple(types[i] for i in order))
        arr = np.array(self.anomaly, dtype=np.float64)
        if arr.ndim != 1:
            raise ArgumentError("anomaly must be a 1-d daily series")
        if np.any(arr[~np.isnan(arr)] < 0):
            raise ArgumentError("anomaly contributions are absolute values (>= 0)")
        arr.setflags(write=False)
        object.__setattr__(self, "anomaly", arr)

    @property
    def end_date(self):
        return self.start_date + (len(self.anomaly) - 1) * ONE_DAY

    def daily_event_counts(self, event_type=None):
        """Occurrences per covered day, optionally restricted to one type."""
        out = np.zeros(len(self.anomaly), dtype=np.int64)
        for d, kind in zip(self.flood_drought_dates, self.flood_drought_types):
            i = (d - self.start_date).days
            if 0 <= i < len(out) and (event_type is None or kind == event_type):
                out[i] += 1
        return out

    def __eq__(self, other):
        if not isinstance(other, ClimatePanel):
            return NotImplemented
        return (
            self.country == other.country
            and self.start_date == other.start_date
            and self.flood_drought_dates == other.flood_drought_dates
            and self.flood_drought_types == other.flood_drought_types
            and np.array_equal(self.anomaly, other.anomaly, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    rows: np.ndarray
    column_names: tuple
    mode: str
    start_date: dt.date

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != len(self.column_names):
            raise ArgumentError("rows must be (n_days, n_columns)")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    def __len__(self):
        return self.rows.shape[0]

    @property
    def dates(self):
        return [self.start_date + i * ONE_DAY for i in range(len(self))]

    @property
    def end_date(self):
        return self.start_date + (len(self) - 1) * ONE_DAY

    def window(self, start, end):
        """Rows for ``start..end`` inclusive."""
        i, j = (start - self.start_date).days, (end - self.start_date).days
        if i < 0 or j >= len(self) or j < i:
            raise HistoryError(f"{start}..{end} outside feature range {self.start_date}..{self.end_date}")
        return FeatureMatrix(self.rows[i : j + 1], self.column_names, self.mode, start)


def _window_sums(values, first, n_rows, width):
    """``sum(values[i - width : i])`` for ``i = first .. first + n_rows - 1``."""
    cum = np.concatenate([[0], np.cumsum(values)])
    idx = np.arange(first, first + n_rows)
    return cum[idx] - cum[idx - width]


def _anomaly_window_sums(anomaly, first, n_rows, width):
    # Direct per-window sums rather than a running cumsum: identical results to
    # summing a single window, and no accumulated rounding drift.
    if n_rows == 0:
        return np.zeros(0)
    seg = anomaly[first - width : first + n_rows - 1]
    return np.lib.stride_tricks.sliding_window_view(seg, width).sum(axis=1)


def _counts_index(counts, t):
    i = (t - counts.start_date).days
    if i - max(TERROR_WINDOWS) < 0:
        raise HistoryError(f"need {max(TERROR_WINDOWS)} days of event history before {t}")
    if i > len(counts):
        raise HistoryError(f"event series ends {counts.end_date}, before the day preceding {t}")
    return i


def _panel_index(panel, t):
    i = (t - panel.start_date).days
    if i - LONG_CLIMATE_WINDOW < 0:
        raise HistoryError(f"need {LONG_CLIMATE_WINDOW} days of climate history before {t}")
    if i > len(panel.anomaly):
        raise HistoryError(f"climate data ends {panel.end_date}, before the day preceding {t}")
    return i


def terror_features(counts, t):
    """``[mean over 15d, 90d, 365d]`` of daily counts strictly before ``t``."""
    i = _counts_index(counts, t)
    c = counts.counts
    return np.array([c[i - w : i].sum() / w for w in TERROR_WINDOWS], dtype=np.float64)


def climate_features(panel, t, split_types=False):
    """Flood/drought counts then anomaly sums over the 182- and 1095-day windows before ``t``."""
    i = _panel_index(panel, t)
    kinds = EVENT_TYPES if split_types else (None,)
    out = []
    for kind in kinds:
        ev = panel.daily_event_counts(kind)
        out.extend(float(ev[i - w : i].sum()) for w in CLIMATE_WINDOWS)
    for w in CLIMATE_WINDOWS:
        window = panel.anomaly[i - w : i]
        if np.any(np.isnan(window)):
            raise HistoryError(f"temperature data missing in the {w}-day window before {t}")
        out.append(float(_anomaly_window_sums(window, w, 1, w)[0]))
    return np.array(out, dtype=np.float64)


def column_names(mode, split_types=False):
    if mode == TERROR_ONLY:
        return TERROR_COLUMNS
    return TERROR_COLUMNS + (SPLIT_CLIMATE_COLUMNS if split_types else CLIMATE_COLUMNS)


def build_matrix(counts, panel, date_range, mode, split_types=False):
    """Feature rows for every day of the inclusive ``date_range``.

    Parameters
    ----------
    counts : DailyCountSeries
    panel : ClimatePanel or None
        Required for ``mode="terror_climate"``.
    date_range : (date, date)
        First and last target day.
    mode : {"terror_only", "terror_climate"}
    split_types : bool, default=False
        Count floods and droughts in separate columns.

    Returns
    -------
    FeatureMatrix
    """
    if mode not in MODES:
        raise ArgumentError(f"mode must be one of {MODES}")
    if mode == TERROR_CLIMATE and panel is None:
        raise ArgumentError("terror_climate mode requires a climate panel")
    first, last = date_range
    n = (last - first).days + 1
    if n < 1:
        raise ArgumentError("empty date range")
    i0 = _counts_index(counts, first)
    _counts_index(counts, last)
    cols = [_window_sums(counts.counts, i0, n, w) / w for w in TERROR_WINDOWS]
    if mode == TERROR_CLIMATE:
        j0 = _panel_index(panel, first)
        _panel_index(panel, last)
        kinds = EVENT_TYPES if split_types else (None,)
        for kind in kinds:
            ev = panel.daily_event_counts(kind)
            cols.extend(_window_sums(ev, j0, n, w).astype(np.float64) for w in CLIMATE_WINDOWS)
        span = panel.anomaly[j0 - LONG_CLIMATE_WINDOW : j0 + n - 1]
        if np.any(np.isnan(span)):
            raise HistoryError("temperature data missing inside the feature look-back")
        cols.extend(_anomaly_window_sums(panel.anomaly, j0, n, w) for w in CLIMATE_WINDOWS)
    rows = np.column_stack(cols).astype(np.float64)
    return FeatureMatrix(rows, column_names(mode, split_types), mode, first)
