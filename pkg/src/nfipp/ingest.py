"""CSV loaders for per-incident events, flood/drought occurrences and monthly temperature anomalies.

Schemas (exact headers, ISO-8601 dates):

* events: ``date,country_iso3,event_id`` -- one row per incident;
* floods/droughts: ``start_date,country_iso3,type`` with ``type`` in {flood, drought};
* temperature: ``year,month,country_iso3,anom_mean,anom_min,anom_max``.

Monthly anomalies are turned into a daily series by spreading
``|anom_mean| + |anom_min| + |anom_max|`` uniformly over the days of the month.
"""

from __future__ import annotations

import calendar
import csv
import datetime as dt
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._iso3 import ISO3_CODES
from .exceptions import (
    ArgumentError,
    CountryLookupError,
    DataFormatError,
    DataValidationError,
)
from .features import CLIMATE_WINDOWS, EVENT_TYPES, TERROR_WINDOWS, ClimatePanel
from .point_process import ONE_DAY, DailyCountSeries

logger = logging.getLogger(__name__)

EVENTS_HEADER = ("date", "country_iso3", "event_id")
FLOOD_DROUGHT_HEADER = ("start_date", "country_iso3", "type")
TEMPERATURE_HEADER = ("year", "month", "country_iso3", "anom_mean", "anom_min", "anom_max")

EVENTS_FILE = "events.csv"
FLOOD_DROUGHT_FILE = "floods_droughts.csv"
TEMPERATURE_FILE = "temperature.csv"

MIN_DATE = dt.date(1970, 1, 1)
MAX_DATE = dt.date(2030, 12, 31)


def check_country(code):
    if code not in ISO3_CODES:
        raise CountryLookupError(f"unknown ISO-3166 alpha-3 country code {code!r}")
    return code


def _days(first, last):
    return (last - first).days + 1


def _check_range(date_range):
    first, last = date_range
    if last < first:
        raise ArgumentError(f"empty date range {first}..{last}")
    return first, last


def _rows(path, header):
    """Yield ``(line_number, row)`` after checking the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError(path, 1, "missing header") from None
        if tuple(h.strip() for h in first) != header:
            raise DataFormatError(path, 1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def _parse_date(path, line, text):
    try:
        d = dt.date.fromisoformat(text)
    except ValueError:
        raise DataFormatError(path, line, f"unparseable date {text!r}") from None
    if not MIN_DATE <= d <= MAX_DATE:
        raise DataValidationError(f"{path}:{line}: date {d} outside {MIN_DATE}..{MAX_DATE}")
    return d


def _parse_code(path, line, text):
    if len(text) != 3 or not text.isalpha() or not text.isupper():
        raise DataFormatError(path, line, f"malformed country code {text!r}")
    return text


def load_events(path, country, date_range):
    """Bin per-incident rows of ``country`` into a gap-free daily count series."""
    check_country(country)
    first, last = _check_range(date_range)
    counts = np.zeros(_days(first, last), dtype=np.int64)
    for line, (date_text, code, _event_id) in _rows(path, EVENTS_HEADER):
        d = _parse_date(path, line, date_text)
        if _parse_code(path, line, code) != country:
            continue
        if first <= d <= last:
            counts[(d - first).days] += 1
    return DailyCountSeries(counts, first, country)


def _parse_float(path, line, text):
    if text.lower() in ("", "nan", "na"):
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(path, line, f"unparseable number {text!r}") from None


def load_climate(flood_drought_path, temperature_path, country, date_range):
    """Flood/drought dates and the daily absolute-anomaly series for ``country``.

    Days in months without a temperature row are NaN. Identical flood/drought
    rows are counted once; events outside ``date_range`` are dropped.
    """
    check_country(country)
    first, last = _check_range(date_range)

    seen = set()
    duplicates = outside = 0
    for line, (date_text, code, kind) in _rows(flood_drought_path, FLOOD_DROUGHT_HEADER):
        d = _parse_date(flood_drought_path, line, date_text)
        if _parse_code(flood_drought_path, line, code) != country:
            continue
        if kind not in EVENT_TYPES:
            raise DataFormatError(flood_drought_path, line, f"type must be flood or drought, got {kind!r}")
        if not first <= d <= last:
            outside += 1
            continue
        if (d, kind) in seen:
            duplicates += 1
            continue
        seen.add((d, kind))
    if duplicates:
        logger.warning("%s: dropped %d duplicate flood/drought rows for %s", flood_drought_path, duplicates, country)
    if outside:
        logger.info("%s: %d flood/drought events for %s outside %s..%s", flood_drought_path, outside, country, first, last)
    events = sorted(seen)

    anomaly = np.full(_days(first, last), np.nan)
    months = {}
    for line, (y, m, code, a_mean, a_min, a_max) in _rows(temperature_path, TEMPERATURE_HEADER):
        if _parse_code(temperature_path, line, code) != country:
            continue
        try:
            year, month = int(y), int(m)
        except ValueError:
            raise DataFormatError(temperature_path, line, f"unparseable year/month {y!r}/{m!r}") from None
        if not 1 <= month <= 12:
            raise DataFormatError(temperature_path, line, f"month {month} outside 1..12")
        start = dt.date(year, month, 1)
        if not MIN_DATE <= start <= MAX_DATE:
            raise DataValidationError(f"{temperature_path}:{line}: month {year}-{month:02d} out of bounds")
        values = [_parse_float(temperature_path, line, v) for v in (a_mean, a_min, a_max)]
        total = sum(abs(v) for v in values)
        if (year, month) in months:
            if not (months[(year, month)] == total or (math.isnan(total) and math.isnan(months[(year, month)]))):
                raise DataValidationError(f"{temperature_path}:{line}: conflicting rows for {year}-{month:02d}")
            continue
        months[(year, month)] = total
        ndays = calendar.monthrange(year, month)[1]
        lo = max(start, first)
        hi = min(start + (ndays - 1) * ONE_DAY, last)
        if lo <= hi:
            anomaly[(lo - first).days : (hi - first).days + 1] = total / ndays

    return ClimatePanel(
        tuple(d for d, _ in events), anomaly, first, country, tuple(k for _, k in events)
    )


@dataclass(frozen=True)
class CountryPanel:
    country: str
    counts: DailyCountSeries
    climate: ClimatePanel

    @property
    def coverage(self):
        """Date range covered by both the events and the climate series."""
        return (
            max(self.counts.start_date, self.climate.start_date),
            min(self.counts.end_date, self.climate.end_date),
        )


def load_country_panel(data_dir, country, date_range):
    """Load ``events.csv``, ``floods_droughts.csv`` and ``temperature.csv`` from ``data_dir``."""
    data_dir = Path(data_dir)
    counts = load_events(data_dir / EVENTS_FILE, country, date_range)
    climate = load_climate(data_dir / FLOOD_DROUGHT_FILE, data_dir / TEMPERATURE_FILE, country, date_range)
    return CountryPanel(country, counts, climate)


def countries_in(data_dir):
    """Sorted country codes present in ``events.csv``."""
    path = Path(data_dir) / EVENTS_FILE
    return sorted({_parse_code(path, line, row[1]) for line, row in _rows(path, EVENTS_HEADER)})


# -- export ---------------------------------------------------------------

def _monthly_total(daily, ndays):
    """A monthly value whose uniform spread reproduces ``daily`` bit-exactly."""
    total = daily * ndays
    for _ in range(64):
        spread = total / ndays
        if spread == daily:
            return total
        total = np.nextafter(total, math.inf if spread < daily else -math.inf)
    raise ArgumentError(f"cannot represent daily anomaly {daily!r} as a monthly value")


def _temperature_rows(panel):
    a = panel.climate.anomaly
    start = panel.climate.start_date
    d = dt.date(start.year, start.month, 1)
    while d <= panel.climate.end_date:
        ndays = calendar.monthrange(d.year, d.month)[1]
        lo = max((d - start).days, 0)
        hi = min((d - start).days + ndays, len(a))
        chunk = a[lo:hi]
        if np.all(np.isnan(chunk)):
            pass
        elif np.any(np.isnan(chunk)) or np.any(chunk != chunk[0]):
            raise ArgumentError(f"anomaly for {d:%Y-%m} is not a uniform monthly spread")
        else:
            total = float(_monthly_total(float(chunk[0]), ndays))
            yield [d.year, d.month, panel.country, repr(total), "0.0", "0.0"]
        d = dt.date(d.year + (d.month == 12), d.month % 12 + 1, 1)


def write_panels(panels, out_dir):
    """Write panels to the three CSV files of ``out_dir`` (overwriting them)."""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    with open(out_dir / EVENTS_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for p in panels:
            for i, n in enumerate(p.counts.counts):
                day = p.counts.start_date + i * ONE_DAY
                for j in range(int(n)):
                    w.writerow([day.isoformat(), p.country, f"{p.country}-{day:%Y%m%d}-{j}"])
    with open(out_dir / FLOOD_DROUGHT_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLOOD_DROUGHT_HEADER)
        for p in panels:
            for d, kind in zip(p.climate.flood_drought_dates, p.climate.flood_drought_types):
                w.writerow([d.isoformat(), p.country, kind])
    with open(out_dir / TEMPERATURE_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TEMPERATURE_HEADER)
        for p in panels:
            w.writerows(_temperature_rows(p))


# -- validation -----------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    code: str
    severity: str
    message: str
    start: dt.date | None = None
    end: dt.date | None = None

    def to_dict(self):
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "start": self.start.isoformat() if self.start else None,
            "end": self.end.isoformat() if self.end else None,
        }


def _runs(mask):
    """``(start, stop)`` index pairs of consecutive True values."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def validate_panel(panel, protocol_range):
    """Check that ``panel`` supports forecasting every day of ``protocol_range``.

    Returns a list of :class:`Finding`; empty means protocol-ready. Errors are
    coverage gaps (event history, evaluation days or temperature data missing);
    a run of at least 36 months of exactly-zero anomaly is a warning.
    """
    first, last = protocol_range
    findings = []
    need_events = (first - max(TERROR_WINDOWS) * ONE_DAY, last)
    c = panel.counts
    if c.start_date > need_events[0]:
        findings.append(Finding("coverage_gap", "error",
                                f"event series starts {c.start_date}, need {need_events[0]}",
                                need_events[0], min(c.start_date - ONE_DAY, last)))
    if c.end_date < last:
        findings.append(Finding("coverage_gap", "error",
                                f"event series ends {c.end_date}, need {last}",
                                max(c.end_date + ONE_DAY, need_events[0]), last))

    climate = panel.climate
    lead = max(CLIMATE_WINDOWS)
    need_lo, need_hi = first - lead * ONE_DAY, last - ONE_DAY
    if climate.start_date > need_lo:
        findings.append(Finding("coverage_gap", "error",
                                f"climate series starts {climate.start_date}, need {need_lo}",
                                need_lo, climate.start_date - ONE_DAY))
    if climate.end_date < need_hi:
        findings.append(Finding("coverage_gap", "error",
                                f"climate series ends {climate.end_date}, need {need_hi}",
                                climate.end_date + ONE_DAY, need_hi))
    lo = max((need_lo - climate.start_date).days, 0)
    hi = min((need_hi - climate.start_date).days + 1, len(climate.anomaly))
    window = climate.anomaly[lo:hi]
    for a, b in _runs(np.isnan(window)):
        s = climate.start_date + (lo + a) * ONE_DAY
        e = climate.start_date + (lo + b - 1) * ONE_DAY
        findings.append(Finding("coverage_gap", "error", f"temperature data missing {s}..{e}", s, e))
    for a, b in _runs(window == 0.0):
        if b - a >= lead:
            s = climate.start_date + (lo + a) * ONE_DAY
            e = climate.start_date + (lo + b - 1) * ONE_DAY
            findings.append(Finding("suspicious_constant", "warning",
                                    f"temperature anomaly exactly zero for {b - a} days {s}..{e}", s, e))
    return findings
