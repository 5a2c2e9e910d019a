"""Rolling-origin protocol: six-year training windows, one-year-ahead daily forecasts.

For each evaluation year ``Y`` and each feature mode a fresh network is trained
on the days of ``Y - train_years .. Y - 1`` and then produces a forecast for
every day of ``Y``. Features are always built from realized history.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .exceptions import ArgumentError, TrainingDivergedError
from .features import (
    LONG_CLIMATE_WINDOW,
    MODES,
    TERROR_CLIMATE,
    TERROR_ONLY,
    build_matrix,
)
from .ingest import Finding
from .metrics import MetricsConfig, YearEvaluation, climate_gain_ratio, evaluate_year
from .neural import TrainConfig, init_model, train
from .point_process import ONE_DAY, IntensitySeries

logger = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1
MIN_VALID_DAYS = 360


@dataclass(frozen=True)
class ProtocolConfig:
    train_years: int = 6
    eval_start: int = 2000
    eval_end: int = 2019
    warmup_start: int = 1994
    modes: tuple = MODES
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    master_seed: int = 0
    hidden_layer_sizes: tuple = (16, 16)
    warm_start: bool = False
    split_types: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.train_years < 1:
            raise ArgumentError("train_years must be >= 1")
        if self.eval_start - self.warmup_start < self.train_years:
            raise ArgumentError("eval_start - warmup_start must be >= train_years")
        if self.eval_end < self.eval_start:
            raise ArgumentError("eval_end must be >= eval_start")
        if any(m not in MODES for m in self.modes):
            raise ArgumentError(f"modes must be drawn from {MODES}")

    @property
    def years(self):
        return list(range(self.eval_start, self.eval_end + 1))

    @property
    def feature_range(self):
        """First and last day that needs a feature row."""
        return dt.date(self.eval_start - self.train_years, 1, 1), dt.date(self.eval_end, 12, 31)

    @property
    def data_range(self):
        """Raw-data span needed, including the longest climate look-back."""
        first, last = self.feature_range
        return first - LONG_CLIMATE_WINDOW * ONE_DAY, last

    def to_dict(self):
        d = asdict(self)
        d["modes"] = list(self.modes)
        d["hidden_layer_sizes"] = list(self.hidden_layer_sizes)
        return d

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if "train" in data:
            data["train"] = TrainConfig.from_dict(data["train"])
        if "metrics" in data:
            data["metrics"] = MetricsConfig.from_dict(data["metrics"])
        for key in ("modes", "hidden_layer_sizes"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def cell_seed(master_seed, year, mode):
    seq = np.random.SeedSequence([int(master_seed), int(year), MODES.index(mode)])
    return int(seq.generate_state(1)[0])


@dataclass
class Forecasts:
    """Daily intensities per ``(year, mode)`` and the cells that failed."""

    country: str
    series: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def get(self, year, mode):
        return self.series.get((year, mode))


def _fit_cell(X_train, k_train, X_eval, sizes, train_cfg, init=None):
    if init is None:
        model = init_model(sizes, train_cfg.seed, train_cfg.init_scale, X_train, k_train)
    else:
        model = init
    trace = train(model, X_train, k_train, train_cfg, loss="poisson")
    return trace.final_model.predict(X_eval), trace.final_model


def _run_cell(X_train, k_train, X_eval, sizes, train_cfg):
    try:
        values, _ = _fit_cell(X_train, k_train, X_eval, sizes, train_cfg)
        return values, None
    except TrainingDivergedError as exc:
        return None, str(exc)


def rolling_forecast(panel, config=ProtocolConfig()):
    """Train and forecast every ``(year, mode)`` cell of the protocol.

    Diverged cells are recorded in ``Forecasts.failures`` and skipped; the run
    continues. Results do not depend on ``config.n_jobs``.
    """
    first, last = config.feature_range
    matrices = {
        mode: build_matrix(panel.counts, panel.climate if mode == TERROR_CLIMATE else None,
                           (first, last), mode, config.split_types)
        for mode in config.modes
    }
    counts = panel.counts.window(first, last).counts

    def index(d):
        return (d - first).days

    cells = []
    for year in config.years:
        tr0 = index(dt.date(year - config.train_years, 1, 1))
        tr1 = index(dt.date(year - 1, 12, 31)) + 1
        ev0, ev1 = index(dt.date(year, 1, 1)), index(dt.date(year, 12, 31)) + 1
        for mode in config.modes:
            X = matrices[mode].rows
            sizes = (X.shape[1], *config.hidden_layer_sizes, 1)
            cfg = replace(config.train, seed=cell_seed(config.master_seed, year, mode))
            cells.append(((year, mode), X[tr0:tr1], counts[tr0:tr1], X[ev0:ev1], sizes, cfg))

    out = Forecasts(panel.country)
    if config.warm_start:
        previous = {}
        for key, Xt, kt, Xe, sizes, cfg in cells:
            try:
                values, model = _fit_cell(Xt, kt, Xe, sizes, cfg, previous.get(key[1]))
                previous[key[1]] = model
                out.series[key] = IntensitySeries(values, dt.date(key[0], 1, 1))
            except TrainingDivergedError as exc:
                out.failures[key] = str(exc)
        return out

    if config.n_jobs == 1:
        results = [_run_cell(*c[1:]) for c in cells]
    else:
        results = Parallel(n_jobs=config.n_jobs)(delayed(_run_cell)(*c[1:]) for c in cells)
    for (key, *_), (values, error) in zip(cells, results):
        if error is None:
            out.series[key] = IntensitySeries(values, dt.date(key[0], 1, 1))
        else:
            logger.warning("%s %s: %s", panel.country, key, error)
            out.failures[key] = error
    return out


@dataclass
class EvalReport:
    country: str
    years: list
    climate_gain_ratio: float
    findings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "country": self.country,
            "climate_gain_ratio": self.climate_gain_ratio,
            "years": [y.to_dict() for y in self.years],
            "findings": [f.to_dict() for f in self.findings],
        }

    @classmethod
    def from_dict(cls, data):
        findings = [
            Finding(f["code"], f["severity"], f["message"],
                    dt.date.fromisoformat(f["start"]) if f.get("start") else None,
                    dt.date.fromisoformat(f["end"]) if f.get("end") else None)
            for f in data.get("findings", [])
        ]
        return cls(
            data["country"],
            [YearEvaluation(**y) for y in data["years"]],
            data["climate_gain_ratio"],
            findings,
        )

    def __eq__(self, other):
        return isinstance(other, EvalReport) and self.to_dict() == other.to_dict()


def evaluate(panel, forecasts, config=ProtocolConfig()):
    """Per-year metrics for every year with valid forecasts in both modes."""
    years, findings = [], []
    for key, message in sorted(forecasts.failures.items()):
        findings.append(Finding("training_diverged", "warning", f"{key[1]} {key[0]}: {message}",
                                dt.date(key[0], 1, 1), dt.date(key[0], 12, 31)))
    for year in config.years:
        lo, hi = dt.date(year, 1, 1), dt.date(year, 12, 31)
        lam_t = forecasts.get(year, TERROR_ONLY)
        lam_c = forecasts.get(year, TERROR_CLIMATE)
        missing = [m for m, s in ((TERROR_ONLY, lam_t), (TERROR_CLIMATE, lam_c))
                   if s is None or len(s) < MIN_VALID_DAYS]
        if missing:
            findings.append(Finding("year_skipped", "warning",
                                    f"{year}: no valid forecast for {', '.join(missing)}", lo, hi))
            continue
        k = panel.counts.window(lam_t.start_date, lam_t.end_date).counts
        years.append(evaluate_year(year, k, lam_t.values, lam_c.values, config.metrics))
    ratio = climate_gain_ratio(years, panel.counts) if years else 0.0
    return EvalReport(panel.country, years, ratio, findings)


REPORT_COLUMNS = ("country",) + tuple(YearEvaluation.__dataclass_fields__)
PLOT_COLUMNS = (
    "country", "year", "likelihood_gain", "prediction_rate_terror", "prediction_rate_climate",
    "observed_count", "expected_count_terror", "expected_count_climate",
)


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def emit(reports, out_dir, config=ProtocolConfig()):
    """Write ``report.csv``, ``report.json``, ``summary.csv`` and ``plot_data.csv``.

    Returns the list of written paths.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    reports = sorted(reports, key=lambda r: r.country)
    paths = []

    path = out_dir / "report.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            for y in r.years:
                d = y.to_dict()
                w.writerow([r.country] + [_fmt(d[c]) for c in REPORT_COLUMNS[1:]])
    paths.append(path)

    path = out_dir / "plot_data.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for r in reports:
            for y in r.years:
                d = {"country": r.country, **y.to_dict()}
                w.writerow([_fmt(d[c]) for c in PLOT_COLUMNS])
    paths.append(path)

    path = out_dir / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "climate_gain_ratio", "valid_years", "mean_likelihood_gain"])
        for r in reports:
            gains = [y.likelihood_gain for y in r.years]
            mean_gain = float(np.mean(gains)) if gains else 0.0
            w.writerow([r.country, _fmt(float(r.climate_gain_ratio)), len(r.years), _fmt(mean_gain)])
    paths.append(path)

    path = out_dir / "report.json"
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "metrics_config": config.metrics.to_dict(),
        # n_jobs changes scheduling only; leaving it out keeps outputs byte-identical.
        "protocol": {k: v for k, v in config.to_dict().items() if k != "n_jobs"},
        "countries": [r.to_dict() for r in reports],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    return paths


def load_report_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    return [EvalReport.from_dict(c) for c in doc["countries"]]


FORECAST_COLUMNS = ("country", "mode", "date", "intensity")


def write_forecasts(all_forecasts, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_COLUMNS)
        for fc in sorted(all_forecasts, key=lambda f: f.country):
            for (year, mode) in sorted(fc.series):
                s = fc.series[(year, mode)]
                for i, v in enumerate(s.values):
                    w.writerow([fc.country, mode, (s.start_date + i * ONE_DAY).isoformat(), repr(float(v))])


def read_forecasts(path):
    """Inverse of :func:`write_forecasts`; returns ``{country: Forecasts}``."""
    raw = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            d = dt.date.fromisoformat(row["date"])
            raw.setdefault((row["country"], d.year, row["mode"]), []).append((d, float(row["intensity"])))
    out = {}
    for (country, year, mode), items in sorted(raw.items()):
        items.sort()
        fc = out.setdefault(country, Forecasts(country))
        fc.series[(year, mode)] = IntensitySeries([v for _, v in items], items[0][0])
    return out
