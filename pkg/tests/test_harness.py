import datetime as dt
import json
from dataclasses import replace

import numpy as np
import pytest

from nfipp.features import TERROR_CLIMATE, TERROR_ONLY
from nfipp.fixtures import FixtureConfig, excitation_drive, make_panel
from nfipp.harness import (
    EvalReport,
    Forecasts,
    ProtocolConfig,
    cell_seed,
    emit,
    evaluate,
    load_report_json,
    read_forecasts,
    rolling_forecast,
    write_forecasts,
)
from nfipp.ingest import CountryPanel
from nfipp.exceptions import ArgumentError
from nfipp.neural import TrainConfig
from nfipp.point_process import DailyCountSeries, IntensitySeries

SMALL = ProtocolConfig(eval_start=2000, eval_end=2002, train=TrainConfig(epochs=100), hidden_layer_sizes=(8,))


@pytest.fixture(scope="module")
def panel():
    return make_panel("AFG", 0)


@pytest.fixture(scope="module")
def forecasts(panel):
    return rolling_forecast(panel, SMALL)


def test_forecast_shape(forecasts):
    assert sorted(forecasts.series) == [(y, m) for y in (2000, 2001, 2002) for m in (TERROR_CLIMATE, TERROR_ONLY)]
    for (year, _), s in forecasts.series.items():
        assert s.start_date == dt.date(year, 1, 1)
        assert len(s) == (366 if year == 2000 else 365)
    assert not forecasts.failures


def test_constant_rate_expected_counts():
    # A Poisson(0.5) panel with no climate effect: K-hat near 0.5 * 365.
    p = make_panel("COL", 4, FixtureConfig(base_rate=0.5, excitation=0.0))
    fc = rolling_forecast(p, SMALL)
    for s in fc.series.values():
        assert s.values.sum() == pytest.approx(0.5 * len(s), rel=0.15)


def test_cell_seeds_distinct():
    seeds = {cell_seed(0, y, m) for y in range(2000, 2020) for m in (TERROR_ONLY, TERROR_CLIMATE)}
    assert len(seeds) == 40
    assert cell_seed(1, 2000, TERROR_ONLY) != cell_seed(0, 2000, TERROR_ONLY)


def test_parallel_matches_serial(panel, forecasts):
    again = rolling_forecast(panel, replace(SMALL, n_jobs=2))
    assert again.series == forecasts.series


def test_warm_start_runs(panel):
    fc = rolling_forecast(panel, replace(SMALL, warm_start=True, eval_end=2001))
    assert len(fc.series) == 4


def test_emit_round_trip(panel, forecasts, tmp_path):
    report = evaluate(panel, forecasts, SMALL)
    assert [y.year for y in report.years] == [2000, 2001, 2002]
    paths = emit([report], tmp_path, SMALL)
    assert {p.name for p in paths} == {"report.csv", "plot_data.csv", "summary.csv", "report.json"}
    assert load_report_json(tmp_path / "report.json") == [report]
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[0].startswith("country,year,")
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["schema_version"] == 1 and "n_jobs" not in doc["protocol"]
    write_forecasts([forecasts], tmp_path / "f.csv")
    assert read_forecasts(tmp_path / "f.csv")["AFG"].series == forecasts.series


def test_identical_forecasts_are_neutral(panel, forecasts):
    same = Forecasts("AFG", {})
    for (year, mode), s in forecasts.series.items():
        if mode == TERROR_ONLY:
            same.series[(year, TERROR_ONLY)] = s
            same.series[(year, TERROR_CLIMATE)] = s
    report = evaluate(panel, same, SMALL)
    assert all(y.likelihood_gain == 0.0 for y in report.years)
    assert report.climate_gain_ratio == 0.0


def test_missing_cells_are_skipped(panel, forecasts):
    partial = Forecasts("AFG", dict(forecasts.series), {(2001, TERROR_CLIMATE): "diverged"})
    del partial.series[(2001, TERROR_CLIMATE)]
    report = evaluate(panel, partial, SMALL)
    assert [y.year for y in report.years] == [2000, 2002]
    assert {f.code for f in report.findings} == {"year_skipped", "training_diverged"}


def test_hand_built_two_year_case():
    start = dt.date(2000, 1, 1)
    counts = np.zeros(731, dtype=int)
    counts[:60] = 1  # 2000 has 366 days
    counts[366:406] = 1
    empty = make_panel("AFG", 0).climate
    p = CountryPanel("AFG", DailyCountSeries(counts, start, "AFG"), empty)
    fc = Forecasts("AFG", {
        (2000, TERROR_ONLY): IntensitySeries(np.full(366, 40 / 366), start),
        (2000, TERROR_CLIMATE): IntensitySeries(np.full(366, 50 / 366), start),
        (2001, TERROR_ONLY): IntensitySeries(np.full(365, 40 / 365), dt.date(2001, 1, 1)),
        (2001, TERROR_CLIMATE): IntensitySeries(np.full(365, 30 / 365), dt.date(2001, 1, 1)),
    })
    report = evaluate(p, fc, replace(SMALL, eval_end=2001))
    assert report.climate_gain_ratio == pytest.approx(0.1, abs=1e-12)


def test_config_round_trip_and_checks():
    cfg = replace(SMALL, modes=(TERROR_ONLY,), split_types=True)
    assert ProtocolConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.feature_range == (dt.date(1994, 1, 1), dt.date(2002, 12, 31))
    with pytest.raises(ArgumentError):
        ProtocolConfig(eval_start=1998)
    with pytest.raises(ArgumentError):
        ProtocolConfig(modes=("other",))


def test_excitation_drive_kernels():
    drive = excitation_drive([2, 2, 5], 10, 3)
    assert list(drive) == [0, 0, 0, 2, 2, 2, 1, 1, 1, 0]
    exp = excitation_drive([0], 4, 1.0, kernel="exponential")
    np.testing.assert_allclose(exp, [0, 1, np.exp(-1), np.exp(-2)])


def test_excitation_raises_event_rate():
    quiet = make_panel("AFG", 1, FixtureConfig(excitation=0.0))
    loud = make_panel("AFG", 1, FixtureConfig(excitation=3.0))
    assert loud.climate == quiet.climate
    assert loud.counts.counts.sum() > 1.5 * quiet.counts.counts.sum()
