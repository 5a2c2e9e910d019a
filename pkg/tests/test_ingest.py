import datetime as dt
import logging

import numpy as np
import pytest

from nfipp.exceptions import CountryLookupError, DataFormatError, DataValidationError
from nfipp.fixtures import FixtureConfig, make_panel
from nfipp.ingest import (
    countries_in,
    load_climate,
    load_country_panel,
    load_events,
    validate_panel,
    write_panels,
)

RANGE = (dt.date(1991, 1, 1), dt.date(2019, 12, 31))


@pytest.fixture(scope="module")
def panels(tmp_path_factory):
    cfg = FixtureConfig()
    ps = [make_panel("AFG", 3, cfg), make_panel("COL", 3, cfg)]
    out = tmp_path_factory.mktemp("data")
    write_panels(ps, out)
    return ps, out


def test_round_trip_is_exact(panels):
    ps, out = panels
    assert countries_in(out) == ["AFG", "COL"]
    for p in ps:
        back = load_country_panel(out, p.country, RANGE)
        assert back.counts == p.counts
        np.testing.assert_array_equal(back.climate.anomaly, p.climate.anomaly)
        assert back.climate.flood_drought_dates == p.climate.flood_drought_dates
        assert back.climate.flood_drought_types == p.climate.flood_drought_types


def test_row_order_does_not_matter(panels, tmp_path):
    ps, out = panels
    rng = np.random.default_rng(0)
    for name in ("events.csv", "floods_droughts.csv", "temperature.csv"):
        lines = (out / name).read_text().splitlines()
        body = lines[1:]
        rng.shuffle(body)
        (tmp_path / name).write_text("\n".join([lines[0], *body]) + "\n")
    a = load_country_panel(out, "AFG", RANGE)
    b = load_country_panel(tmp_path, "AFG", RANGE)
    assert a.counts == b.counts and a.climate == b.climate


def test_duplicate_flood_rows_counted_once(tmp_path, caplog):
    (tmp_path / "fd.csv").write_text(
        "start_date,country_iso3,type\n2000-05-01,AFG,flood\n2000-05-01,AFG,flood\n2000-05-01,AFG,drought\n"
    )
    (tmp_path / "t.csv").write_text("year,month,country_iso3,anom_mean,anom_min,anom_max\n")
    with caplog.at_level(logging.WARNING):
        panel = load_climate(tmp_path / "fd.csv", tmp_path / "t.csv", "AFG", RANGE)
    assert len(panel.flood_drought_dates) == 2
    assert "duplicate" in caplog.text
    assert np.all(np.isnan(panel.anomaly))


def test_monthly_anomaly_spread_over_days(tmp_path):
    (tmp_path / "fd.csv").write_text("start_date,country_iso3,type\n")
    (tmp_path / "t.csv").write_text(
        "year,month,country_iso3,anom_mean,anom_min,anom_max\n2000,2,AFG,0.5,-1.0,1.5\n"
    )
    panel = load_climate(tmp_path / "fd.csv", tmp_path / "t.csv", "AFG", (dt.date(2000, 1, 31), dt.date(2000, 3, 1)))
    assert np.isnan(panel.anomaly[0]) and np.isnan(panel.anomaly[-1])
    np.testing.assert_allclose(panel.anomaly[1:-1], 3.0 / 29)


def test_conflicting_month_rows(tmp_path):
    (tmp_path / "fd.csv").write_text("start_date,country_iso3,type\n")
    (tmp_path / "t.csv").write_text(
        "year,month,country_iso3,anom_mean,anom_min,anom_max\n2000,2,AFG,0.5,0,0\n2000,2,AFG,0.7,0,0\n"
    )
    with pytest.raises(DataValidationError):
        load_climate(tmp_path / "fd.csv", tmp_path / "t.csv", "AFG", RANGE)


def test_format_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "events.csv"
    p.write_text("date,country_iso3,event_id\n2000-01-01,AFG,a\n2000-13-01,AFG,b\n")
    with pytest.raises(DataFormatError, match=":3:"):
        load_events(p, "AFG", RANGE)
    p.write_text("when,country_iso3,event_id\n")
    with pytest.raises(DataFormatError):
        load_events(p, "AFG", RANGE)


def test_unknown_country(tmp_path):
    with pytest.raises(CountryLookupError):
        load_events(tmp_path / "x.csv", "ZZZ", RANGE)


def test_events_binned_by_day(tmp_path):
    p = tmp_path / "events.csv"
    p.write_text("date,country_iso3,event_id\n2000-01-02,AFG,a\n2000-01-02,AFG,b\n2000-01-03,COL,c\n")
    s = load_events(p, "AFG", (dt.date(2000, 1, 1), dt.date(2000, 1, 3)))
    assert list(s.counts) == [0, 2, 0]


def test_validate_clean_and_gappy_panels(panels):
    ps, _ = panels
    protocol = (dt.date(1994, 1, 1), dt.date(2019, 12, 31))
    assert validate_panel(ps[0], protocol) == []
    p = ps[0]
    a = p.climate.anomaly.copy()
    a[3000:3040] = np.nan
    from dataclasses import replace

    gappy = replace(p, climate=replace(p.climate, anomaly=a))
    findings = validate_panel(gappy, protocol)
    assert [f.code for f in findings] == ["coverage_gap"]
    assert findings[0].severity == "error"
    assert findings[0].start == p.climate.start_date + dt.timedelta(3000)
    zero = a.copy()
    zero[~np.isnan(zero)] = 0.0
    zero[:] = 0.0
    flat = replace(p, climate=replace(p.climate, anomaly=zero))
    assert [f.severity for f in validate_panel(flat, protocol)] == ["warning"]
    late = validate_panel(p, (dt.date(1991, 6, 1), dt.date(2020, 12, 31)))
    assert {f.severity for f in late} == {"error"} and len(late) >= 3
