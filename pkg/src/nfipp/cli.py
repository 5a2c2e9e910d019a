"""Command-line entry point: ``nfipp <command> [--config JSON] [--seed N] [--out-dir DIR]``.

Exit codes: 0 success, 2 validation findings of severity ``error``, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .exceptions import DataFormatError, DataValidationError, NFIPPError
from .features import MODES, TERROR_CLIMATE, build_matrix
from .fixtures import FixtureConfig, make_panels
from .harness import (
    CONFIG_SCHEMA_VERSION,
    ProtocolConfig,
    emit,
    evaluate,
    read_forecasts,
    rolling_forecast,
    write_forecasts,
)
from .ingest import countries_in, load_country_panel, validate_panel, write_panels
from .neural import IntensityModel, init_model, train
from .point_process import ONE_DAY
from .toy import ToyConfig, default_levels, run_benchmark

logger = logging.getLogger("nfipp")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def load_config(path):
    """Parse a versioned JSON config; missing sections fall back to defaults."""
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    version = data.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise DataValidationError(f"unsupported config schema_version {version}")
    return data


def protocol_config(cfg, args):
    section = dict(cfg.get("protocol", {}))
    if "train" in cfg:
        section["train"] = cfg["train"]
    if "metrics" in cfg:
        section["metrics"] = cfg["metrics"]
    config = ProtocolConfig.from_dict(section)
    if getattr(args, "seed", None) is not None:
        config = replace(config, master_seed=args.seed)
    if getattr(args, "n_jobs", None) is not None:
        config = replace(config, n_jobs=args.n_jobs)
    return config


def _countries(args, data_dir):
    if args.countries:
        return [c.strip() for c in args.countries.split(",") if c.strip()]
    return countries_in(data_dir)


def _load_panels(data_dir, countries, config):
    panels, findings = [], []
    first, last = config.feature_range
    for country in countries:
        panel = load_country_panel(data_dir, country, config.data_range)
        for f in validate_panel(panel, (first, last)):
            findings.append((country, f))
        panels.append(panel)
    return panels, findings


def _report_findings(findings, out_dir):
    doc = [{"country": c, **f.to_dict()} for c, f in findings]
    with open(Path(out_dir) / "findings.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for c, f in findings:
        logger.log(logging.ERROR if f.severity == "error" else logging.WARNING, "%s: %s", c, f.message)
    return any(f.severity == "error" for _, f in findings)


def cmd_make_fixtures(args, cfg):
    section = dict(cfg.get("fixtures", {}))
    for key in ("excitation", "base_rate"):
        if getattr(args, key) is not None:
            section[key] = getattr(args, key)
    fixture = FixtureConfig.from_dict(section)
    seed = 0 if args.seed is None else args.seed
    countries = [c.strip() for c in (args.countries or "AFG,COL").split(",")]
    panels = make_panels(countries, seed, fixture)
    write_panels(panels, args.out_dir)
    manifest = {"seed": seed, "countries": countries, "fixture": fixture.to_dict()}
    with open(Path(args.out_dir) / "fixture_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(panels)} synthetic panels to {args.out_dir}")
    return EXIT_OK


def cmd_toy_validate(args, cfg):
    toy = ToyConfig.from_dict({**cfg.get("toy", {}), **({"train": cfg["train"]} if "train" in cfg else {})})
    if args.seed is not None:
        toy = replace(toy, master_seed=args.seed)
    if args.n_jobs is not None:
        toy = replace(toy, n_jobs=args.n_jobs)
    if args.T is not None:
        toy = replace(toy, T=args.T)
    levels = [float(v) for v in args.levels.split(",")] if args.levels else default_levels()
    table = run_benchmark(levels, args.trials, toy)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.write_csv(out / "benchmark.csv")
    table.write_long_csv(out / "benchmark_long.csv")
    for row in table.rows:
        print(f"level={row['level']:.4g} nfipp_err={row['nfipp_err']:.4f} "
              f"baseline_err={row['baseline_err']:.4f} win_rate={row['win_rate']:.2f}")
    return EXIT_OK


def cmd_train(args, cfg):
    config = protocol_config(cfg, args)
    first = dt.date(args.train_start, 1, 1)
    last = dt.date(args.train_end, 12, 31)
    data_range = (first - 1095 * ONE_DAY, last)
    from .ingest import load_country_panel as _load

    panel = _load(args.data_dir, args.country, data_range)
    fm = build_matrix(panel.counts, panel.climate if args.mode == TERROR_CLIMATE else None,
                      (first, last), args.mode, config.split_types)
    counts = panel.counts.window(first, last)
    sizes = (fm.rows.shape[1], *config.hidden_layer_sizes, 1)
    tc = replace(config.train, seed=config.master_seed)
    model = init_model(sizes, tc.seed, tc.init_scale, fm, counts)
    trace = train(model, fm, counts, tc)
    trace.final_model.config.update({"mode": args.mode, "country": args.country,
                                     "train_range": [first.isoformat(), last.isoformat()],
                                     "column_names": list(fm.column_names)})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"model_{args.country}_{args.mode}.json"
    path.write_text(trace.final_model.to_json() + "\n")
    print(f"final log-likelihood {trace.values[-1]:.6f}; model written to {path}")
    return EXIT_OK


def cmd_forecast(args, cfg):
    model = IntensityModel.from_json(Path(args.model).read_text())
    mode = model.config.get("mode", args.mode)
    country = model.config.get("country", args.country)
    first, last = dt.date(args.year, 1, 1), dt.date(args.year, 12, 31)
    panel = load_country_panel(args.data_dir, country, (first - 1095 * ONE_DAY, last))
    fm = build_matrix(panel.counts, panel.climate if mode == TERROR_CLIMATE else None,
                      (first, last), mode, len(model.config.get("column_names", [])) == 9)
    from .harness import Forecasts
    from .point_process import IntensitySeries

    fc = Forecasts(country, {(args.year, mode): IntensitySeries(model.predict(fm.rows), first)})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"forecast_{country}_{mode}_{args.year}.csv"
    write_forecasts([fc], path)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_evaluate(args, cfg):
    config = protocol_config(cfg, args)
    forecasts = read_forecasts(args.forecasts)
    countries = sorted(forecasts)
    panels, findings = _load_panels(args.data_dir, countries, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if _report_findings(findings, out):
        return EXIT_VALIDATION
    reports = [evaluate(p, forecasts[p.country], config) for p in panels]
    emit(reports, out, config)
    return EXIT_OK


def cmd_run_protocol(args, cfg):
    config = protocol_config(cfg, args)
    countries = _countries(args, args.data_dir)
    panels, findings = _load_panels(args.data_dir, countries, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if _report_findings(findings, out):
        return EXIT_VALIDATION
    all_forecasts, reports = [], []
    for panel in panels:
        fc = rolling_forecast(panel, config)
        all_forecasts.append(fc)
        reports.append(evaluate(panel, fc, config))
    write_forecasts(all_forecasts, out / "forecasts.csv")
    emit(reports, out, config)
    for r in sorted(reports, key=lambda r: r.country):
        gains = [y.likelihood_gain for y in r.years]
        mean_gain = sum(gains) / len(gains) if gains else float("nan")
        print(f"{r.country}: {len(r.years)} valid years, mean likelihood gain {mean_gain:+.4f}, "
              f"climate gain ratio {r.climate_gain_ratio:.4f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="nfipp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--out-dir", type=Path, default=Path("out"))
        return p

    p = common(sub.add_parser("make-fixtures", help="write synthetic panels in the input CSV schemas"))
    p.add_argument("--countries", default=None, help="comma-separated ISO3 codes (default AFG,COL)")
    p.add_argument("--excitation", type=float, default=None, help="climate->event excitation coefficient")
    p.add_argument("--base-rate", type=float, default=None, help="background events per day")
    p.set_defaults(func=cmd_make_fixtures)

    p = common(sub.add_parser("toy-validate", help="NFIPP vs Gaussian-loss baseline on synthetic intensities"))
    p.add_argument("--levels", default=None, help="comma-separated mean intensities (default 9 log-spaced in [0.1, 10])")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_toy_validate)

    p = common(sub.add_parser("train", help="fit one intensity network"))
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--country", required=True)
    p.add_argument("--mode", choices=MODES, default=TERROR_CLIMATE)
    p.add_argument("--train-start", type=int, required=True, help="first training year")
    p.add_argument("--train-end", type=int, required=True, help="last training year")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("forecast", help="daily intensities for one year from a saved model"))
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--country", default=None)
    p.add_argument("--mode", choices=MODES, default=None)
    p.set_defaults(func=cmd_forecast)

    p = common(sub.add_parser("evaluate", help="metrics from a forecasts.csv"))
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--forecasts", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("run-protocol", help="rolling training, forecasting and evaluation"))
    p.add_argument("--data-dir", type=Path, required=True)
    p.add_argument("--countries", default=None, help="comma-separated ISO3 codes (default: all in events.csv)")
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_run_protocol)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except OSError as exc:
        print(f"nfipp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataFormatError, DataValidationError) as exc:
        print(f"nfipp: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NFIPPError as exc:
        print(f"nfipp: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
