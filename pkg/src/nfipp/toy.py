"""Synthetic scenarios with known intensities and the NFIPP-vs-baseline sweep.

Each scenario draws ``T`` feature vectors uniformly from ``[0, 1]^D``, maps the
first three coordinates through a random composite non-linear function, rescales
it to a target mean intensity and samples Poisson counts. The remaining
coordinates are pure noise inputs. Because the true intensity is known, the
recovery error of a fitted model is directly measurable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .exceptions import ArgumentError, GeneratorError, TrainingDivergedError
from .neural import TrainConfig, init_model, train
from .point_process import poisson_log_pmf, sample_count

N_SIGNAL = 3
_GRID = np.stack(
    np.meshgrid(*[np.linspace(0.0, 1.0, 21)] * N_SIGNAL, indexing="ij"), axis=-1
).reshape(-1, N_SIGNAL)

_UNARY = {
    "pow0.25": (lambda u: np.power(u, 0.25), "({})^(1/4)"),
    "pow0.5": (lambda u: np.power(u, 0.5), "({})^(1/2)"),
    "pow2": (lambda u: u * u, "({})^2"),
    "exp": (np.exp, "exp({})"),
    "sin": (np.sin, "sin({})"),
    "cos": (np.cos, "cos({})"),
}


class Expr:
    """Node of a composite intensity function over ``x1..x3``."""

    def __call__(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return float(self.evaluate(X.reshape(1, -1))[0])
        with np.errstate(invalid="ignore", over="ignore"):
            return self.evaluate(X)


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def evaluate(self, X):
        return X[:, self.index]

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, X):
        return np.full(X.shape[0], self.value)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr

    def evaluate(self, X):
        return _UNARY[self.op][0](self.arg.evaluate(X))

    def __str__(self):
        return _UNARY[self.op][1].format(self.arg)


@dataclass(frozen=True)
class Linear(Expr):
    a: float
    u: Expr
    b: float
    v: Expr

    def evaluate(self, X):
        return self.a * self.u.evaluate(X) + self.b * self.v.evaluate(X)

    def __str__(self):
        return f"{self.a:.3g}*{self.u} + {self.b:.3g}*{self.v}"


@dataclass(frozen=True)
class Product(Expr):
    u: Expr
    v: Expr

    def evaluate(self, X):
        return self.u.evaluate(X) * self.v.evaluate(X)

    def __str__(self):
        return f"({self.u})*({self.v})"


def worked_example():
    """``exp(x1) * sin(x2) + x3^(1/4)``."""
    return Linear(
        1.0,
        Product(Unary("exp", Var(0)), Unary("sin", Var(1))),
        1.0,
        Unary("pow0.25", Var(2)),
    )


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return Var(int(rng.integers(N_SIGNAL)))
    kind = rng.integers(3)
    if kind == 0:
        op = list(_UNARY)[int(rng.integers(len(_UNARY)))]
        return Unary(op, _random_expr(rng, depth - 1))
    u = _random_expr(rng, depth - 1)
    v = _random_expr(rng, depth - 1)
    if kind == 1:
        return Linear(float(rng.random()), u, float(rng.random()), v)
    return Product(u, v)


def is_valid_intensity(expr):
    """Non-negative, finite and not identically zero on a 0.05-step grid of [0, 1]^3."""
    values = expr(_GRID)
    return bool(np.all(np.isfinite(values)) and np.all(values >= 0) and values.mean() > 1e-9)


def sample_intensity_function(rng, max_depth=3, max_rejections=100):
    """Random composite of power, exponential, trigonometric and affine primitives.

    Candidates that go negative (or undefined) anywhere on the check grid are
    rejected and redrawn.

    Raises
    ------
    GeneratorError
        After ``max_rejections`` consecutive rejections.
    """
    for _ in range(max_rejections):
        expr = _random_expr(rng, max_depth)
        if is_valid_intensity(expr):
            return expr
    raise GeneratorError(f"{max_rejections} consecutive candidates were rejected")


@dataclass(frozen=True, eq=False)
class ToyScenario:
    features: np.ndarray
    true_intensities: np.ndarray
    counts: np.ndarray
    generator_spec: str
    target_mean_intensity: float
    seed: object = None

    def __eq__(self, other):
        return (
            isinstance(other, ToyScenario)
            and self.generator_spec == other.generator_spec
            and self.target_mean_intensity == other.target_mean_intensity
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.true_intensities, other.true_intensities)
            and np.array_equal(self.counts, other.counts)
        )


def generate_scenario(target_mean, T=1000, D=4, rng=None, function=None):
    """Draw features, scale the intensity function to ``target_mean``, sample counts.

    Random draws happen in a fixed order (function, features, counts) so the
    features and the shape of the intensity do not depend on ``target_mean``.
    """
    if not target_mean > 0 or not math.isfinite(target_mean):
        raise ArgumentError("target_mean must be positive")
    if T < 10 or D < N_SIGNAL - 1:
        raise ArgumentError("need T >= 10 and D >= 2")
    if rng is None or isinstance(rng, (int, np.integer, np.random.SeedSequence)):
        rng = np.random.default_rng(rng)
    if function is None:
        function = sample_intensity_function(rng)
    features = rng.uniform(0.0, 1.0, size=(T, D))
    padded = features
    if D < N_SIGNAL:
        padded = np.hstack([features, np.zeros((T, N_SIGNAL - D))])
    raw = function(padded)
    mean = raw.mean()
    if not mean > 0:
        raise GeneratorError(f"intensity function {function} has zero mean on the sample")
    intensities = target_mean * (raw / mean)
    counts = sample_count(intensities, 1.0, rng)
    return ToyScenario(features, intensities, counts, str(function), float(target_mean))


def train_nfipp(features, counts, config=TrainConfig(), hidden_layer_sizes=(16, 16)):
    """Poisson-likelihood network on ``features``; returns the fitted IntensityModel."""
    sizes = (np.shape(features)[1], *hidden_layer_sizes, 1)
    model = init_model(sizes, config.seed, config.init_scale, features, counts)
    return train(model, features, counts, config, loss="poisson").final_model


def train_baseline(features, counts, config=TrainConfig(), hidden_layer_sizes=(16, 16)):
    """Same topology and initialization as :func:`train_nfipp`, squared-error loss."""
    sizes = (np.shape(features)[1], *hidden_layer_sizes, 1)
    model = init_model(sizes, config.seed, config.init_scale, features, counts)
    return train(model, features, counts, config, loss="squared_error").final_model


def recovery_error(predicted, true):
    """``mean|pred - true| / mean(true)``."""
    return float(np.mean(np.abs(predicted - true)) / np.mean(true))


@dataclass(frozen=True)
class ToyConfig:
    T: int = 1000
    D: int = 4
    train_fraction: float = 0.8
    hidden_layer_sizes: tuple = (16, 16)
    train: TrainConfig = field(default_factory=TrainConfig)
    master_seed: int = 0
    n_jobs: int = 1

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "train" in data:
            data["train"] = TrainConfig.from_dict(data["train"])
        if "hidden_layer_sizes" in data:
            data["hidden_layer_sizes"] = tuple(data["hidden_layer_sizes"])
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class TrialResult:
    level: float
    level_index: int
    trial: int
    generator_spec: str
    nfipp_err: float
    baseline_err: float
    nfipp_ll: float
    baseline_ll: float
    nfipp_err_noise_permuted: float

    @property
    def nfipp_wins(self):
        return self.nfipp_err < self.baseline_err


def trial_seed(master_seed, level_index, trial):
    return np.random.SeedSequence([int(master_seed), int(level_index), int(trial)])


def run_trial(level, level_index, trial, config=ToyConfig()):
    """One scenario: fit both models on the first part, score on the held-out tail."""
    seq = trial_seed(config.master_seed, level_index, trial)
    rng = np.random.default_rng(seq)
    scenario = generate_scenario(level, config.T, config.D, rng)
    n_train = int(round(config.train_fraction * config.T))
    X_tr, X_te = scenario.features[:n_train], scenario.features[n_train:]
    k_tr, k_te = scenario.counts[:n_train], scenario.counts[n_train:]
    lam_te = scenario.true_intensities[n_train:]
    train_cfg = replace(config.train, seed=int(seq.generate_state(1)[0]))
    try:
        nfipp = train_nfipp(X_tr, k_tr, train_cfg, config.hidden_layer_sizes)
        baseline = train_baseline(X_tr, k_tr, train_cfg, config.hidden_layer_sizes)
    except TrainingDivergedError as exc:
        raise TrainingDivergedError(exc.epoch, seed=(config.master_seed, level_index, trial)) from exc
    pred_n = nfipp.predict(X_te)
    pred_b = baseline.predict(X_te)
    noise = X_te.copy()
    if config.D > N_SIGNAL:
        noise[:, N_SIGNAL] = rng.permutation(noise[:, N_SIGNAL])
    return TrialResult(
        level=float(level),
        level_index=level_index,
        trial=trial,
        generator_spec=scenario.generator_spec,
        nfipp_err=recovery_error(pred_n, lam_te),
        baseline_err=recovery_error(pred_b, lam_te),
        nfipp_ll=float(np.mean(poisson_log_pmf(k_te, pred_n))),
        baseline_ll=float(np.mean(poisson_log_pmf(k_te, pred_b))),
        nfipp_err_noise_permuted=recovery_error(nfipp.predict(noise), lam_te),
    )


def default_levels(n=9):
    """``n`` log-spaced mean intensities from 0.1 to 10."""
    return [float(v) for v in np.logspace(-1, 1, n)]


@dataclass
class BenchmarkTable:
    """Per-level summary plus the raw trial results it was computed from."""

    trials: list

    COLUMNS = (
        "level", "nfipp_err", "baseline_err", "nfipp_ll", "baseline_ll", "trials",
        "stddev_nfipp_err", "stddev_baseline_err", "win_rate",
    )

    @property
    def levels(self):
        return sorted({t.level for t in self.trials})

    def for_level(self, level):
        return [t for t in self.trials if t.level == level]

    @property
    def rows(self):
        out = []
        for level in self.levels:
            ts = self.for_level(level)
            n_err = np.array([t.nfipp_err for t in ts])
            b_err = np.array([t.baseline_err for t in ts])
            out.append({
                "level": level,
                "nfipp_err": float(n_err.mean()),
                "baseline_err": float(b_err.mean()),
                "nfipp_ll": float(np.mean([t.nfipp_ll for t in ts])),
                "baseline_ll": float(np.mean([t.baseline_ll for t in ts])),
                "trials": len(ts),
                "stddev_nfipp_err": float(n_err.std(ddof=1)) if len(ts) > 1 else 0.0,
                "stddev_baseline_err": float(b_err.std(ddof=1)) if len(ts) > 1 else 0.0,
                "win_rate": float(np.mean(n_err < b_err)),
            })
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    def write_long_csv(self, path):
        """One row per (trial, model): plot-ready error-vs-level data."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["level", "trial", "model", "recovery_error", "heldout_ll_per_day"])
            for t in self.trials:
                writer.writerow([repr(t.level), t.trial, "nfipp", repr(t.nfipp_err), repr(t.nfipp_ll)])
                writer.writerow([repr(t.level), t.trial, "baseline", repr(t.baseline_err), repr(t.baseline_ll)])


def run_benchmark(levels=None, trials=50, config=ToyConfig()):
    """Monte Carlo sweep over mean-intensity ``levels``.

    Every trial seeds its own generator from ``(master_seed, level_index,
    trial)``, so the table is identical for any ``config.n_jobs``.
    """
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    levels = default_levels() if levels is None else [float(v) for v in levels]
    cells = [(lvl, i, j) for i, lvl in enumerate(levels) for j in range(trials)]
    if config.n_jobs == 1:
        results = [run_trial(lvl, i, j, config) for lvl, i, j in cells]
    else:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(run_trial)(lvl, i, j, config) for lvl, i, j in cells
        )
    results.sort(key=lambda t: (t.level_index, t.trial))
    return BenchmarkTable(results)
