"""Neural forward-intensity Poisson process.

Daily event counts are modelled as an inhomogeneous Poisson process whose
intensity is a neural network of past events and climate covariates, trained
by maximizing the Poisson log-likelihood.
"""

from .exceptions import (
    AlignmentError,
    ArgumentError,
    CountryLookupError,
    DataFormatError,
    DataValidationError,
    DateRangeError,
    GeneratorError,
    HistoryError,
    NFIPPError,
    TrainingDivergedError,
)
from .features import ClimatePanel, FeatureMatrix, build_matrix, climate_features, terror_features
from .harness import EvalReport, Forecasts, ProtocolConfig, emit, evaluate, rolling_forecast
from .ingest import CountryPanel, Finding, load_climate, load_country_panel, load_events, validate_panel
from .metrics import MetricsConfig, YearEvaluation, climate_gain_ratio, evaluate_year, likelihood_gain, prediction_rate
from .neural import (
    IntensityModel,
    NeuralIntensityRegressor,
    TrainConfig,
    TrainTrace,
    forward,
    init_model,
    nll_and_gradient,
    train,
)
from .point_process import (
    DailyCountSeries,
    IntensitySeries,
    expected_count,
    poisson_log_pmf,
    sample_count,
    sequence_log_likelihood,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
