"""triocast: hybrid ARIMA / random-forest / Holt-Winters forecasting toolkit."""

__version__ = "0.1.0"

from .analysis import (
    Metrics,
    SensitivityResult,
    evaluate,
    single_factor_sensitivity,
    sobol_indices,
    spearman_matrix,
)
from .arima import ArimaModel, ArimaOrder, information_criteria, residual_white_noise_check, select_order
from .diagnostics import AdfResult, CorrelogramResult, acf, adf_test, correlogram, difference, pacf, undifference
from .exceptions import DataError, NumericalError, TriocastError
from .forest import ForestRegressor, feature_importance, fit_forest, standardize_importances
from .holt_winters import HoltWinters, smoothing_sse
from .pipeline import (
    EnsembleWeights,
    ForecastReport,
    HybridForecaster,
    combine,
    grid_search_weights,
    run_pipeline,
)
from .preprocess import (
    NormalizationStats,
    impute_linear,
    impute_table,
    ks_normality_test,
    load_schema,
    load_table,
    zscore,
)
from .series import FeatureTable, TimeSeries, series_from_values

__all__ = [
    "AdfResult",
    "ArimaModel",
    "ArimaOrder",
    "CorrelogramResult",
    "DataError",
    "EnsembleWeights",
    "FeatureTable",
    "ForecastReport",
    "ForestRegressor",
    "HoltWinters",
    "HybridForecaster",
    "Metrics",
    "NormalizationStats",
    "NumericalError",
    "SensitivityResult",
    "TimeSeries",
    "TriocastError",
    "acf",
    "adf_test",
    "combine",
    "correlogram",
    "difference",
    "evaluate",
    "feature_importance",
    "fit_forest",
    "grid_search_weights",
    "impute_linear",
    "impute_table",
    "information_criteria",
    "ks_normality_test",
    "load_schema",
    "load_table",
    "pacf",
    "residual_white_noise_check",
    "run_pipeline",
    "select_order",
    "series_from_values",
    "single_factor_sensitivity",
    "smoothing_sse",
    "sobol_indices",
    "spearman_matrix",
    "standardize_importances",
    "undifference",
    "zscore",
]
