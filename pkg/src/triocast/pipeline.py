"""End-to-end hybrid forecasting: ARIMA per indicator, forest + smoother per
target, convex-weighted combination.

For each indicator the pipeline selects and fits an ARIMA model and
forecasts it over the horizon; a random forest trained on historical
(indicators -> target) rows predicts targets at those forecast points; a
Holt-Winters smoother fit on the historical target extrapolates directly.
The two target-level predictions combine as alpha * rf + beta * hw with
fixed weights (default 0.7/0.3) or weights grid-searched per target on a
holdout of the most recent rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .arima import ArimaOrder, select_order
from .exceptions import DataError, NumericalError
from .forest import ForestRegressor
from .holt_winters import HoltWinters
from .preprocess import NormalizationStats, zscore
from .series import FeatureTable

_MIN_ROWS = 8


@dataclass(frozen=True)
class EnsembleWeights:
    """Convex combination weights: alpha for the forest, beta for the smoother."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise DataError(f"weights must lie in [0, 1], got ({self.alpha}, {self.beta})")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise DataError(f"weights must sum to 1, got {self.alpha} + {self.beta}")


def combine(rf: float, hw: float, weights: EnsembleWeights) -> float:
    """Weighted combination alpha * rf + beta * hw."""
    if not (np.isfinite(rf) and np.isfinite(hw)):
        raise DataError(f"non-finite component ({rf}, {hw})")
    return weights.alpha * rf + weights.beta * hw


def grid_search_weights(
    rf_preds, hw_preds, actuals, step: float = 0.05
) -> tuple[EnsembleWeights, dict]:
    """Pick alpha on a step grid minimizing holdout MAE.

    Ties break toward alpha closest to 0.7, then toward larger alpha.
    Returns the weights and a small search report (grid and MAE values).
    """
    rf = np.asarray(rf_preds, dtype=float)
    hw = np.asarray(hw_preds, dtype=float)
    actual = np.asarray(actuals, dtype=float)
    if not (rf.shape == hw.shape == actual.shape) or rf.ndim != 1 or len(rf) < 1:
        raise DataError(
            f"misaligned series: rf {rf.shape}, hw {hw.shape}, actuals {actual.shape}"
        )
    n_steps = round(1.0 / step)
    if n_steps < 1 or abs(n_steps * step - 1.0) > 1e-9:
        raise DataError(f"step {step} must divide 1 evenly")
    alphas = np.linspace(0.0, 1.0, n_steps + 1)
    maes = np.array(
        [float(np.abs(a * rf + (1.0 - a) * hw - actual).mean()) for a in alphas]
    )
    best = min(range(len(alphas)), key=lambda i: (maes[i], abs(alphas[i] - 0.7), -alphas[i]))
    weights = EnsembleWeights(float(alphas[best]), float(1.0 - alphas[best]))
    return weights, {"alphas": alphas.tolist(), "maes": maes.tolist(), "mae": float(maes[best])}


@dataclass
class IndicatorForecast:
    """One indicator's ARIMA stage: selected order, forecasts, or the failure."""

    name: str
    forecasts: np.ndarray
    order: ArimaOrder | None = None
    model: dict | None = None
    error: str | None = None
    fallback: str | None = None


@dataclass
class TargetForecast:
    """One target's component and combined forecasts plus the weights used."""

    name: str
    weights: EnsembleWeights
    rf: np.ndarray
    hw: np.ndarray
    combined: np.ndarray
    hw_model: dict = field(default_factory=dict)
    validation: dict | None = None


@dataclass
class ForecastReport:
    """Full pipeline output for one horizon."""

    years: list[int]
    horizon: int
    seed: int
    weights_mode: str
    indicators: dict[str, IndicatorForecast]
    targets: dict[str, TargetForecast]

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "horizon": self.horizon,
            "years": self.years,
            "weights_mode": self.weights_mode,
            "indicators": {
                name: {
                    "forecasts": ind.forecasts.tolist(),
                    "order": list(ind.order) if ind.order is not None else None,
                    "model": ind.model,
                    "error": ind.error,
                    "fallback": ind.fallback,
                }
                for name, ind in self.indicators.items()
            },
            "targets": {
                name: {
                    "alpha": tgt.weights.alpha,
                    "beta": tgt.weights.beta,
                    "rf": tgt.rf.tolist(),
                    "hw": tgt.hw.tolist(),
                    "combined": tgt.combined.tolist(),
                    "hw_model": tgt.hw_model,
                    "validation": tgt.validation,
                }
                for name, tgt in self.targets.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def target_rows(self) -> list[tuple]:
        """Flat (target, year, combined, rf, hw, alpha, beta) rows."""
        rows = []
        for name, tgt in self.targets.items():
            for i, year in enumerate(self.years):
                rows.append(
                    (
                        name,
                        year,
                        float(tgt.combined[i]),
                        float(tgt.rf[i]),
                        float(tgt.hw[i]),
                        tgt.weights.alpha,
                        tgt.weights.beta,
                    )
                )
        return rows

    def indicator_rows(self) -> list[tuple]:
        """Flat (indicator, year, forecast, order, fallback) rows."""
        rows = []
        for name, ind in self.indicators.items():
            order = "" if ind.order is None else f"({ind.order.p},{ind.order.d},{ind.order.q})"
            for i, year in enumerate(self.years):
                rows.append((name, year, float(ind.forecasts[i]), order, ind.fallback or ""))
        return rows


class _ZScorer:
    """Column-wise z-scoring with stats frozen at training time."""

    def __init__(self, table: FeatureTable, names: list[str]):
        self.names = names
        self.stats: dict[str, NormalizationStats] = {}
        cols = []
        for name in names:
            try:
                scaled, stats = zscore(table.column(name))
            except NumericalError as exc:
                raise DataError(f"indicator {name!r} cannot be normalized: {exc}") from exc
            self.stats[name] = stats
            cols.append(scaled.values)
        self.train_matrix = np.column_stack(cols)

    def transform(self, raw: np.ndarray) -> np.ndarray:
        out = np.empty_like(raw)
        for j, name in enumerate(self.names):
            out[:, j] = self.stats[name].apply(raw[:, j])
        return out


class HybridForecaster(BaseEstimator):
    """ARIMA + random-forest + Holt-Winters ensemble over a feature table.

    Parameters mirror the component estimators; ``weights`` is an
    (alpha, beta) pair used for every target unless ``grid_search`` is on,
    in which case per-target weights are searched on a holdout of the last
    ``validation_years`` rows (models refit on the remainder). The
    optional Holt-Winters recalibration re-optimizes its weights on the
    most recent residual window before forecasting.
    """

    def __init__(
        self,
        weights: tuple[float, float] = (0.7, 0.3),
        grid_search: bool = False,
        grid_step: float = 0.05,
        validation_years: int = 3,
        p_max: int = 3,
        q_max: int = 3,
        criterion: str = "sc",
        n_trees: int = 500,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        mtry: int | None = None,
        bootstrap: bool = True,
        hw_period: int = 2,
        hw_alpha: float | None = None,
        hw_beta: float | None = None,
        hw_gamma: float | None = None,
        recalibrate: bool = False,
        recalibrate_window: int | None = None,
        seed: int = 0,
    ):
        self.weights = weights
        self.grid_search = grid_search
        self.grid_step = grid_step
        self.validation_years = validation_years
        self.p_max = p_max
        self.q_max = q_max
        self.criterion = criterion
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.mtry = mtry
        self.bootstrap = bootstrap
        self.hw_period = hw_period
        self.hw_alpha = hw_alpha
        self.hw_beta = hw_beta
        self.hw_gamma = hw_gamma
        self.recalibrate = recalibrate
        self.recalibrate_window = recalibrate_window
        self.seed = seed

    # -- component stages -------------------------------------------------

    def _forest_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "mtry": self.mtry,
            "bootstrap": self.bootstrap,
        }

    def _fit_indicators(self, table: FeatureTable) -> dict[str, tuple]:
        models = {}
        for name in table.indicator_names:
            try:
                order, fit = select_order(
                    table.column(name), self.p_max, self.q_max, self.criterion
                )
                models[name] = (order, fit, None)
            except (DataError, NumericalError) as exc:
                models[name] = (None, None, f"indicator stage {name!r}: {exc}")
        return models

    @staticmethod
    def _indicator_matrix(
        models: dict[str, tuple], table: FeatureTable, horizon: int
    ) -> tuple[np.ndarray, dict[str, IndicatorForecast]]:
        cols, meta = [], {}
        for name in table.indicator_names:
            order, fit, error = models[name]
            if fit is not None:
                fc = fit.forecast(horizon)
                meta[name] = IndicatorForecast(
                    name, fc, order=order, model=fit.to_dict() if horizon else None
                )
            else:
                fc = np.full(horizon, table.column(name).values[-1])
                meta[name] = IndicatorForecast(name, fc, error=error, fallback="last_value")
            cols.append(fc)
        matrix = (
            np.column_stack(cols) if horizon > 0 else np.empty((0, len(cols)))
        )
        return matrix, meta

    def _fit_target(self, table: FeatureTable, target: str, seed: int) -> tuple:
        scaler = _ZScorer(table, table.indicator_names)
        y = table.column(target).require_complete(f"target {target!r}")
        try:
            forest = ForestRegressor(seed=seed, **self._forest_params()).fit(
                scaler.train_matrix, y, feature_names=scaler.names
            )
        except (DataError, NumericalError) as exc:
            raise type(exc)(f"forest stage for target {target!r}: {exc}") from exc
        try:
            smoother = HoltWinters(
                period=self.hw_period,
                alpha=self.hw_alpha,
                beta=self.hw_beta,
                gamma=self.hw_gamma,
            ).fit(y)
        except (DataError, NumericalError) as exc:
            raise type(exc)(f"smoother stage for target {target!r}: {exc}") from exc
        return scaler, forest, smoother

    def _target_components(
        self, scaler: _ZScorer, forest: ForestRegressor, smoother: HoltWinters,
        raw_matrix: np.ndarray, horizon: int,
    ) -> tuple[np.ndarray, np.ndarray, HoltWinters]:
        rf = forest.predict(scaler.transform(raw_matrix)) if horizon else np.empty(0)
        if self.recalibrate:
            n_resid = smoother.n_ - smoother.period
            window = self.recalibrate_window
            if window is None:
                window = max(smoother.period, n_resid // 2)
            smoother = smoother.recalibrate(window)
        hw = smoother.forecast(horizon)
        return np.atleast_1d(np.asarray(rf, dtype=float)), hw, smoother

    # -- estimator API -----------------------------------------------------

    def fit(self, table: FeatureTable) -> "HybridForecaster":
        if not isinstance(table, FeatureTable):
            raise DataError("fit expects a FeatureTable")
        if table.n_rows < _MIN_ROWS:
            raise DataError(f"pipeline needs >= {_MIN_ROWS} rows, got {table.n_rows}")
        if not table.indicator_names:
            raise DataError("no indicator columns")
        if not table.target_names:
            raise DataError("no target columns")
        for name, col in table.columns.items():
            if not col.is_complete:
                raise DataError(f"column {name!r} has missing values; impute first")

        targets = table.target_names
        seeds = np.random.SeedSequence(self.seed).generate_state(2 * len(targets))
        fixed = EnsembleWeights(float(self.weights[0]), float(self.weights[1]))

        weights: dict[str, EnsembleWeights] = {}
        validation: dict[str, dict | None] = {name: None for name in targets}
        if self.grid_search:
            if self.validation_years < 1:
                raise DataError("validation_years must be >= 1 when grid-searching")
            head_rows = table.n_rows - self.validation_years
            if head_rows < _MIN_ROWS:
                raise DataError(
                    f"holdout of {self.validation_years} rows leaves {head_rows} "
                    f"training rows (need >= {_MIN_ROWS})"
                )
            head = table.head(head_rows)
            head_models = self._fit_indicators(head)
            holdout_matrix, _ = self._indicator_matrix(head_models, head, self.validation_years)
            for i, name in enumerate(targets):
                scaler, forest, smoother = self._fit_target(head, name, int(seeds[2 * i]))
                rf, hw, _ = self._target_components(
                    scaler, forest, smoother, holdout_matrix, self.validation_years
                )
                actual = table.column(name).values[head_rows:]
                weights[name], search = grid_search_weights(rf, hw, actual, self.grid_step)
                validation[name] = {
                    "years": table.years[head_rows:].tolist(),
                    "actuals": actual.tolist(),
                    "rf": rf.tolist(),
                    "hw": hw.tolist(),
                    **search,
                }
        else:
            weights = {name: fixed for name in targets}

        self.table_ = table
        self.indicator_models_ = self._fit_indicators(table)
        self.target_models_ = {
            name: self._fit_target(table, name, int(seeds[2 * i + 1]))
            for i, name in enumerate(targets)
        }
        self.weights_ = weights
        self.validation_ = validation
        return self

    def forecast(self, horizon: int) -> ForecastReport:
        """Forecast ``horizon`` steps past the table's last year."""
        if not hasattr(self, "table_"):
            raise NotFittedError("this HybridForecaster instance is not fitted yet")
        if horizon < 1:
            raise DataError("horizon must be >= 1")
        table = self.table_
        step = int(table.years[-1] - table.years[-2]) if table.n_rows > 1 else 1
        years = [int(table.years[-1] + step * (k + 1)) for k in range(horizon)]

        raw_matrix, indicators = self._indicator_matrix(self.indicator_models_, table, horizon)
        targets = {}
        for name in table.target_names:
            scaler, forest, smoother = self.target_models_[name]
            rf, hw, smoother_used = self._target_components(
                scaler, forest, smoother, raw_matrix, horizon
            )
            w = self.weights_[name]
            combined = np.array([combine(float(r), float(h), w) for r, h in zip(rf, hw)])
            targets[name] = TargetForecast(
                name=name,
                weights=w,
                rf=rf,
                hw=hw,
                combined=combined,
                hw_model=smoother_used.to_dict(),
                validation=self.validation_[name],
            )
        return ForecastReport(
            years=years,
            horizon=horizon,
            seed=self.seed,
            weights_mode="grid-search" if self.grid_search else "fixed",
            indicators=indicators,
            targets=targets,
        )


def run_pipeline(table: FeatureTable, horizon: int, **params) -> ForecastReport:
    """One-shot fit + forecast with keyword parameters of HybridForecaster."""
    return HybridForecaster(**params).fit(table).forecast(horizon)
