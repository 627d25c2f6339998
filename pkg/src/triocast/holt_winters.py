"""Additive-trend, additive-seasonal Holt-Winters smoothing.

Standard ETS(A,A,A) recursions in innovations (error-correction) form:
with one-step error e_t = y_t - (l + b + s_phase),

    level    l <- l + b + alpha * e_t
    trend    b <- b + beta * e_t
    seasonal s_phase <- s_phase + gamma * e_t

so each weight is the direct gain of its own state. After every update the
seasonal indices are renormalized to zero sum (their mean moves into the
level, leaving fitted values unchanged). Initialization: level =
first-cycle mean, trend = (second-cycle mean - first-cycle mean)/m,
seasonals = first-cycle deviations. Weights left unset are optimized over a
0.05-step grid followed by coordinate descent with step halving to 1e-4.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import DataError
from .series import TimeSeries

_GRID = np.round(np.linspace(0.0, 1.0, 21), 2)
_REFINE_TOL = 1e-4


def _heuristic_state(y: np.ndarray, m: int) -> tuple[float, float, np.ndarray]:
    level = float(y[:m].mean())
    trend = (float(y[m : 2 * m].mean()) - level) / m
    seasonal = y[:m] - level
    return level, trend, seasonal - seasonal.mean()


def _series_values(y) -> np.ndarray:
    if isinstance(y, TimeSeries):
        return y.require_complete()
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise DataError("expected a 1-d, fully observed series")
    return arr


def _sse_batch(
    y: np.ndarray,
    m: int,
    alpha: np.ndarray,
    beta: np.ndarray,
    gamma: np.ndarray,
    window: int | None,
    init: tuple[float, float, np.ndarray] | None = None,
) -> np.ndarray:
    """SSE of one-step errors for a batch of parameter triples in lockstep."""
    n = len(y)
    level0, trend0, seas0 = _heuristic_state(y, m) if init is None else init
    k = len(alpha)
    level = np.full(k, level0)
    trend = np.full(k, trend0)
    seas = np.tile(seas0, (k, 1))
    sse = np.zeros(k)
    first_counted = m if window is None else n - window
    for t in range(m, n):
        phase = t % m
        prev_s = seas[:, phase]
        err = y[t] - (level + trend + prev_s)
        if t >= first_counted:
            sse += err * err
        level = level + trend + alpha * err
        trend = trend + beta * err
        seas[:, phase] = prev_s + gamma * err
        mu = seas.mean(axis=1)
        seas -= mu[:, None]
        level += mu
    return sse


def smoothing_sse(
    y,
    period: int,
    alpha: float,
    beta: float,
    gamma: float,
    init: tuple[float, float, np.ndarray] | None = None,
) -> float:
    """One-step in-sample SSE at a fixed parameter triple (for re-enumeration)."""
    values = _series_values(y)
    _check_lengths(values, period)
    out = _sse_batch(
        values, period, np.array([alpha]), np.array([beta]), np.array([gamma]),
        window=None, init=init,
    )
    return float(out[0])


def _check_lengths(y: np.ndarray, m: int) -> None:
    if m < 2:
        raise DataError(f"seasonal period must be >= 2, got {m}")
    if len(y) < 2 * m:
        raise DataError(f"series too short: n={len(y)} needs >= 2*m = {2 * m}")


def _optimize(
    y: np.ndarray,
    m: int,
    fixed: tuple[float | None, float | None, float | None],
    window: int | None,
    init: tuple[float, float, np.ndarray] | None = None,
) -> tuple[float, float, float]:
    free = [i for i, v in enumerate(fixed) if v is None]
    if not free:
        return tuple(float(v) for v in fixed)  # type: ignore[return-value]

    axes = [(_GRID if v is None else np.array([float(v)])) for v in fixed]
    mesh = np.array(list(itertools.product(*axes)))  # lexicographic order
    sse = _sse_batch(y, m, mesh[:, 0], mesh[:, 1], mesh[:, 2], window, init)
    point = [float(v) for v in mesh[int(np.argmin(sse))]]
    best = float(np.min(sse))

    def evaluate(p: list[float]) -> float:
        return float(
            _sse_batch(
                y, m, np.array([p[0]]), np.array([p[1]]), np.array([p[2]]), window, init
            )[0]
        )

    step = 0.05
    while step >= _REFINE_TOL:
        improved = False
        for dim in free:
            for cand in (point[dim] - step, point[dim] + step):
                cand = min(1.0, max(0.0, cand))
                if cand == point[dim]:
                    continue
                trial = list(point)
                trial[dim] = cand
                val = evaluate(trial)
                if val < best:
                    best, point, improved = val, trial, True
        if not improved:
            step /= 2.0
    return point[0], point[1], point[2]


class HoltWinters(BaseEstimator):
    """Holt-Winters smoother with additive trend and additive seasonality.

    Parameters
    ----------
    period : int
        Seasonal period m (>= 2; the default 2 models an alternating
        two-step cycle).
    alpha, beta, gamma : float or None
        Smoothing weights in [0, 1]; None means "optimize" (in-sample SSE,
        deterministic grid + coordinate descent).
    initial_level, initial_trend : float or None
        State overrides; None uses the first/second-cycle heuristic.
    initial_seasonals : sequence of float or None
        Seasonal-state override (length = period); recentered to zero sum.

    Attributes (after fit)
    ----------------------
    alpha_, beta_, gamma_ : float
    level_, trend_ : float
        Final level and trend states.
    seasonals_ : ndarray
        Final seasonal indices by phase (t mod period); sum to 0.
    fittedvalues_, resid_ : ndarray
        One-step forecasts and errors for t = period..n-1.
    sse_ : float
    """

    def __init__(
        self,
        period: int = 2,
        alpha: float | None = None,
        beta: float | None = None,
        gamma: float | None = None,
        initial_level: float | None = None,
        initial_trend: float | None = None,
        initial_seasonals=None,
    ):
        self.period = period
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.initial_level = initial_level
        self.initial_trend = initial_trend
        self.initial_seasonals = initial_seasonals

    def _init_state(self, values: np.ndarray) -> tuple[float, float, np.ndarray]:
        level, trend, seas = _heuristic_state(values, self.period)
        if self.initial_level is not None:
            level = float(self.initial_level)
        if self.initial_trend is not None:
            trend = float(self.initial_trend)
        if self.initial_seasonals is not None:
            seas = np.asarray(self.initial_seasonals, dtype=float)
            if seas.shape != (self.period,):
                raise DataError(
                    f"initial_seasonals needs length {self.period}, got shape {seas.shape}"
                )
            seas = seas - seas.mean()
        return level, trend, seas

    def _fixed(self) -> tuple[float | None, float | None, float | None]:
        out = []
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {v}")
            out.append(v)
        return tuple(out)  # type: ignore[return-value]

    def fit(self, y) -> "HoltWinters":
        values = _series_values(y)
        m = self.period
        _check_lengths(values, m)
        fixed = self._fixed()
        init = self._init_state(values)
        a, b, g = _optimize(values, m, fixed, window=None, init=init)

        level, trend, seas = init
        seas = seas.copy()
        n = len(values)
        fitted = np.empty(n - m)
        resid = np.empty(n - m)
        for t in range(m, n):
            phase = t % m
            prev_s = seas[phase]
            yhat = level + trend + prev_s
            err = values[t] - yhat
            fitted[t - m] = yhat
            resid[t - m] = err
            level = level + trend + a * err
            trend = trend + b * err
            seas[phase] = prev_s + g * err
            mu = seas.mean()
            seas -= mu
            level += mu

        self.alpha_, self.beta_, self.gamma_ = a, b, g
        self.level_, self.trend_, self.seasonals_ = float(level), float(trend), seas
        self.fittedvalues_, self.resid_ = fitted, resid
        self.sse_ = float(resid @ resid)
        self.n_ = n
        self.y_values_ = values
        if a == b == g == 0.0 and np.ptp(values) > 0.0:
            warnings.warn(
                "degenerate smoothing: all weights are zero on non-constant data",
                RuntimeWarning,
                stacklevel=2,
            )
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "level_"):
            raise NotFittedError("this HoltWinters instance is not fitted yet")

    def forecast(self, horizon: int) -> np.ndarray:
        """h-step forecasts: level + k * trend + seasonal index of the phase."""
        self._require_fitted()
        if horizon < 0:
            raise DataError("horizon must be >= 0")
        steps = np.arange(1, horizon + 1)
        phases = (self.n_ - 1 + steps) % self.period
        return self.level_ + steps * self.trend_ + self.seasonals_[phases]

    def recalibrate(self, window: int) -> "HoltWinters":
        """Re-optimize all three weights on the most recent ``window`` errors.

        Returns a new fitted instance; the original is unchanged.
        """
        self._require_fitted()
        n_resid = self.n_ - self.period
        if window < self.period:
            raise DataError(f"window must be >= period ({self.period}), got {window}")
        if window > n_resid:
            raise DataError(f"window {window} exceeds residual length {n_resid}")
        a, b, g = _optimize(
            self.y_values_,
            self.period,
            (None, None, None),
            window=window,
            init=self._init_state(self.y_values_),
        )
        refit = HoltWinters(
            period=self.period,
            alpha=a,
            beta=b,
            gamma=g,
            initial_level=self.initial_level,
            initial_trend=self.initial_trend,
            initial_seasonals=self.initial_seasonals,
        ).fit(self.y_values_)
        refit.recalibration_window_ = window
        return refit

    def to_dict(self) -> dict:
        """JSON-ready export: weights, final states, sse."""
        self._require_fitted()
        return {
            "period": self.period,
            "alpha": self.alpha_,
            "beta": self.beta_,
            "gamma": self.gamma_,
            "level": self.level_,
            "trend": self.trend_,
            "seasonals": self.seasonals_.tolist(),
            "sse": self.sse_,
            "n": self.n_,
        }
