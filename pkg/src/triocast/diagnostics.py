"""Stationarity and correlation-structure diagnostics.

Augmented Dickey-Fuller testing (intercept + linear trend, AIC lag
selection), differencing and its inverse, and the sample ACF/PACF with the
Durbin-Levinson recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NumericalError
from .series import TimeSeries

# Dickey-Fuller critical values for the intercept-plus-trend regression
# (Fuller 1976, table 8.5.2; the MacKinnon response-surface values round to
# the same digits at these sample sizes).
_ADF_CRIT_ROWS = (25, 50, 100, 250, 500)
_ADF_CRIT = {
    0.01: (-4.38, -4.15, -4.04, -3.99, -3.98, -3.96),
    0.05: (-3.60, -3.50, -3.45, -3.43, -3.42, -3.41),
    0.10: (-3.24, -3.18, -3.15, -3.13, -3.13, -3.12),
}


def difference(s: TimeSeries, d: int) -> TimeSeries:
    """Apply first differencing ``d`` times (Y_t - Y_{t-1} per pass)."""
    if d < 0:
        raise DataError("differencing order must be >= 0")
    if d >= len(s):
        raise DataError(f"cannot difference a length-{len(s)} series {d} times")
    values = s.require_complete()
    out = values.copy()
    for _ in range(d):
        out = np.diff(out)
    return TimeSeries(s.index[d:], out)


def undifference(diffs: np.ndarray, anchors: np.ndarray, d: int) -> np.ndarray:
    """Invert ``d``-fold differencing for a continuation segment.

    ``anchors`` are the last ``d`` values of the original series that the
    differenced segment continues from; the result is the continuation on
    the original scale, same length as ``diffs``.
    """
    anchors = np.asarray(anchors, dtype=float)
    if len(anchors) != d:
        raise DataError(f"need exactly {d} anchor value(s), got {len(anchors)}")
    out = np.asarray(diffs, dtype=float).copy()
    for level in range(d - 1, -1, -1):
        tail = np.diff(anchors, n=level)[-1]
        out = tail + np.cumsum(out)
    return out


def acf(s: TimeSeries, max_lag: int) -> np.ndarray:
    """Sample autocorrelations rho_0..rho_max_lag of the mean-centered series."""
    values = s.require_complete()
    n = len(values)
    if not 0 <= max_lag < n:
        raise DataError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    centered = values - values.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise NumericalError("constant series: autocorrelation undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(centered[:-k], centered[k:])) / denom
    return out


def pacf_from_acf(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations via the Durbin-Levinson recursion.

    ``rho`` holds rho_0..rho_K (rho_0 = 1); returns phi_00..phi_KK with
    phi_00 = 1 by convention and phi_11 = rho_1 exactly.
    """
    max_lag = len(rho) - 1
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    phi_prev = np.array([rho[1]])
    out[1] = rho[1]
    for k in range(2, max_lag + 1):
        denom = 1.0 - float(np.dot(phi_prev, rho[1:k]))
        if abs(denom) < 1e-12:
            raise NumericalError(f"Durbin-Levinson recursion singular at lag {k}")
        phi_kk = (rho[k] - float(np.dot(phi_prev, rho[k - 1:0:-1]))) / denom
        phi_prev = np.append(phi_prev - phi_kk * phi_prev[::-1], phi_kk)
        out[k] = phi_kk
    return out


def pacf(s: TimeSeries, max_lag: int) -> np.ndarray:
    """Sample PACF phi_00..phi_KK; requires max_lag < n/2."""
    n = len(s)
    if not 0 <= max_lag < n / 2:
        raise DataError(f"max_lag must lie in [0, n/2) = [0, {n / 2:g}), got {max_lag}")
    return pacf_from_acf(acf(s, max_lag))


@dataclass(frozen=True)
class CorrelogramResult:
    """ACF/PACF values over lags 0..K with the +-1.96/sqrt(n) band."""

    lags: np.ndarray
    acf: np.ndarray
    pacf: np.ndarray
    band: float

    def to_rows(self) -> list[tuple[int, float, float, float]]:
        return [
            (int(lag), float(a), float(p), self.band)
            for lag, a, p in zip(self.lags, self.acf, self.pacf)
        ]


def correlogram(s: TimeSeries, max_lag: int) -> CorrelogramResult:
    """ACF and PACF side by side, for export to external plotters."""
    rho = acf(s, max_lag)
    phi = pacf_from_acf(rho)
    band = 1.96 / math.sqrt(len(s))
    return CorrelogramResult(np.arange(max_lag + 1), rho, phi, band)


@dataclass(frozen=True)
class AdfResult:
    """Augmented Dickey-Fuller regression outcome.

    ``coefficients`` are ordered (intercept, trend, rho-1, gamma_1..gamma_p);
    ``is_stationary`` compares the t-statistic of rho-1 against the 5%
    critical value.
    """

    statistic: float
    coefficients: np.ndarray
    lag_order: int
    critical_values: dict[float, float]
    is_stationary: bool
    n_obs: int


def _adf_design(values: np.ndarray, lag: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    dy = np.diff(values)
    rows = np.arange(start, len(dy))
    y = dy[rows]
    cols = [np.ones(len(rows)), rows.astype(float) + 1.0, values[rows]]
    for i in range(1, lag + 1):
        cols.append(dy[rows - i])
    return np.column_stack(cols), y


def _ols_tstat(X: np.ndarray, y: np.ndarray, col: int) -> tuple[float, np.ndarray, float]:
    n, k = X.shape
    if n <= k:
        raise DataError(f"ADF regression has {n} rows for {k} parameters")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        raise NumericalError("degenerate regression: singular ADF design matrix")
    resid = y - X @ coef
    ssr = float(resid @ resid)
    sigma2 = ssr / (n - k)
    if sigma2 <= 0.0:
        raise NumericalError("degenerate regression: zero residual variance")
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(sigma2 * xtx_inv[col, col])
    return float(coef[col]) / se, coef, ssr


def adf_critical_values(n: int) -> dict[float, float]:
    """Interpolated critical values for a sample of ``n`` regression rows.

    Linear in n inside the tabulated range; linear in 1/n between the
    n = 500 row and the asymptotic row beyond it.
    """
    out = {}
    for level, row in _ADF_CRIT.items():
        if n <= _ADF_CRIT_ROWS[0]:
            val = row[0]
        elif n >= _ADF_CRIT_ROWS[-1]:
            frac = (1.0 / _ADF_CRIT_ROWS[-1] - 1.0 / n) * _ADF_CRIT_ROWS[-1]
            val = row[-2] + frac * (row[-1] - row[-2])
        else:
            val = float(np.interp(n, _ADF_CRIT_ROWS, row[:-1]))
        out[level] = val
    return out


def adf_test(s: TimeSeries, max_lag: int | None = None) -> AdfResult:
    """ADF unit-root test with intercept and linear trend.

    The lag order minimizes AIC over 0..max_lag on a common sample, then
    the statistic comes from a refit at that lag on its full sample. When
    ``max_lag`` is None, the Schwert rule 12*(n/100)^(1/4) applies, capped
    so the regression keeps degrees of freedom and lag_order <= n/4.
    """
    values = s.require_complete()
    n = len(values)
    if n < 10:
        raise DataError(f"ADF test needs n >= 10, got {n}")
    if np.ptp(values) == 0.0:
        raise NumericalError("degenerate regression: constant series")
    cap = min(n // 4, (n - 9) // 2)
    if max_lag is None:
        # Schwert's rule, tightened to n//7 so tiny samples keep their
        # degrees of freedom for the deterministic terms.
        max_lag = max(0, min(int(12 * (n / 100.0) ** 0.25), n // 7, cap))
    else:
        if max_lag < 0:
            raise DataError("max_lag must be >= 0")
        if max_lag > cap:
            raise DataError(f"n={n} is too small for max_lag={max_lag} (cap {cap})")

    # Lag search on the common sample (all candidates see identical rows).
    best = (math.inf, 0)
    for lag in range(max_lag + 1):
        X, y = _adf_design(values, lag, start=max_lag)
        m, k = X.shape
        _, _, ssr = _ols_tstat(X, y, col=2)
        aic = m * math.log(ssr / m) + 2 * k
        if aic < best[0]:
            best = (aic, lag)
    lag = best[1]

    X, y = _adf_design(values, lag, start=lag)
    stat, coef, _ = _ols_tstat(X, y, col=2)
    crit = adf_critical_values(len(y))
    return AdfResult(
        statistic=stat,
        coefficients=coef,
        lag_order=lag,
        critical_values=crit,
        is_stationary=bool(stat < crit[0.05]),
        n_obs=len(y),
    )
