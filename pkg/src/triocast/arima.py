"""ARIMA order selection, conditional-least-squares fitting, and forecasting.

Estimation is conditional sum of squares: the first max(p, q) differenced
observations condition the recursion and pre-sample shocks are zero. Pure-AR
models solve in closed form; mixed models run a derivative-free simplex
descent from a Yule-Walker start.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .diagnostics import acf, adf_test, undifference
from .exceptions import DataError, NumericalError
from .series import TimeSeries

_MAX_D = 2
_SIMPLEX_MAX_ITER = 500


class ArimaOrder(NamedTuple):
    p: int
    d: int
    q: int


def information_criteria(fit_or_loglik, n_obs: int | None = None, n_params: int | None = None):
    """Per-observation AIC and Schwarz criterion.

    AIC = -2 lnL / n + 2 k / n, SC = -2 lnL / n + k ln(n) / n, with
    k = p + q the number of ARMA coefficients. Accepts either a fitted
    :class:`ArimaModel` or the raw (log_likelihood, n_obs, n_params).
    """
    if isinstance(fit_or_loglik, ArimaModel):
        fit = fit_or_loglik
        fit._require_fitted()
        return information_criteria(fit.loglik_, fit.n_eff_, fit.p + fit.q)
    log_likelihood = float(fit_or_loglik)
    if n_obs is None or n_params is None:
        raise DataError("raw form needs log_likelihood, n_obs, and n_params")
    if n_obs <= n_params:
        raise DataError(f"need n_obs > n_params, got {n_obs} <= {n_params}")
    base = -2.0 * log_likelihood / n_obs
    aic = base + 2.0 * n_params / n_obs
    sc = base + n_params * math.log(n_obs) / n_obs
    return aic, sc


def _series_values(y) -> np.ndarray:
    if isinstance(y, TimeSeries):
        return y.require_complete()
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"expected a 1-d series, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains non-finite values")
    return arr


def _css_residuals(w: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Conditional residuals for t >= max(p, q), pre-sample shocks zero."""
    p, q = len(phi), len(theta)
    burn = max(p, q)
    n = len(w)
    x = w[burn:] - c
    for i in range(1, p + 1):
        x = x - phi[i - 1] * w[burn - i : n - i]
    if q == 0:
        return x
    return lfilter([1.0], np.concatenate(([1.0], theta)), x)


def _yule_walker_start(w: np.ndarray, p: int) -> np.ndarray:
    try:
        rho = acf(TimeSeries(np.arange(len(w)), w), p)
        toeplitz = np.array([[rho[abs(i - j)] for j in range(p)] for i in range(p)])
        return np.linalg.solve(toeplitz, rho[1 : p + 1])
    except (NumericalError, np.linalg.LinAlgError):
        return np.zeros(p)


class ArimaModel(BaseEstimator):
    """ARIMA(p, d, q) with intercept, estimated by conditional least squares.

    Parameters
    ----------
    p, d, q : int
        AR order, differencing order (at most 2), and MA order.

    Attributes (after fit)
    ----------------------
    intercept_ : float
    ar_coeffs_, ma_coeffs_ : ndarray
    resid_ : ndarray
        Conditional residuals, length = differenced length - max(p, q).
    css_, sigma2_, loglik_, aic_, sc_ : float
    converged_ : bool
        False when the simplex optimizer hit its iteration cap.
    ar_stationary_ : bool
        True when all AR polynomial roots lie outside the unit circle.
    """

    def __init__(self, p: int = 0, d: int = 0, q: int = 0):
        self.p = p
        self.d = d
        self.q = q

    @property
    def order(self) -> ArimaOrder:
        return ArimaOrder(self.p, self.d, self.q)

    def _validate_order(self) -> None:
        if min(self.p, self.d, self.q) < 0:
            raise DataError("order components must be >= 0")
        if self.d > _MAX_D:
            raise DataError(f"differencing order capped at {_MAX_D}, got {self.d}")

    def fit(self, y) -> "ArimaModel":
        """Estimate coefficients on a fully observed series."""
        self._validate_order()
        values = _series_values(y)
        p, d, q = self.p, self.d, self.q
        if d >= len(values):
            raise DataError(f"cannot difference a length-{len(values)} series {d} times")
        w = values.copy()
        for _ in range(d):
            w = np.diff(w)
        if len(w) <= 3 * (p + q + 1):
            raise DataError(
                f"too few observations: differenced length {len(w)} needs > {3 * (p + q + 1)}"
            )
        burn = max(p, q)
        self.converged_ = True

        if q == 0:
            X = np.ones((len(w) - burn, p + 1))
            for i in range(1, p + 1):
                X[:, i] = w[burn - i : len(w) - i]
            coef, _, rank, _ = np.linalg.lstsq(X, w[burn:], rcond=None)
            if rank < X.shape[1]:
                raise NumericalError("singular design matrix in AR least squares")
            c, phi, theta = float(coef[0]), coef[1:], np.zeros(0)
        else:
            phi0 = _yule_walker_start(w, p) if p else np.zeros(0)
            c0 = float(w.mean()) * (1.0 - phi0.sum())
            x0 = np.concatenate(([c0], phi0, np.zeros(q)))

            def objective(params: np.ndarray) -> float:
                resid = _css_residuals(w, params[0], params[1 : 1 + p], params[1 + p :])
                return float(resid @ resid)

            result = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxiter": _SIMPLEX_MAX_ITER, "xatol": 1e-8, "fatol": 1e-10},
            )
            if not result.success:
                self.converged_ = False
                warnings.warn(
                    f"CSS optimizer hit the {_SIMPLEX_MAX_ITER}-iteration cap for "
                    f"order {(p, d, q)}; coefficients are the best point found",
                    RuntimeWarning,
                    stacklevel=2,
                )
            c = float(result.x[0])
            phi, theta = result.x[1 : 1 + p], result.x[1 + p :]

        resid = _css_residuals(w, c, phi, theta)
        n_eff = len(resid)
        css = float(resid @ resid)
        sigma2 = css / n_eff
        if sigma2 <= 0.0:
            # Perfect fits (deterministic inputs) still need a finite loglik.
            sigma2 = max(sigma2, 1e-300)
        loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0)

        self.y_values_ = values
        self.diff_values_ = w
        self.intercept_ = c
        self.ar_coeffs_ = np.asarray(phi, dtype=float)
        self.ma_coeffs_ = np.asarray(theta, dtype=float)
        self.resid_ = resid
        self.n_eff_ = n_eff
        self.css_ = css
        self.sigma2_ = css / n_eff
        self.loglik_ = loglik
        self.aic_, self.sc_ = information_criteria(loglik, n_eff, p + q)
        self.ar_stationary_ = self._check_ar_roots()
        return self

    def _check_ar_roots(self) -> bool:
        if self.p == 0:
            return True
        roots = np.roots(np.concatenate(([1.0], -self.ar_coeffs_))[::-1])
        ok = bool(np.all(np.abs(roots) > 1.0)) if len(roots) else True
        if not ok:
            warnings.warn(
                f"AR polynomial of order {(self.p, self.d, self.q)} has roots on or "
                "inside the unit circle",
                RuntimeWarning,
                stacklevel=3,
            )
        return ok

    def _require_fitted(self) -> None:
        if not hasattr(self, "resid_"):
            raise NotFittedError("this ArimaModel instance is not fitted yet")

    def forecast(self, horizon: int) -> np.ndarray:
        """Iterated point forecasts on the original scale, length ``horizon``."""
        self._require_fitted()
        if horizon < 0:
            raise DataError("horizon must be >= 0")
        if horizon == 0:
            return np.empty(0)
        p, d, q = self.p, self.d, self.q
        w = list(self.diff_values_)
        burn = max(p, q)
        eps = [0.0] * burn + list(self.resid_)
        for _ in range(horizon):
            t = len(w)
            val = self.intercept_
            for i in range(1, p + 1):
                val += self.ar_coeffs_[i - 1] * w[t - i]
            for j in range(1, q + 1):
                if t - j < len(eps):
                    val += self.ma_coeffs_[j - 1] * eps[t - j]
            w.append(val)
            eps.append(0.0)
        future = np.asarray(w[len(self.diff_values_) :])
        if d == 0:
            return future
        return undifference(future, self.y_values_[-d:], d)

    def to_dict(self) -> dict:
        """JSON-ready export: order, coefficients, criteria, residual check."""
        self._require_fitted()
        passed, report = residual_white_noise_check(self, max_lag=min(10, self.n_eff_ - 1))
        return {
            "order": {"p": self.p, "d": self.d, "q": self.q},
            "intercept": self.intercept_,
            "ar_coeffs": self.ar_coeffs_.tolist(),
            "ma_coeffs": self.ma_coeffs_.tolist(),
            "css": self.css_,
            "sigma2": self.sigma2_,
            "loglik": self.loglik_,
            "aic": self.aic_,
            "sc": self.sc_,
            "n_eff": self.n_eff_,
            "converged": self.converged_,
            "ar_stationary": self.ar_stationary_,
            "residuals_white_noise": passed,
            "residual_check": report,
        }


def residual_white_noise_check(fit, max_lag: int) -> tuple[bool, dict]:
    """Check residual autocorrelations against the +-1.96/sqrt(n) band.

    Accepts a fitted :class:`ArimaModel` or a raw residual array. Passes
    iff every lag 1..max_lag stays strictly inside the band; ``max_lag=0``
    passes vacuously.
    """
    resid = fit.resid_ if isinstance(fit, ArimaModel) else np.asarray(fit, dtype=float)
    n = len(resid)
    if max_lag < 0:
        raise DataError("max_lag must be >= 0")
    if max_lag >= n:
        raise DataError(f"max_lag={max_lag} needs residual length > {max_lag}, got {n}")
    band = 1.96 / math.sqrt(n)
    if max_lag == 0:
        return True, {"band": band, "lags": [], "acf": [], "violations": []}
    rho = acf(TimeSeries(np.arange(n), resid), max_lag)
    violations = [int(k) for k in range(1, max_lag + 1) if abs(rho[k]) >= band]
    report = {
        "band": band,
        "lags": list(range(1, max_lag + 1)),
        "acf": rho[1:].tolist(),
        "violations": violations,
    }
    return not violations, report


def select_order(
    y,
    p_max: int = 3,
    q_max: int = 3,
    criterion: str = "sc",
    d_max: int = _MAX_D,
    adf_max_lag: int | None = None,
) -> tuple[ArimaOrder, ArimaModel]:
    """Pick (p, d, q) by differencing-until-stationary plus a criterion grid.

    d is the smallest value in 0..d_max whose differenced series passes the
    ADF test; every (p, q) candidate up to (p_max, q_max) is then fit by
    CSS and the one minimizing the chosen criterion wins, ties broken by
    smaller p+q, then smaller p.
    """
    if not 0 <= p_max <= 5 or not 0 <= q_max <= 5:
        raise DataError("p_max and q_max must lie in [0, 5]")
    if criterion not in ("aic", "sc"):
        raise DataError(f"criterion must be 'aic' or 'sc', got {criterion!r}")
    values = _series_values(y)

    d = None
    for cand in range(min(d_max, _MAX_D) + 1):
        diffed = values.copy()
        for _ in range(cand):
            diffed = np.diff(diffed)
        result = adf_test(TimeSeries(np.arange(len(diffed)), diffed), max_lag=adf_max_lag)
        if result.is_stationary:
            d = cand
            break
    if d is None:
        raise NumericalError(f"series still non-stationary after d={d_max} differencing passes")

    best: tuple[float, int, int, int] | None = None
    best_fit: ArimaModel | None = None
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            model = ArimaModel(p=p, d=d, q=q)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    model.fit(values)
            except (DataError, NumericalError):
                continue
            if not model.converged_:
                continue
            crit = model.aic_ if criterion == "aic" else model.sc_
            key = (crit, p + q, p, q)
            if best is None or key < best:
                best, best_fit = key, model
    if best_fit is None:
        raise NumericalError("no ARIMA candidate converged on this series")
    return best_fit.order, best_fit
