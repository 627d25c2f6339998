"""Correlation, error metrics, and sensitivity analysis.

Spearman rank correlation with average-rank tie handling, MAE/RMSE/R2
scoring, the single-factor elasticity coefficient, and Monte Carlo Sobol
indices from paired pick-and-freeze sample matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import DataError, NumericalError
from .series import FeatureTable


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank block."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    return float(da @ db) / denom


def spearman_matrix(table: FeatureTable) -> tuple[list[str], np.ndarray]:
    """Pairwise Spearman correlations over all table columns.

    Returns the column names and a symmetric matrix with unit diagonal.
    Entries involving a constant column are NaN (undefined, not zero).
    """
    if table.n_rows < 3:
        raise DataError(f"Spearman matrix needs >= 3 rows, got {table.n_rows}")
    names = table.column_names
    ranks, constant = {}, {}
    for name in names:
        values = table.column(name).require_complete(f"column {name!r}")
        constant[name] = bool(np.ptp(values) == 0.0)
        ranks[name] = average_ranks(values)
    k = len(names)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            if constant[names[i]] or constant[names[j]]:
                out[i, j] = out[j, i] = math.nan
            else:
                out[i, j] = out[j, i] = _pearson(ranks[names[i]], ranks[names[j]])
    return names, out


@dataclass(frozen=True)
class Metrics:
    """MAE, RMSE, and the coefficient of determination."""

    mae: float
    rmse: float
    r2: float


def evaluate(actual, predicted) -> Metrics:
    """Score predictions against actuals (equal lengths, non-constant actuals)."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise DataError(f"length mismatch: actual {a.shape} vs predicted {p.shape}")
    if len(a) < 2:
        raise DataError("need at least 2 points to evaluate")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise DataError("metrics inputs must be finite")
    err = a - p
    sse = float(err @ err)
    dev = a - a.mean()
    tss = float(dev @ dev)
    if tss == 0.0:
        raise NumericalError("constant actuals: r2 undefined")
    return Metrics(
        mae=float(np.abs(err).mean()),
        rmse=math.sqrt(sse / len(a)),
        r2=1.0 - sse / tss,
    )


Model = Callable[[np.ndarray], np.ndarray]


def _eval_model(model: Model, X: np.ndarray) -> np.ndarray:
    out = np.asarray(model(X), dtype=float)
    if out.shape != (len(X),):
        raise DataError(f"model must map (n, k) samples to (n,) outputs, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise NumericalError("model returned non-finite output")
    return out


def single_factor_sensitivity(
    model: Model,
    base: Sequence[float],
    factor: int,
    delta: float = 0.05,
    one_sided: bool = False,
) -> float:
    """Elasticity of the model output to one factor.

    S = (relative output change) / (relative input change) under the
    perturbation x_factor -> x_factor * (1 +- delta). The default averages
    the +delta and -delta responses (a central estimate); ``one_sided``
    reproduces the bare +delta form.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 1:
        raise DataError("base point must be a 1-d vector")
    if not 0 <= factor < len(base):
        raise DataError(f"factor index {factor} out of range for {len(base)} factors")
    if delta <= 0.0:
        raise DataError("delta must be > 0")
    if base[factor] == 0.0:
        raise DataError("zero base value: relative perturbation undefined")
    y_base = float(_eval_model(model, base.reshape(1, -1))[0])
    if y_base == 0.0:
        raise NumericalError("zero base output: relative response undefined")

    up = base.copy()
    up[factor] = base[factor] * (1.0 + delta)
    y_up = float(_eval_model(model, up.reshape(1, -1))[0])
    if one_sided:
        return (y_up - y_base) / y_base / delta
    down = base.copy()
    down[factor] = base[factor] * (1.0 - delta)
    y_down = float(_eval_model(model, down.reshape(1, -1))[0])
    return (y_up - y_down) / y_base / (2.0 * delta)


def sobol_indices(
    model: Model,
    ranges: Sequence[tuple[float, float]],
    n: int = 4096,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """First-order and total Sobol indices by pick-and-freeze Monte Carlo.

    Inputs are independent uniforms over ``ranges``; n (a power of two,
    >= 256) is the base sample size and the model runs n * (k + 2) times.
    Uses the Saltelli first-order and Jansen total-order estimators with a
    fixed accumulation order, so results are bit-stable for a given seed.
    """
    k = len(ranges)
    if k < 2:
        raise DataError("Sobol analysis needs >= 2 factors")
    if n < 256 or n & (n - 1):
        raise DataError(f"n must be a power of 2 and >= 256, got {n}")
    lows = np.array([r[0] for r in ranges], dtype=float)
    highs = np.array([r[1] for r in ranges], dtype=float)
    if not np.all(highs > lows):
        raise DataError("degenerate range: every (low, high) needs high > low")

    rng = np.random.default_rng(seed)
    A = lows + (highs - lows) * rng.random((n, k))
    B = lows + (highs - lows) * rng.random((n, k))
    y_a = _eval_model(model, A)
    y_b = _eval_model(model, B)
    pooled = np.concatenate([y_a, y_b])
    mean = float(pooled.mean())
    variance = float(pooled.var())
    if variance == 0.0:
        raise NumericalError("model output has zero variance over the sampled ranges")

    # Centering by the pooled mean sharply reduces the first-order
    # estimator's Monte Carlo variance without changing its limit.
    y_a = y_a - mean
    y_b = y_b - mean
    s1 = np.empty(k)
    st = np.empty(k)
    for i in range(k):
        ab = A.copy()
        ab[:, i] = B[:, i]
        y_ab = _eval_model(model, ab) - mean
        s1[i] = float(np.mean(y_b * (y_ab - y_a))) / variance
        st[i] = 0.5 * float(np.mean((y_a - y_ab) ** 2)) / variance
    return s1, st


@dataclass(frozen=True)
class SensitivityResult:
    """Per-factor record combining the elasticity and Sobol views."""

    name: str
    single_factor: float
    s1: float
    st: float
    n: int
    delta: float
    range: tuple[float, float]
