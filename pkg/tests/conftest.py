"""Shared simulators and table builders for the test suite."""

from pathlib import Path

import numpy as np
import pytest

from triocast.series import FeatureTable, TimeSeries

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEMO_CSV = DATA_DIR / "synthetic_pets.csv"
DEMO_SCHEMA = DATA_DIR / "synthetic_pets_schema.json"


def ar1(rng, phi, sd, n, mean=0.0):
    """Stationary AR(1) draws around ``mean``."""
    x = np.empty(n)
    e = rng.normal(0.0, sd, n)
    x[0] = e[0] / np.sqrt(1.0 - phi**2) if phi else e[0]
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return mean + x


def integrated_ar1(rng, n, phi=0.6, start=50.0):
    """ARIMA(1,1,0) path: cumulative sum of an AR(1) increment process."""
    w = np.empty(n)
    e = rng.normal(0.0, 1.0, n)
    w[0] = e[0]
    for t in range(1, n):
        w[t] = phi * w[t - 1] + e[t]
    return start + np.cumsum(w)


def simulate_ets(rng, n, alpha=0.35, beta=0.05, gamma=0.25, m=2, sigma=1.0):
    """Series generated by the additive innovations recursions themselves."""
    level, trend = 50.0, 1.0
    seas = np.array([4.0, -4.0] if m == 2 else [0.0] * m)
    y = np.empty(n)
    for t in range(n):
        e = rng.normal(0.0, sigma)
        y[t] = level + trend + seas[t % m] + e
        level = level + trend + alpha * e
        trend = trend + beta * e
        seas[t % m] += gamma * e
        mu = seas.mean()
        seas -= mu
        level += mu
    return y


def build_table(columns, roles, start_year=2005):
    """FeatureTable from {name: values} with a shared annual index."""
    n = len(next(iter(columns.values())))
    years = np.arange(start_year, start_year + n)
    cols = {name: TimeSeries(years, np.asarray(vals, dtype=float)) for name, vals in columns.items()}
    return FeatureTable(years, cols, roles)


def ensemble_table(seed, n=19):
    """Trend + period-2 season + nonlinear indicator coupling.

    Stationary AR(1) indicators keep the forecast points inside the
    training hull, so the forest contributes signal the smoother cannot
    see, and vice versa.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    x1 = ar1(rng, 0.8, 4.0, n, mean=50.0)
    x2 = ar1(rng, 0.45, 2.5, n, mean=20.0)
    x3 = ar1(rng, 0.3, 1.0, n, mean=10.0)
    season = np.where(t.astype(int) % 2 == 0, 20.0, -20.0)
    coupling = 2.2 * ((x1 - 50.0) ** 2 - 16.0) + 8.0 * (x1 - 50.0) + 6.0 * (x2 - 20.0)
    y = 600.0 + 3.0 * t + season + coupling + rng.normal(0.0, 6.0, n)
    return build_table(
        {"x1": x1, "x2": x2, "x3": x3, "y": y},
        {"x1": "indicator", "x2": "indicator", "x3": "indicator", "y": "target"},
    )


@pytest.fixture(scope="session")
def demo_csv():
    assert DEMO_CSV.exists(), "bundled dataset missing; run python -m triocast.synthetic"
    return DEMO_CSV


@pytest.fixture(scope="session")
def demo_schema():
    return DEMO_SCHEMA
