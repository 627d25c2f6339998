"""Dataset ingestion, imputation, z-score normalization, and normality checks.

CSV layout: a header row whose first column is ``year`` (integers), every
other column numeric with empty cells meaning "missing". Column roles come
from a JSON schema file: ``{"indicators": [...], "targets": [...]}``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataError, NumericalError
from .series import INDICATOR, TARGET, FeatureTable, TimeSeries


@dataclass(frozen=True)
class NormalizationStats:
    """Per-series mean and (population) standard deviation, kept for the
    inverse transform x = x' * sigma + mu."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if not self.std > 0:
            raise NumericalError("zero variance: cannot normalize a constant series")

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


def load_schema(path: str | Path) -> dict[str, str]:
    """Read a role-assignment schema file into a column -> role mapping."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read schema file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"schema file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or set(raw) - {"indicators", "targets"}:
        raise DataError('schema must be {"indicators": [...], "targets": [...]}')
    roles: dict[str, str] = {}
    for role, key in ((INDICATOR, "indicators"), (TARGET, "targets")):
        for name in raw.get(key, []):
            if name in roles:
                raise DataError(f"column {name!r} assigned two roles in schema")
            roles[name] = role
    if not roles:
        raise DataError("schema assigns no columns")
    return roles


def load_table(path: str | Path, roles: dict[str, str]) -> FeatureTable:
    """Parse a CSV dataset into a :class:`FeatureTable`.

    Empty cells become missing points; the schema's roles are applied to
    the header columns. Unknown schema columns, duplicate years, and
    non-numeric cells are rejected.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read input file {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")

    header = [h.strip() for h in rows[0]]
    if header[0] != "year":
        raise DataError(f"{path}: first column must be named 'year', got {header[0]!r}")
    names = header[1:]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names in header")
    unknown = set(roles) - set(names)
    if unknown:
        raise DataError(f"schema names column(s) absent from {path}: {sorted(unknown)}")

    years = []
    data = {name: [] for name in names}
    observed = {name: [] for name in names}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            years.append(int(row[0]))
        except ValueError:
            raise DataError(f"{path}:{lineno}: year {row[0]!r} is not an integer") from None
        for name, cell in zip(names, row[1:]):
            cell = cell.strip()
            if cell == "":
                data[name].append(math.nan)
                observed[name].append(False)
            else:
                try:
                    data[name].append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric cell {cell!r} in column {name!r}"
                    ) from None
                observed[name].append(True)

    year_arr = np.asarray(years, dtype=int)
    if len(year_arr) > 1 and not np.all(np.diff(year_arr) > 0):
        raise DataError(f"{path}: non-monotone index (years must be strictly increasing)")

    keep = roles.keys() if roles else names
    columns = {
        name: TimeSeries(year_arr, data[name], observed[name]) for name in names if name in keep
    }
    return FeatureTable(year_arr, columns, {n: roles[n] for n in columns})


def impute_linear(s: TimeSeries) -> TimeSeries:
    """Fill missing points by linear interpolation between observed neighbors.

    Leading/trailing gaps are clamped to the nearest observed value rather
    than extrapolated. Observed points pass through bit-exactly.
    """
    if int(s.observed.sum()) < 2:
        raise DataError("imputation needs at least 2 observed points")
    if s.is_complete:
        return s
    positions = np.arange(len(s), dtype=float)
    filled = np.interp(positions, positions[s.observed], s.values[s.observed])
    filled[s.observed] = s.values[s.observed]
    return s.with_values(filled)


def impute_table(table: FeatureTable) -> FeatureTable:
    """Apply :func:`impute_linear` to every column of a table."""
    columns = {}
    for name, col in table.columns.items():
        try:
            columns[name] = impute_linear(col) if not col.is_complete else col
        except DataError as exc:
            raise DataError(f"column {name!r}: {exc}") from exc
    return FeatureTable(table.years, columns, dict(table.roles))


def zscore(s: TimeSeries) -> tuple[TimeSeries, NormalizationStats]:
    """Standardize a complete series to mean 0, population std 1."""
    values = s.require_complete()
    mean = float(values.mean())
    std = float(values.std())  # population convention (divide by n)
    if std == 0.0:
        raise NumericalError("zero variance: cannot z-score a constant series")
    stats = NormalizationStats(mean, std)
    return s.with_values(stats.apply(values)), stats


def _normal_cdf(x: np.ndarray, mean: float, std: float) -> np.ndarray:
    z = (x - mean) / (std * math.sqrt(2.0))
    return 0.5 * (1.0 + np.array([math.erf(v) for v in z]))


def _kolmogorov_sf(x: float) -> float:
    """Asymptotic Kolmogorov survival function P(K > x)."""
    if x <= 0.0:
        return 1.0
    if x < 1.18:
        # Complement via the theta-function form, which converges fast for small x.
        t = math.exp(-math.pi**2 / (8.0 * x * x))
        cdf = math.sqrt(2.0 * math.pi) / x * (t + t**9 + t**25 + t**49)
        return min(max(1.0 - cdf, 0.0), 1.0)
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 == 1 else -term
        if term < 1e-16:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_normality_test(s: TimeSeries) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against a fitted normal.

    The reference distribution uses the sample's own mean and population
    standard deviation; the p-value comes from the asymptotic Kolmogorov
    distribution. With estimated parameters this p-value is conservative
    (biased toward non-rejection).

    Returns
    -------
    (statistic, p_value) : tuple of float
        Both lie in [0, 1].
    """
    values = s.require_complete()
    n = len(values)
    if n < 5:
        raise DataError(f"too few points for a KS test (n={n}, need >= 5)")
    mean = float(values.mean())
    std = float(values.std())
    if std == 0.0:
        raise NumericalError("constant series: KS test undefined")
    sorted_vals = np.sort(values)
    cdf = _normal_cdf(sorted_vals, mean, std)
    grid = np.arange(1, n + 1) / n
    statistic = float(np.max(np.maximum(grid - cdf, cdf - (grid - 1.0 / n))))
    p_value = _kolmogorov_sf(math.sqrt(n) * statistic)
    return statistic, p_value
