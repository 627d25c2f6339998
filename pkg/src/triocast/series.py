"""Core data containers: annual time series and year-indexed feature tables.

Both containers are frozen dataclasses over numpy arrays and are treated as
immutable; every operation in the toolkit returns new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DataError

INDICATOR = "indicator"
TARGET = "target"


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"expected a 1-d sequence of values, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """An ordered (year, value) sequence with a per-point observed flag.

    Parameters
    ----------
    index : array-like of int
        Strictly increasing integer time stamps (years).
    values : array-like of float
        Observations; positions where ``observed`` is False may be NaN.
    observed : array-like of bool, optional
        True where the value was actually observed. Defaults to all-observed.
    """

    index: np.ndarray
    values: np.ndarray
    observed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        index = np.asarray(self.index, dtype=int)
        values = _as_float_array(self.values)
        if self.observed is None:
            observed = np.ones(len(values), dtype=bool)
        else:
            observed = np.asarray(self.observed, dtype=bool)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", observed)

        if len(index) != len(values) or len(values) != len(observed):
            raise DataError(
                "index, values, and observed must have equal lengths "
                f"({len(index)}, {len(values)}, {len(observed)})"
            )
        if len(values) < 1:
            raise DataError("a series needs at least one point")
        if len(index) > 1 and not np.all(np.diff(index) > 0):
            raise DataError("non-monotone index: time stamps must be strictly increasing")
        if not np.all(np.isfinite(values[observed])):
            raise DataError("observed values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def is_complete(self) -> bool:
        return bool(self.observed.all())

    @property
    def n_missing(self) -> int:
        return int((~self.observed).sum())

    def require_complete(self, what: str = "series") -> np.ndarray:
        """Return the value array, raising if any point is missing."""
        if not self.is_complete:
            raise DataError(f"{what} has {self.n_missing} missing value(s); impute first")
        return self.values

    def with_values(self, values, observed=None) -> "TimeSeries":
        """New series on the same index with replaced values."""
        return TimeSeries(self.index.copy(), values, observed)


def series_from_values(values, start: int = 0) -> TimeSeries:
    """Convenience constructor with a 0-based (or ``start``-based) index."""
    values = _as_float_array(values)
    return TimeSeries(np.arange(start, start + len(values)), values)


@dataclass(frozen=True)
class FeatureTable:
    """Named columns (each a :class:`TimeSeries`) sharing one year index.

    Every column carries a role, either ``"indicator"`` or ``"target"``.
    """

    years: np.ndarray
    columns: dict[str, TimeSeries]
    roles: dict[str, str]

    def __post_init__(self) -> None:
        years = np.asarray(self.years, dtype=int)
        object.__setattr__(self, "years", years)
        if len(years) > 1 and not np.all(np.diff(years) > 0):
            raise DataError("non-monotone index: years must be strictly increasing")
        if not self.columns:
            raise DataError("a table needs at least one column")
        for name, col in self.columns.items():
            if not np.array_equal(col.index, years):
                raise DataError(f"column {name!r} does not share the table's year index")
        unknown = set(self.roles) - set(self.columns)
        if unknown:
            raise DataError(f"roles refer to unknown column(s): {sorted(unknown)}")
        missing = set(self.columns) - set(self.roles)
        if missing:
            raise DataError(f"column(s) without a role: {sorted(missing)}")
        bad = {r for r in self.roles.values() if r not in (INDICATOR, TARGET)}
        if bad:
            raise DataError(f"unknown role(s): {sorted(bad)}")

    @property
    def n_rows(self) -> int:
        return len(self.years)

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    @property
    def indicator_names(self) -> list[str]:
        return [n for n in self.columns if self.roles[n] == INDICATOR]

    @property
    def target_names(self) -> list[str]:
        return [n for n in self.columns if self.roles[n] == TARGET]

    @property
    def n_missing_cells(self) -> int:
        return sum(col.n_missing for col in self.columns.values())

    @property
    def missing_rate(self) -> float:
        """Fraction of missing cells over all value cells."""
        return self.n_missing_cells / (self.n_rows * len(self.columns))

    def column(self, name: str) -> TimeSeries:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r}") from None

    def matrix(self, names: list[str]) -> np.ndarray:
        """Stack the named columns into an (n_rows, len(names)) array."""
        return np.column_stack([self.column(n).values for n in names])

    def with_column(self, name: str, series: TimeSeries) -> "FeatureTable":
        """New table with one column replaced (role preserved)."""
        if name not in self.columns:
            raise DataError(f"no column named {name!r}")
        cols = dict(self.columns)
        cols[name] = series
        return replace(self, columns=cols)

    def head(self, n_rows: int) -> "FeatureTable":
        """New table keeping only the first ``n_rows`` rows."""
        if not 1 <= n_rows <= self.n_rows:
            raise DataError(f"cannot take {n_rows} rows from a {self.n_rows}-row table")
        years = self.years[:n_rows]
        cols = {
            name: TimeSeries(years.copy(), col.values[:n_rows], col.observed[:n_rows])
            for name, col in self.columns.items()
        }
        return FeatureTable(years, cols, dict(self.roles))
