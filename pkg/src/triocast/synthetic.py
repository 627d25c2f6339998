"""Seeded synthetic demo dataset.

Nine indicator columns with smooth trends plus two target columns built
from a nonlinear coupling of the indicators and an alternating (period-2)
seasonal swing. A small fraction of interior indicator cells (about 2.3%
of all cells) is blanked so the prep workflow has something to impute.
Regenerate with ``python -m triocast.synthetic``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
from pathlib import Path

import numpy as np

from .series import FeatureTable, TimeSeries

DEFAULT_SEED = 20240517
INDICATORS = [
    "urban_income",
    "urban_spending",
    "urbanization_rate",
    "pop_65plus",
    "elderly_ratio",
    "single_population",
    "single_ratio",
    "pet_policies",
    "new_vet_drugs",
]
TARGETS = ["cat_population", "dog_population"]


def _walk(
    rng: np.random.Generator, start: float, drift: float, sd: float, n: int, phi: float = 0.0
) -> np.ndarray:
    """Integrated series: increments are drift plus (optionally AR(1)) shocks."""
    eta = rng.normal(0.0, sd, n)
    if phi:
        for t in range(1, n):
            eta[t] += phi * eta[t - 1]
    return start + np.cumsum(drift + eta)


def make_table(
    seed: int = DEFAULT_SEED,
    n_years: int = 19,
    start_year: int = 2005,
    n_missing_cells: int | None = None,
) -> FeatureTable:
    """Build the demo table; ``n_missing_cells`` defaults to ~2.3% of cells."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_years, dtype=float)

    data = {
        "urban_income": _walk(rng, 10500.0, 2300.0, 420.0, n_years, phi=0.35),
        "urban_spending": _walk(rng, 7100.0, 1450.0, 300.0, n_years),
        "urbanization_rate": _walk(rng, 43.0, 1.25, 0.35, n_years),
        "pop_65plus": _walk(rng, 10050.0, 640.0, 130.0, n_years),
        "elderly_ratio": _walk(rng, 7.7, 0.38, 0.1, n_years),
        "single_population": _walk(rng, 17800.0, 330.0, 120.0, n_years),
        "single_ratio": _walk(rng, 14.2, 0.31, 0.1, n_years),
        "pet_policies": _walk(rng, 2.0, 0.62, 0.5, n_years),
        "new_vet_drugs": _walk(rng, 21.0, 3.6, 2.2, n_years),
    }

    season = np.where(t.astype(int) % 2 == 0, 1.0, -1.0)
    income = data["urban_income"]
    aging = data["elderly_ratio"]
    policies = data["pet_policies"]
    data["cat_population"] = (
        900.0
        + 0.075 * income
        + 0.004 * income * np.tanh((aging - 10.0) / 4.0)
        + 55.0 * season
        + rng.normal(0.0, 25.0, n_years)
    )
    data["dog_population"] = (
        4300.0
        + 0.022 * income
        - 30.0 * policies
        + 0.15 * np.sqrt(np.maximum(data["single_population"], 0.0))
        - 70.0 * season
        + rng.normal(0.0, 28.0, n_years)
    )

    years = np.arange(start_year, start_year + n_years)
    n_columns = len(INDICATORS) + len(TARGETS)
    if n_missing_cells is None:
        n_missing_cells = round(0.023 * n_years * n_columns)

    observed = {name: np.ones(n_years, dtype=bool) for name in data}
    # Blank interior indicator cells only, so imputation never extrapolates.
    cells = [(name, row) for name in INDICATORS for row in range(1, n_years - 1)]
    for pos in rng.choice(len(cells), size=n_missing_cells, replace=False):
        name, row = cells[pos]
        observed[name][row] = False
        data[name][row] = math.nan

    columns = {
        name: TimeSeries(years, np.round(data[name], 4), observed[name])
        for name in INDICATORS + TARGETS
    }
    roles = {name: "indicator" for name in INDICATORS}
    roles.update({name: "target" for name in TARGETS})
    return FeatureTable(years, columns, roles)


def write_csv(table: FeatureTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year"] + table.column_names)
        for i, year in enumerate(table.years):
            row = [str(int(year))]
            for name in table.column_names:
                col = table.column(name)
                row.append(repr(float(col.values[i])) if col.observed[i] else "")
            writer.writerow(row)


def write_schema(table: FeatureTable, path: str | Path) -> None:
    schema = {"indicators": table.indicator_names, "targets": table.target_names}
    Path(path).write_text(json.dumps(schema, indent=2) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data", help="output directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = make_table(seed=args.seed)
    write_csv(table, out / "synthetic_pets.csv")
    write_schema(table, out / "synthetic_pets_schema.json")
    print(f"wrote {out / 'synthetic_pets.csv'} ({table.n_rows} rows, "
          f"{len(table.column_names)} columns, missing rate {table.missing_rate:.4f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
