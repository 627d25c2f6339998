"""Regression random forest with variance-impurity feature importances.

Trees are grown on bootstrap resamples; each split maximizes the weighted
impurity decrease I_t - (N_L/N_t) I_L - (N_R/N_t) I_R with node impurity
taken as the (population) variance of the targets. Per-feature importances
accumulate the decreases weighted by the node's sample share and are
normalized to sum to one across features.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .exceptions import DataError, NumericalError
from .series import FeatureTable


@dataclass
class TreeNode:
    """A split node (feature is set) or a leaf (feature is None)."""

    n_samples: int
    prediction: float
    impurity: float
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _node_stats(y: np.ndarray) -> tuple[float, float]:
    mean = float(y.mean())
    return mean, float(((y - mean) ** 2).mean())


def best_split(
    X: np.ndarray, y: np.ndarray, feature_ids: np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity_decrease) over candidate features.

    Thresholds are midpoints between consecutive distinct sorted values.
    Ties break toward the lowest feature index, then the lowest threshold;
    returns None when no split strictly decreases weighted impurity.
    """
    n = len(y)
    best: tuple[int, float, float] | None = None
    for f in np.sort(feature_ids):
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], y[order]
        distinct = xs[:-1] < xs[1:]
        if not distinct.any():
            continue
        # Fast within-feature scan using the between-groups form of the
        # weighted impurity decrease:
        # I_t - (N_L I_L + N_R I_R)/N_t = N_L N_R (mean_L - mean_R)^2 / N_t^2.
        left_sum = np.cumsum(ys)[:-1]
        right_sum = np.cumsum(ys[::-1])[:-1][::-1]
        n_left = np.arange(1, n)
        n_right = n - n_left
        mean_gap = left_sum / n_left - right_sum / n_right
        decrease = (n_left * n_right) * mean_gap * mean_gap / (n * n)
        decrease[~distinct] = -math.inf
        pos = int(np.argmax(decrease))  # first max -> lowest threshold
        if not decrease[pos] > 0.0:
            continue
        # Recompute this candidate's gain from the row-order mask: features
        # inducing the same partition then yield bitwise-identical gains,
        # so the lowest-feature-index tie-break acts on true ties.
        threshold = float((xs[pos] + xs[pos + 1]) / 2.0)
        mask = x <= threshold
        n_l = int(mask.sum())
        gap = float(y[mask].mean()) - float(y[~mask].mean())
        gain = n_l * (n - n_l) * gap * gap / (n * n)
        if gain > 0.0 and (best is None or gain > best[2]):
            best = (int(f), threshold, gain)
    return best


class ForestRegressor(RegressorMixin, BaseEstimator):
    """Bootstrap-aggregated CART regression forest.

    Parameters
    ----------
    n_trees : int
        Number of trees.
    max_depth : int or None
        Depth limit; None grows until nodes are pure or too small.
    min_samples_split : int
        Minimum node size eligible for splitting.
    mtry : int or None
        Features drawn per split; None means ceil(n_features / 3).
    bootstrap : bool
        Resample rows (size n, with replacement) per tree.
    seed : int
        Master seed; per-tree streams are spawned from it, so training is
        reproducible tree by tree.
    """

    def __init__(
        self,
        n_trees: int = 500,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        mtry: int | None = None,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.mtry = mtry
        self.bootstrap = bootstrap
        self.seed = seed

    def _resolve_mtry(self, n_features: int) -> int:
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")
        mtry = self.mtry if self.mtry is not None else math.ceil(n_features / 3)
        if not 1 <= mtry <= n_features:
            raise DataError(f"mtry must lie in [1, {n_features}], got {mtry}")
        return mtry

    def fit(self, X, y, feature_names: list[str] | None = None) -> "ForestRegressor":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2:
            raise DataError(f"X must be 2-d, got shape {X.shape}")
        if len(X) != len(y):
            raise DataError(f"misaligned index: {len(X)} rows of X vs {len(y)} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("training data contains missing or non-finite values")
        n, n_features = X.shape
        if n < self.min_samples_split:
            raise DataError(f"too few rows: {n} < min_samples_split={self.min_samples_split}")
        mtry = self._resolve_mtry(n_features)
        if feature_names is not None and len(feature_names) != n_features:
            raise DataError("feature_names length does not match X")

        streams = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        trees = []
        importance_sums = np.zeros(n_features)
        for tree_seed in streams:
            rng = np.random.default_rng(tree_seed)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            trees.append(
                self._grow(X[rows], y[rows], rng, mtry, importance_sums, n_total=n, depth=0)
            )

        self.n_features_in_ = n_features
        self.feature_names_ = list(feature_names) if feature_names else None
        self.trees_ = trees
        total = importance_sums.sum()
        if total > 0.0:
            self._raw_importances = importance_sums / total
        else:
            self._raw_importances = None
            warnings.warn(
                "forest contains no splits (constant target?); importances undefined",
                RuntimeWarning,
                stacklevel=2,
            )
        return self

    def _grow(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rng: np.random.Generator,
        mtry: int,
        importance_sums: np.ndarray,
        n_total: int,
        depth: int,
    ) -> TreeNode:
        n = len(y)
        mean, impurity = _node_stats(y)
        node = TreeNode(n_samples=n, prediction=mean, impurity=impurity)
        if (
            n < self.min_samples_split
            or impurity == 0.0
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return node
        chosen = best_split(X, y, rng.choice(X.shape[1], size=mtry, replace=False))
        if chosen is None:
            return node
        feature, threshold, decrease = chosen
        importance_sums[feature] += decrease * n / n_total
        mask = X[:, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._grow(X[mask], y[mask], rng, mtry, importance_sums, n_total, depth + 1)
        node.right = self._grow(X[~mask], y[~mask], rng, mtry, importance_sums, n_total, depth + 1)
        return node

    @property
    def feature_importances_(self) -> np.ndarray:
        """Normalized impurity-decrease importances (sum to 1)."""
        self._require_fitted()
        if self._raw_importances is None:
            raise NumericalError("all-leaf forest: feature importances undefined")
        return self._raw_importances

    def _require_fitted(self) -> None:
        if not hasattr(self, "trees_"):
            raise NotFittedError("this ForestRegressor instance is not fitted yet")

    def predict(self, X) -> np.ndarray | float:
        """Mean of per-tree leaf predictions; 1-d input yields a scalar."""
        self._require_fitted()
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("prediction input contains non-finite values")
        out = np.zeros(len(X))
        for i, x in enumerate(X):
            out[i] = sum(_leaf_value(tree, x) for tree in self.trees_) / len(self.trees_)
        return float(out[0]) if single else out


def _leaf_value(node: TreeNode, x: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.prediction


def fit_forest(table: FeatureTable, target: str, **params) -> ForestRegressor:
    """Train a forest mapping a table's indicator columns to one target."""
    names = table.indicator_names
    if not names:
        raise DataError("table has no indicator columns")
    if target not in table.target_names:
        raise DataError(f"{target!r} is not a target column of this table")
    X = table.matrix(names)
    y = table.column(target).require_complete(f"target {target!r}")
    return ForestRegressor(**params).fit(X, y, feature_names=names)


def feature_importance(forest: ForestRegressor) -> dict[str, float]:
    """Raw (sum-to-one) importances keyed by feature name."""
    raw = forest.feature_importances_
    names = forest.feature_names_ or [f"x{i}" for i in range(forest.n_features_in_)]
    return {name: float(v) for name, v in zip(names, raw)}


def standardize_importances(raw: dict[str, float]) -> dict[str, float]:
    """Z-score a raw importance map: (I - mean(I)) / std(I), population std."""
    if len(raw) < 2:
        raise DataError("standardization needs at least 2 features")
    values = np.asarray(list(raw.values()), dtype=float)
    mean, std = float(values.mean()), float(values.std())
    if std == 0.0:
        raise NumericalError("zero variance across importances: standardization undefined")
    return {name: float((v - mean) / std) for name, v in raw.items()}
