"""CART regression trees, random forest, gradient boosting, and
impurity-based feature importance.

Splits greedily maximize the weighted variance decrease (equivalently the
SSE reduction); thresholds are midpoints between consecutive sorted unique
values, ties broken by lowest column index then lowest threshold, so fits
are fully deterministic given their seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import derive_seed


@dataclass(frozen=True)
class RegressionTree:
    """Array-of-fields binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray  # target variance at the node
    gain: np.ndarray  # SSE decrease of the split; 0 at leaves
    n_fit_rows: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int(np.sum(self.feature >= 0))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.float64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            f = int(self.feature[node])
            if f < 0:
                out[rows] = self.value[node]
            else:
                mask = X[rows, f] <= self.threshold[node]
                stack.append((int(self.left[node]), rows[mask]))
                stack.append((int(self.right[node]), rows[~mask]))
        return out

    def to_json_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "impurity": self.impurity.tolist(),
            "gain": self.gain.tolist(),
            "n_fit_rows": self.n_fit_rows,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int32),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int32),
            right=np.asarray(payload["right"], dtype=np.int32),
            value=np.asarray(payload["value"], dtype=np.float64),
            n_samples=np.asarray(payload["n_samples"], dtype=np.int64),
            impurity=np.asarray(payload["impurity"], dtype=np.float64),
            gain=np.asarray(payload["gain"], dtype=np.float64),
            n_fit_rows=int(payload["n_fit_rows"]),
        )


def _tree_seed(rng: int | np.random.Generator | None) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(1 << 63))
    return 0 if rng is None else int(rng)


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    max_depth: int | None,
    min_samples_leaf: int,
    m: int,
    seed: int,
) -> RegressionTree:
    arrays = kernels.grow_tree(
        X,
        y,
        np.ascontiguousarray(rows, dtype=np.int64),
        -1 if max_depth is None else int(max_depth),
        int(min_samples_leaf),
        int(m),
        seed & ((1 << 64) - 1),
    )
    feature, threshold, left, right, value, n_samples, impurity, gain = arrays
    return RegressionTree(
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        value=value,
        n_samples=n_samples,
        impurity=impurity,
        gain=gain,
        n_fit_rows=int(rows.size),
    )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    feature_subset_size: int | None = None,
    rng: int | np.random.Generator | None = None,
) -> RegressionTree:
    """Grow a CART regression tree by greedy variance-reduction splitting.

    At each node the candidate columns are a uniform random subset of
    ``feature_subset_size`` (all columns when None or >= d).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if n < min_samples_leaf or n < 1:
        raise ValueError(f"need at least {min_samples_leaf} rows, got {n}")
    m = d if feature_subset_size is None else int(feature_subset_size)
    if not 1 <= m <= d:
        raise ValueError(f"feature_subset_size must be in [1, {d}]")
    return _grow(
        X,
        y,
        np.arange(n, dtype=np.int64),
        max_depth,
        min_samples_leaf,
        m,
        _tree_seed(rng),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[RegressionTree, ...]
    n_trees: int
    features_per_split: int
    bootstrap: bool
    seed: int
    tree_seeds: tuple[int, ...]

    def predict(self, X: np.ndarray) -> np.ndarray:
        preds = np.stack([tree.predict(X) for tree in self.trees])
        return preds.mean(axis=0)

    def to_json_dict(self) -> dict:
        return {
            "trees": [t.to_json_dict() for t in self.trees],
            "n_trees": self.n_trees,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "tree_seeds": list(self.tree_seeds),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ForestModel":
        return cls(
            trees=tuple(
                RegressionTree.from_json_dict(t) for t in payload["trees"]
            ),
            n_trees=int(payload["n_trees"]),
            features_per_split=int(payload["features_per_split"]),
            bootstrap=bool(payload["bootstrap"]),
            seed=int(payload["seed"]),
            tree_seeds=tuple(payload["tree_seeds"]),
        )


def default_feature_subset(d: int) -> int:
    return -(-d // 3)  # ceil(d / 3)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 100,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    m: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
) -> ForestModel:
    """Bagged trees with per-node feature subsetting of size m.

    Each tree sees an n-sized bootstrap resample; its seed is derived from
    (seed, tree index) so fits are reproducible under any scheduling.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if m is None:
        m = default_feature_subset(d)
    if m > d:
        raise ValueError(f"m={m} exceeds the {d} available columns")
    tree_seeds = tuple(derive_seed(seed, "tree", t) for t in range(n_trees))
    trees = []
    for tseed in tree_seeds:
        if bootstrap:
            rows = np.random.default_rng(tseed).integers(0, n, size=n)
        else:
            rows = np.arange(n, dtype=np.int64)
        trees.append(
            _grow(
                X,
                y,
                rows,
                max_depth,
                min_samples_leaf,
                m,
                derive_seed(tseed, "cols"),
            )
        )
    return ForestModel(
        trees=tuple(trees),
        n_trees=n_trees,
        features_per_split=m,
        bootstrap=bootstrap,
        seed=seed,
        tree_seeds=tree_seeds,
    )


@dataclass(frozen=True)
class GbmModel:
    """Stagewise sum of shrunken regression trees on residuals."""

    initial: float
    stages: tuple[RegressionTree, ...]
    learning_rate: float
    mse_history: tuple[float, ...]  # training MSE before stage 1, then after each stage

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.full(np.asarray(X).shape[0], self.initial, dtype=np.float64)
        for tree in self.stages:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_json_dict(self) -> dict:
        return {
            "initial": self.initial,
            "stages": [t.to_json_dict() for t in self.stages],
            "learning_rate": self.learning_rate,
            "mse_history": list(self.mse_history),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GbmModel":
        return cls(
            initial=float(payload["initial"]),
            stages=tuple(
                RegressionTree.from_json_dict(t) for t in payload["stages"]
            ),
            learning_rate=float(payload["learning_rate"]),
            mse_history=tuple(payload["mse_history"]),
        )


def fit_gbm(
    X: np.ndarray,
    y: np.ndarray,
    n_stages: int,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    min_samples_leaf: int = 1,
    seed: int = 0,
) -> GbmModel:
    """Boosting for squared loss: each stage fits the current residuals.

    learning_rate may be 0, in which case the model predicts the training
    mean everywhere.
    """
    if n_stages < 1:
        raise ValueError("n_stages must be >= 1")
    if not 0.0 <= learning_rate <= 1.0:
        raise ValueError("learning_rate must be in [0, 1]")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    # X never changes across stages, so presort each column once.
    order = np.ascontiguousarray(
        np.argsort(X, axis=0, kind="stable").T, dtype=np.int64
    )
    initial = float(y.mean())
    resid = y - initial
    mse_history = [float(np.mean(resid * resid))]
    stages = []
    for _ in range(n_stages):
        arrays = kernels.grow_tree_dense(
            X,
            np.ascontiguousarray(resid),
            order,
            -1 if max_depth is None else int(max_depth),
            int(min_samples_leaf),
        )
        tree = RegressionTree(*arrays, n_fit_rows=n)
        resid = resid - learning_rate * tree.predict(X)
        stages.append(tree)
        mse_history.append(float(np.mean(resid * resid)))
    return GbmModel(
        initial=initial,
        stages=tuple(stages),
        learning_rate=float(learning_rate),
        mse_history=tuple(mse_history),
    )


@dataclass(frozen=True)
class ImportanceReport:
    """Per-source-feature importance percentages (one-hot columns folded
    back into their source feature)."""

    percentages: dict[str, float]
    degenerate: bool  # no splits anywhere: all-zero, unnormalized

    def ranking(self) -> list[tuple[str, float]]:
        return sorted(self.percentages.items(), key=lambda kv: -kv[1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("feature,percentage\n")
            for name, pct in self.ranking():
                fh.write(f"{name},{pct!r}\n")


def feature_importance(model, column_meta) -> ImportanceReport:
    """Mean-decrease-in-impurity importance, normalized to sum to 100.

    Per split the contribution is (node samples / n) * variance decrease,
    i.e. the split's SSE reduction over the tree's row count; contributions
    are summed per column, averaged over trees, folded back to source
    features, and normalized.
    """
    if isinstance(model, ForestModel):
        trees = model.trees
    elif isinstance(model, GbmModel):
        trees = model.stages
    else:
        raise TypeError(f"no impurity importance for {type(model).__name__}")
    d = len(column_meta)
    per_column = np.zeros(d, dtype=np.float64)
    for tree in trees:
        mask = tree.feature >= 0
        contrib = np.zeros(d, dtype=np.float64)
        np.add.at(contrib, tree.feature[mask], tree.gain[mask])
        per_column += contrib / tree.n_fit_rows
    per_column /= len(trees)

    sources: list[str] = []
    for meta in column_meta:
        if meta.source not in sources:
            sources.append(meta.source)
    per_source = {name: 0.0 for name in sources}
    for j, meta in enumerate(column_meta):
        per_source[meta.source] += float(per_column[j])

    total = sum(per_source.values())
    if total <= 0.0:
        return ImportanceReport(percentages=per_source, degenerate=True)
    return ImportanceReport(
        percentages={k: 100.0 * v / total for k, v in per_source.items()},
        degenerate=False,
    )
