"""Uniform training/prediction surface over the seven model families,
plus JSON persistence with a column-layout fingerprint."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linear, nnet, trees
from .encoding import EncodedDataset, Standardizer, fit_standardizer

FAMILIES = ("ols", "lasso", "ridge", "elastic_net", "rf", "gbm", "nn")
TREE_FAMILIES = frozenset({"rf", "gbm"})
# Tree-based models skip standardization; everything else trains on
# standardized numeric columns.
STANDARDIZED_FAMILIES = frozenset(FAMILIES) - TREE_FAMILIES

DEFAULT_PARAMS: dict[str, dict] = {
    "ols": {},
    "lasso": {"lam": 1.0},
    "ridge": {"lam": 1.0},
    "elastic_net": {"lam": 1.0, "alpha": 0.5},
    "rf": {"n_trees": 80, "max_depth": 16, "min_samples_leaf": 2},
    "gbm": {"n_stages": 150, "learning_rate": 0.1, "max_depth": 4},
    "nn": {"hidden": [64], "step_size": 1e-2, "epochs": 60, "batch_size": 64},
}


class TrainingError(RuntimeError):
    """A model fit failed."""


@dataclass
class TrainedModel:
    family: str
    params: dict
    inner: object
    standardizer: Standardizer | None
    fingerprint: str

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        mat = np.asarray(matrix, dtype=np.float64)
        if self.standardizer is not None:
            mat = self.standardizer.transform(mat)
        if self.family in ("ols", "lasso", "ridge", "elastic_net"):
            return linear.predict(self.inner, mat)
        if self.family == "nn":
            return nnet.predict_mlp(self.inner, mat)
        return self.inner.predict(mat)


def _fit_inner(family: str, X: np.ndarray, y: np.ndarray, params: dict, seed: int):
    if family == "ols":
        model, _ = linear.fit_ols(X, y)
        return model
    if family == "ridge":
        return linear.fit_ridge(X, y, lam=params["lam"])
    if family == "lasso":
        model, _ = linear.fit_lasso(X, y, lam=params["lam"])
        return model
    if family == "elastic_net":
        model, _ = linear.fit_elastic_net(
            X, y, lam=params["lam"], alpha=params["alpha"]
        )
        return model
    if family == "rf":
        return trees.fit_random_forest(
            X,
            y,
            n_trees=params.get("n_trees", 100),
            max_depth=params.get("max_depth"),
            min_samples_leaf=params.get("min_samples_leaf", 1),
            m=params.get("m"),
            seed=seed,
        )
    if family == "gbm":
        return trees.fit_gbm(
            X,
            y,
            n_stages=params.get("n_stages", 100),
            learning_rate=params.get("learning_rate", 0.1),
            max_depth=params.get("max_depth", 3),
            min_samples_leaf=params.get("min_samples_leaf", 1),
            seed=seed,
        )
    if family == "nn":
        config = nnet.TrainConfig(
            hidden=tuple(params.get("hidden", [64])),
            epochs=params.get("epochs", 60),
            step_size=params.get("step_size", 1e-2),
            batch_size=params.get("batch_size", 64),
            seed=seed,
        )
        model, _ = nnet.fit_mlp(X, y, config)
        return model
    raise ValueError(f"unknown model family {family!r}")


def fit_model(
    encoded: EncodedDataset,
    rows: np.ndarray,
    family: str,
    params: dict,
    seed: int,
) -> TrainedModel:
    """Fit one family on the given rows of an encoded dataset.

    Standardization (where the family uses it) is learned from exactly these
    rows, so cross-validation folds never leak their validation rows.
    """
    if encoded.targets is None:
        raise ValueError("encoded dataset has no targets")
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cannot fit on zero rows")
    X = encoded.matrix[rows]
    y = encoded.targets[rows]
    standardizer = None
    if family in STANDARDIZED_FAMILIES:
        standardizer = fit_standardizer(X, encoded.numeric_columns())
        X = standardizer.transform(X)
    inner = _fit_inner(family, X, y, params, seed)
    return TrainedModel(
        family=family,
        params=dict(params),
        inner=inner,
        standardizer=standardizer,
        fingerprint=encoded.fingerprint,
    )


def save_model(model: TrainedModel, path) -> None:
    payload = {
        "family": model.family,
        "params": model.params,
        "fingerprint": model.fingerprint,
        "standardizer": (
            None if model.standardizer is None else model.standardizer.to_json_dict()
        ),
        "inner": model.inner.to_json_dict(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        payload = json.load(fh)
    family = payload["family"]
    inner_payload = payload["inner"]
    if family in ("ols", "lasso", "ridge", "elastic_net"):
        inner = linear.LinearModel.from_json_dict(inner_payload)
    elif family == "rf":
        inner = trees.ForestModel.from_json_dict(inner_payload)
    elif family == "gbm":
        inner = trees.GbmModel.from_json_dict(inner_payload)
    elif family == "nn":
        inner = nnet.MlpModel.from_json_dict(inner_payload)
    else:
        raise ValueError(f"unknown model family {family!r}")
    standardizer = (
        None
        if payload["standardizer"] is None
        else Standardizer.from_json_dict(payload["standardizer"])
    )
    return TrainedModel(
        family=family,
        params=payload["params"],
        inner=inner,
        standardizer=standardizer,
        fingerprint=payload["fingerprint"],
    )
