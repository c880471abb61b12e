"""Design-matrix construction: one-hot encoding, standardization, splits.

Schemas (category vocabularies, imputation medians) are learned from
training rows only; test rows never influence them.  Unseen test-time
categories encode as all-zero blocks and are counted per feature.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .records import (
    CATEGORICAL_FEATURES,
    FEATURE_ORDER,
    FeatureSchema,
    FeatureSpec,
    ProductOrder,
    derive_target,
    feature_values,
)

KIND_ONEHOT = "onehot"
KIND_NUMERIC = "numeric"
KIND_MISSING_FLAG = "missing_flag"


@dataclass(frozen=True)
class ColumnMeta:
    source: str
    kind: str
    category: str | None = None

    @property
    def label(self) -> str:
        if self.kind == KIND_ONEHOT:
            return f"{self.source}={self.category}"
        if self.kind == KIND_MISSING_FLAG:
            return f"{self.source}__missing"
        return self.source


@dataclass(frozen=True)
class EncodedDataset:
    """Numeric design matrix, targets, and per-column provenance."""

    matrix: np.ndarray
    targets: np.ndarray | None
    column_meta: tuple[ColumnMeta, ...]
    schema: FeatureSchema
    row_ids: tuple[str, ...]
    unseen_counts: dict[str, int]

    def __post_init__(self) -> None:
        n, d = self.matrix.shape
        if len(self.column_meta) != d:
            raise ValueError("column_meta length must equal matrix width")
        if len(self.row_ids) != n:
            raise ValueError("row_ids length must equal matrix height")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("design matrix contains non-finite entries")
        if self.targets is not None and len(self.targets) != n:
            raise ValueError("targets length must equal matrix height")

    @property
    def fingerprint(self) -> str:
        joined = "|".join(m.label for m in self.column_meta).encode()
        return hashlib.sha256(joined).hexdigest()[:16]

    def numeric_columns(self) -> np.ndarray:
        return np.array(
            [i for i, m in enumerate(self.column_meta) if m.kind == KIND_NUMERIC],
            dtype=np.int64,
        )

    def take(self, rows: np.ndarray) -> "EncodedDataset":
        return replace(
            self,
            matrix=self.matrix[rows],
            targets=None if self.targets is None else self.targets[rows],
            row_ids=tuple(self.row_ids[int(i)] for i in rows),
        )


def learn_schema(orders: Sequence[ProductOrder]) -> FeatureSchema:
    """Learn vocabularies and the contract-time imputation median.

    Must only ever see training rows.
    """
    if not orders:
        raise ValueError("cannot learn a schema from zero orders")
    values = [feature_values(o) for o in orders]
    specs = []
    for name in FEATURE_ORDER:
        if name in CATEGORICAL_FEATURES:
            vocab = tuple(sorted({str(v[name]) for v in values}))
            specs.append(FeatureSpec(name=name, kind="categorical", vocabulary=vocab))
        elif name == "contract_delivery_time":
            present = [float(v[name]) for v in values if v[name] is not None]
            median = float(np.median(present)) if present else 0.0
            specs.append(
                FeatureSpec(
                    name=name,
                    kind="numerical",
                    missing_policy="median_impute_with_flag",
                    impute_value=median,
                )
            )
        else:
            specs.append(FeatureSpec(name=name, kind="numerical"))
    return FeatureSchema(features=tuple(specs))


def _columns_for(schema: FeatureSchema) -> tuple[ColumnMeta, ...]:
    meta: list[ColumnMeta] = []
    for spec in schema.features:
        if spec.kind == "categorical":
            for cat in spec.vocabulary:
                meta.append(ColumnMeta(spec.name, KIND_ONEHOT, cat))
        else:
            meta.append(ColumnMeta(spec.name, KIND_NUMERIC))
            if spec.missing_policy == "median_impute_with_flag":
                meta.append(ColumnMeta(spec.name, KIND_MISSING_FLAG))
    return tuple(meta)


def one_hot_encode(
    orders: Sequence[ProductOrder],
    schema: FeatureSchema,
    with_targets: bool = True,
) -> EncodedDataset:
    """Encode orders against a learned schema.

    Categorical features expand to one binary column per vocabulary entry;
    unseen categories become all-zero blocks and are counted.  A missing
    contract delivery time is imputed with the training median and flagged
    in a companion indicator column.
    """
    meta = _columns_for(schema)
    n, d = len(orders), len(meta)
    matrix = np.zeros((n, d), dtype=np.float64)
    unseen = {name: 0 for name in CATEGORICAL_FEATURES}
    targets = np.empty(n, dtype=np.float64) if with_targets else None

    col_of: dict[tuple[str, str], int] = {}
    base_col: dict[str, int] = {}
    for j, m in enumerate(meta):
        if m.kind == KIND_ONEHOT:
            col_of[(m.source, m.category)] = j
        elif m.kind == KIND_NUMERIC:
            base_col[m.source] = j

    for i, order in enumerate(orders):
        vals = feature_values(order)
        for spec in schema.features:
            value = vals[spec.name]
            if spec.kind == "categorical":
                j = col_of.get((spec.name, str(value)))
                if j is None:
                    unseen[spec.name] += 1
                else:
                    matrix[i, j] = 1.0
            else:
                j = base_col[spec.name]
                if value is None:
                    matrix[i, j] = spec.impute_value or 0.0
                    matrix[i, j + 1] = 1.0
                else:
                    matrix[i, j] = float(value)
        if targets is not None:
            targets[i] = float(derive_target(order))

    return EncodedDataset(
        matrix=matrix,
        targets=targets,
        column_meta=meta,
        schema=schema,
        row_ids=tuple(o.order_id for o in orders),
        unseen_counts=unseen,
    )


@dataclass(frozen=True)
class Standardizer:
    """Per-column centering/scaling learned from training rows.

    Only plain numeric columns are standardized; one-hot and missing-flag
    columns pass through.  Constant columns are left unscaled and flagged.
    """

    columns: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    constant_columns: tuple[int, ...]

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        out = matrix.astype(np.float64, copy=True)
        out[:, self.columns] = (out[:, self.columns] - self.mean) / self.scale
        return out

    def to_json_dict(self) -> dict:
        return {
            "columns": self.columns.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "constant_columns": list(self.constant_columns),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "Standardizer":
        return cls(
            columns=np.asarray(payload["columns"], dtype=np.int64),
            mean=np.asarray(payload["mean"], dtype=np.float64),
            scale=np.asarray(payload["scale"], dtype=np.float64),
            constant_columns=tuple(payload["constant_columns"]),
        )


def fit_standardizer(
    matrix: np.ndarray, numeric_columns: np.ndarray
) -> Standardizer:
    """Learn population mean/std of the numeric columns of training rows."""
    if matrix.shape[0] < 2:
        raise ValueError("standardizer needs at least 2 training rows")
    sub = matrix[:, numeric_columns]
    mean = sub.mean(axis=0)
    std = sub.std(axis=0)  # population std
    constant = std == 0.0
    scale = np.where(constant, 1.0, std)
    mean = np.where(constant, 0.0, mean)
    return Standardizer(
        columns=np.asarray(numeric_columns, dtype=np.int64),
        mean=mean,
        scale=scale,
        constant_columns=tuple(
            int(c) for c, flag in zip(numeric_columns, constant) if flag
        ),
    )


def apply_standardizer(standardizer: Standardizer, matrix: np.ndarray) -> np.ndarray:
    return standardizer.transform(matrix)


@dataclass(frozen=True)
class SplitPlan:
    """Train/test partition plus k-fold assignment over the training rows."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    fold_of: np.ndarray  # aligned with train_indices
    k: int
    seed: int

    def fold_rows(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(fit_rows, validation_rows) as dataset row indices."""
        mask = self.fold_of == fold
        return self.train_indices[~mask], self.train_indices[mask]

    def to_json_dict(self) -> dict:
        return {
            "train_indices": self.train_indices.tolist(),
            "test_indices": self.test_indices.tolist(),
            "fold_of": self.fold_of.tolist(),
            "k": self.k,
            "seed": self.seed,
        }


def split(n: int, ratio: float, k: int, seed: int) -> SplitPlan:
    """Seeded train/test split with round-robin fold assignment.

    Train size is floor(ratio * n); folds are dealt round-robin over the
    shuffled training rows so sizes differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(ratio * n))
    train = perm[:n_train].astype(np.int64)
    test = perm[n_train:].astype(np.int64)
    fold_of = np.arange(n_train, dtype=np.int64) % k
    return SplitPlan(train_indices=train, test_indices=test, fold_of=fold_of, k=k, seed=seed)


def encoded_to_csv(encoded: EncodedDataset, path) -> None:
    """Dump the design matrix for external inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["row_id"] + [m.label for m in encoded.column_meta]
        if encoded.targets is not None:
            header.append("target")
        writer.writerow(header)
        for i, row_id in enumerate(encoded.row_ids):
            row = [row_id] + [repr(float(v)) for v in encoded.matrix[i]]
            if encoded.targets is not None:
                row.append(repr(float(encoded.targets[i])))
            writer.writerow(row)
