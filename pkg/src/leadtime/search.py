"""5-fold cross-validation and random grid search.

Candidates are sampled uniformly (with replacement, then deduplicated) from
the Cartesian structure of a per-family grid.  Every candidate's seed is
derived from (base seed, candidate index), never drawn from a shared stream,
so the search result is identical whether candidates run on one worker or
many.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import EncodedDataset, SplitPlan
from .models import FAMILIES, fit_model
from .nnet import TrainingDivergedError
from .rng import derive_seed

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "ols": {},
    "lasso": {"lam": [1e-2, 1.0, 1e2, 1e4]},
    "ridge": {"lam": [1e-2, 1.0, 1e2, 1e4]},
    "elastic_net": {"lam": [1e-2, 1.0, 1e2, 1e4], "alpha": [0.2, 0.5, 0.8]},
    "rf": {
        "n_trees": [50, 80],
        "max_depth": [14, 16],
        "min_samples_leaf": [2, 5],
    },
    "gbm": {
        "n_stages": [120, 200],
        "learning_rate": [0.08, 0.12],
        "max_depth": [4, 5],
    },
    "nn": {
        "hidden": [[16], [64], [128], [16, 16], [64, 64], [128, 128]],
        "step_size": [1e-2, 1e-3],
        "epochs": [40],
        "batch_size": [64],
    },
}


@dataclass(frozen=True)
class HyperGrid:
    """Named parameter value lists per model family."""

    grids: dict[str, dict[str, list]]

    def __post_init__(self) -> None:
        for family, grid in self.grids.items():
            if family not in FAMILIES:
                raise ValueError(f"unknown family {family!r} in grid")
            for name, values in grid.items():
                if not isinstance(values, list):
                    raise ValueError(f"{family}.{name} must be a list of values")
                _validate_values(family, name, values)

    @classmethod
    def default(cls) -> "HyperGrid":
        return cls({f: {k: list(v) for k, v in g.items()} for f, g in DEFAULT_GRIDS.items()})

    @classmethod
    def from_file(cls, path) -> "HyperGrid":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib  # type: ignore[import-not-found]
            except ImportError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        else:
            with open(path) as fh:
                raw = json.load(fh)
        return cls({f: {k: list(v) for k, v in g.items()} for f, g in raw.items()})


def _validate_values(family: str, name: str, values: list) -> None:
    if name == "lam" and any(v < 0 for v in values):
        raise ValueError(f"{family}.lam values must be nonnegative")
    if name == "alpha" and any(not 0 <= v <= 1 for v in values):
        raise ValueError(f"{family}.alpha values must be in [0, 1]")
    if name == "learning_rate" and any(not 0 <= v <= 1 for v in values):
        raise ValueError(f"{family}.learning_rate values must be in [0, 1]")
    if name == "step_size" and any(v <= 0 for v in values):
        raise ValueError(f"{family}.step_size values must be positive")
    if name == "hidden":
        for widths in values:
            if not widths or any(int(w) < 1 for w in widths):
                raise ValueError(f"{family}.hidden widths must be >= 1")
    if name in ("n_trees", "n_stages", "epochs", "batch_size", "min_samples_leaf", "m"):
        if any(int(v) < 1 for v in values):
            raise ValueError(f"{family}.{name} values must be >= 1")
    if name == "max_depth" and any(v is not None and int(v) < 1 for v in values):
        raise ValueError(f"{family}.max_depth values must be >= 1 or null")


def cross_validate(
    encoded: EncodedDataset,
    plan: SplitPlan,
    family: str,
    params: dict,
    seed: int,
) -> np.ndarray:
    """Per-fold validation RMSE: fit on k-1 folds, score the held-out one.

    Standardizers (for the families that use them) are refitted inside each
    fold, so validation rows never leak into the scaling.
    """
    if encoded.targets is None:
        raise ValueError("cross_validate needs targets")
    rmses = np.empty(plan.k, dtype=np.float64)
    for fold in range(plan.k):
        fit_rows, val_rows = plan.fold_rows(fold)
        if fit_rows.size < 1 or val_rows.size < 1:
            raise ValueError(f"fold {fold} has an empty side")
        model = fit_model(
            encoded, fit_rows, family, params, derive_seed(seed, "fold", fold)
        )
        pred = model.predict(encoded.matrix[val_rows])
        err = pred - encoded.targets[val_rows]
        rmses[fold] = float(np.sqrt(np.mean(err * err)))
    return rmses


@dataclass(frozen=True)
class TuneResult:
    family: str
    candidates: tuple[dict, ...]  # unique, in first-sampled order
    fold_rmse: tuple[tuple[float, ...], ...]
    mean_rmse: tuple[float, ...]
    winner: int
    n_sampled: int
    base_seed: int

    @property
    def best_params(self) -> dict:
        return dict(self.candidates[self.winner])

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "candidates": list(self.candidates),
            "fold_rmse": [list(r) for r in self.fold_rmse],
            "mean_rmse": list(self.mean_rmse),
            "winner": self.winner,
            "n_sampled": self.n_sampled,
            "base_seed": self.base_seed,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "TuneResult":
        return cls(
            family=payload["family"],
            candidates=tuple(payload["candidates"]),
            fold_rmse=tuple(tuple(r) for r in payload["fold_rmse"]),
            mean_rmse=tuple(payload["mean_rmse"]),
            winner=int(payload["winner"]),
            n_sampled=int(payload["n_sampled"]),
            base_seed=int(payload["base_seed"]),
        )


def _cv_task(args) -> list[float]:
    encoded, plan, family, params, seed = args
    try:
        return cross_validate(encoded, plan, family, params, seed).tolist()
    except TrainingDivergedError:
        # Failed candidate: infinite RMSE keeps it out of the running but
        # lets the search continue.
        return [float("inf")] * plan.k


def random_grid_search(
    encoded: EncodedDataset,
    plan: SplitPlan,
    family: str,
    grid: HyperGrid,
    n_candidates: int,
    seed: int,
    workers: int = 1,
) -> TuneResult:
    """Sample, deduplicate, and cross-validate grid candidates.

    The winner has the minimal mean CV RMSE; ties break toward the earliest
    sampled candidate.  Results are byte-identical for any worker count.
    """
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    if family not in grid.grids:
        raise ValueError(f"grid has no entry for family {family!r}")
    family_grid = grid.grids[family]
    names = sorted(family_grid)
    value_lists = [family_grid[k] for k in names]
    if any(len(v) == 0 for v in value_lists):
        raise ValueError(f"grid for {family!r} has an empty parameter list")
    combos = list(itertools.product(*value_lists))

    rng = np.random.default_rng(derive_seed(seed, "sample", family))
    draws = rng.integers(0, len(combos), size=n_candidates)
    unique_idx: list[int] = []
    for i in draws:
        if int(i) not in unique_idx:
            unique_idx.append(int(i))
    candidates = [dict(zip(names, combos[i])) for i in unique_idx]

    tasks = [
        (encoded, plan, family, params, derive_seed(seed, "cand", family, rank))
        for rank, params in enumerate(candidates)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            fold_rmse = list(pool.map(_cv_task, tasks))
    else:
        fold_rmse = [_cv_task(t) for t in tasks]

    mean_rmse = [float(np.mean(r)) for r in fold_rmse]
    winner = int(np.argmin(mean_rmse))
    return TuneResult(
        family=family,
        candidates=tuple(candidates),
        fold_rmse=tuple(tuple(r) for r in fold_rmse),
        mean_rmse=tuple(mean_rmse),
        winner=winner,
        n_sampled=n_candidates,
        base_seed=seed,
    )
