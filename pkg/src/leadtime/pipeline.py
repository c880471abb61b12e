"""End-to-end pipeline stages and deterministic artifact management.

Every stage writes its artifacts under one output directory and the manifest
lists each file with a content hash, so identical configs and seeds produce
byte-identical manifests regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .encoding import (
    EncodedDataset,
    SplitPlan,
    encoded_to_csv,
    learn_schema,
    one_hot_encode,
    split,
)
from .metrics import (
    EvaluationReport,
    comparison_report,
    write_forty_five_csv,
    write_forty_five_svg,
    write_histogram_csv,
    write_histogram_svg,
)
from .models import (
    DEFAULT_PARAMS,
    FAMILIES,
    TREE_FAMILIES,
    TrainedModel,
    TrainingError,
    fit_model,
    load_model,
    save_model,
)
from .planning import (
    DateInputs,
    build_load_profile,
    lane_of,
    select_planning_date,
    write_decisions_csv,
    write_load_profiles_csv,
    write_overflow_csv,
)
from .records import DataError, Dataset, FeatureSchema, read_csv, write_csv
from .rng import derive_seed
from .search import HyperGrid, TuneResult, random_grid_search
from .synth import GeneratorConfig, generate, write_ground_truth
from .trees import feature_importance

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    out_dir: Path
    seed: int
    input_csv: Path | None = None
    synth: GeneratorConfig | None = None
    ratio: float = 0.8
    folds: int = 5
    families: tuple[str, ...] = FAMILIES
    grid: HyperGrid | None = None
    n_candidates: int = 3
    workers: int = 1
    max_bad_rows: int = 0
    destination: str = "US"
    granularity: str = "month"
    horizon_periods: int = 12
    svg: bool = True

    def __post_init__(self) -> None:
        self.out_dir = Path(self.out_dir)
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise ValueError(f"unknown families: {unknown}")


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir: Path) -> Path:
    """List every artifact with a sha256 content hash, sorted by path."""
    out_dir = Path(out_dir)
    entries = []
    for path in sorted(out_dir.rglob("*")):
        if not path.is_file() or path.name == "manifest.json":
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries.append(
            {
                "path": str(path.relative_to(out_dir)),
                "sha256": digest,
                "bytes": path.stat().st_size,
            }
        )
    manifest = out_dir / "manifest.json"
    _write_json({"files": entries}, manifest)
    return manifest


def load_input(config: RunConfig) -> Dataset:
    """Dataset from the synth config or the input CSV (with row diagnostics)."""
    if config.synth is not None:
        dataset, _ = generate(config.synth)
        return dataset
    if config.input_csv is None:
        raise DataError("no input: provide a CSV path or a generator config")
    dataset, issues = read_csv(config.input_csv)
    if len(issues) > config.max_bad_rows:
        raise DataError(
            f"{config.input_csv}: {len(issues)} malformed/invalid rows "
            f"(limit {config.max_bad_rows}); first: {issues[0]}"
        )
    return dataset


def stage_synth(config: RunConfig) -> Dataset:
    assert config.synth is not None
    dataset, truth = generate(config.synth)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, config.out_dir / "dataset.csv")
    write_ground_truth(truth, config.out_dir / "ground_truth.csv")
    return dataset


def usable_orders(dataset: Dataset):
    return tuple(o for o in dataset.orders if o.availability_date is not None)


def stage_encode(
    config: RunConfig, dataset: Dataset, write: bool = True
) -> tuple[EncodedDataset, SplitPlan, FeatureSchema]:
    """Split first, learn the schema on training orders only, encode all."""
    orders = usable_orders(dataset)
    if not orders:
        raise DataError("no orders with a known availability date")
    plan = split(len(orders), config.ratio, config.folds, config.seed)
    train_orders = [orders[i] for i in plan.train_indices]
    schema = learn_schema(train_orders)
    encoded = one_hot_encode(orders, schema)
    if write:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(schema.to_json_dict(), config.out_dir / "schema.json")
        _write_json(plan.to_json_dict(), config.out_dir / "split.json")
        encoded_to_csv(encoded.take(plan.train_indices), config.out_dir / "encoded_train.csv")
        encoded_to_csv(encoded.take(plan.test_indices), config.out_dir / "encoded_test.csv")
    return encoded, plan, schema


def stage_tune(
    config: RunConfig, encoded: EncodedDataset, plan: SplitPlan
) -> dict[str, TuneResult]:
    grid = config.grid or HyperGrid.default()
    results = {}
    for family in config.families:
        result = random_grid_search(
            encoded,
            plan,
            family,
            grid,
            n_candidates=config.n_candidates,
            seed=derive_seed(config.seed, "tune", family),
            workers=config.workers,
        )
        results[family] = result
        _write_json(
            _finite_json(result.to_json_dict()),
            config.out_dir / f"tune_{family}.json",
        )
    return results


def _finite_json(payload):
    """Replace non-finite floats with None for strict-JSON artifacts."""
    if isinstance(payload, dict):
        return {k: _finite_json(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_finite_json(v) for v in payload]
    if isinstance(payload, float) and not math.isfinite(payload):
        return None
    return payload


def tuned_params(config: RunConfig, family: str) -> dict:
    """Winner params from tune_<family>.json when present, else defaults."""
    path = config.out_dir / f"tune_{family}.json"
    if path.exists():
        with open(path) as fh:
            payload = json.load(fh)
        return dict(payload["candidates"][payload["winner"]])
    return dict(DEFAULT_PARAMS[family])


def stage_train(
    config: RunConfig, encoded: EncodedDataset, plan: SplitPlan
) -> tuple[dict[str, TrainedModel], EvaluationReport]:
    models = {}
    for family in config.families:
        params = tuned_params(config, family)
        try:
            model = fit_model(
                encoded,
                plan.train_indices,
                family,
                params,
                derive_seed(config.seed, "final", family),
            )
        except Exception as exc:
            raise TrainingError(f"final {family} fit failed: {exc}") from exc
        models[family] = model
        save_model(model, config.out_dir / f"model_{family}.json")
    report = _report(config, models, encoded, plan)
    _write_json(report.to_json_dict(), config.out_dir / "report.json")
    return models, report


def _report(config, models, encoded, plan) -> EvaluationReport:
    return comparison_report(
        list(models.values()),
        encoded.matrix[plan.train_indices],
        encoded.targets[plan.train_indices],
        encoded.matrix[plan.test_indices],
        encoded.targets[plan.test_indices],
        fingerprint=encoded.fingerprint,
        unseen_categories=encoded.unseen_counts,
    )


def load_models(config: RunConfig) -> dict[str, TrainedModel]:
    models = {}
    for family in config.families:
        path = config.out_dir / f"model_{family}.json"
        if path.exists():
            models[family] = load_model(path)
    if not models:
        raise DataError(f"no model artifacts under {config.out_dir}")
    return models


def stage_evaluate(
    config: RunConfig,
    models: dict[str, TrainedModel],
    encoded: EncodedDataset,
    plan: SplitPlan,
) -> EvaluationReport:
    """Plot payload CSVs (and optional SVGs) plus tree importances."""
    report = _report(config, models, encoded, plan)
    _write_json(report.to_json_dict(), config.out_dir / "report.json")
    for entry in report.entries:
        for split_name, data in (
            ("train", entry.fortyfive_train),
            ("test", entry.fortyfive_test),
        ):
            stem = f"45deg_{entry.family}_{split_name}"
            write_forty_five_csv(data, config.out_dir / f"{stem}.csv")
            if config.svg:
                write_forty_five_svg(
                    data,
                    config.out_dir / f"{stem}.svg",
                    f"{entry.family} ({split_name})",
                )
        write_histogram_csv(
            entry.diff_histogram, config.out_dir / f"hist_{entry.family}.csv"
        )
        if config.svg:
            write_histogram_svg(
                entry.diff_histogram,
                config.out_dir / f"hist_{entry.family}.svg",
                f"{entry.family}: actual - predicted (test)",
            )
    for family, model in models.items():
        if family in TREE_FAMILIES:
            importance = feature_importance(model.inner, encoded.column_meta)
            importance.to_csv(config.out_dir / f"importance_{family}.csv")
    return report


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def stage_predict(
    config: RunConfig,
    dataset: Dataset,
    encoded_all: EncodedDataset,
    model: TrainedModel,
) -> dict[str, date]:
    """predictions.csv: order_id, predicted_days, forecast_date."""
    preds = model.predict(encoded_all.matrix)
    forecast: dict[str, date] = {}
    orders = {o.order_id: o for o in dataset.orders}
    with open(config.out_dir / "predictions.csv", "w", newline="") as fh:
        fh.write("order_id,predicted_days,forecast_date\n")
        for row_id, value in zip(encoded_all.row_ids, preds):
            pocd = orders[row_id].order_creation_date
            days = round_half_away(float(value))
            fdate = pocd + timedelta(days=max(days, 0))
            forecast[row_id] = fdate
            fh.write(f"{row_id},{float(value)!r},{fdate.isoformat()}\n")
    return forecast


def stage_plan(
    config: RunConfig,
    dataset: Dataset,
    forecasts: dict[str, date],
    pickups: dict[str, date] | None = None,
    horizon_start: date | None = None,
) -> None:
    """Decisions CSV plus per-lane monthly load profiles over the horizon."""
    pickups = pickups or {}
    entries = []
    for order in dataset.orders:
        if order.order_id not in forecasts and order.order_id not in pickups:
            continue
        inputs = DateInputs(
            pickup_date=pickups.get(order.order_id),
            promised_date=order.latest_promised_date,
            forecast_date=forecasts.get(order.order_id),
        )
        entries.append((order, select_planning_date(inputs)))
    if not entries:
        raise DataError("no orders with any planning date")
    write_decisions_csv(entries, config.out_dir / "decisions.csv")

    earliest = horizon_start or min(decision.chosen_date for _, decision in entries)
    lanes = sorted({lane_of(order, config.destination) for order, _ in entries})
    profiles = [
        build_load_profile(
            entries,
            lane,
            horizon_start=earliest,
            n_periods=config.horizon_periods,
            granularity=config.granularity,
            destination_of=config.destination,
        )
        for lane in lanes
    ]
    write_load_profiles_csv(profiles, config.out_dir / "load_profile.csv")
    write_overflow_csv(profiles, config.out_dir / "load_profile_overflow.csv")


def run_pipeline(config: RunConfig) -> int:
    """generate/ingest -> encode -> tune -> train -> evaluate -> predict ->
    plan -> manifest.  Returns a process exit code."""
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        dataset = stage_synth(config) if config.synth is not None else load_input(config)
        encoded, plan, _ = stage_encode(config, dataset)
        stage_tune(config, encoded, plan)
        models, report = stage_train(config, encoded, plan)
        stage_evaluate(config, models, encoded, plan)
        best = models[report.ranking[0]]
        forecasts = stage_predict(config, dataset, encoded, best)
        stage_plan(config, dataset, forecasts)
        write_manifest(config.out_dir)
    except DataError as exc:
        log.error("data error: %s", exc)
        return 2
    except TrainingError as exc:
        log.error("training error: %s", exc)
        return 3
    return 0
