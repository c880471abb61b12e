"""Command-line entry point.

Subcommands: synth, encode, tune, train, evaluate, predict, plan, report.
Chaining them against one output directory reproduces the full pipeline;
every command finishes by rewriting the artifact manifest, so identical
configs and seeds yield byte-identical manifests for any worker count.

Exit codes: 0 success, 1 usage, 2 data error, 3 training failure.
"""

import os

# Pin BLAS threading before numpy loads: keeps results independent of the
# worker count and avoids oversubscription inside the process pool.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import csv
import json
import logging
import sys
from datetime import date
from pathlib import Path

from .models import FAMILIES, TrainingError
from .nnet import TrainingDivergedError
from .pipeline import (
    RunConfig,
    load_input,
    load_models,
    stage_encode,
    stage_evaluate,
    stage_plan,
    stage_predict,
    stage_synth,
    stage_train,
    stage_tune,
    write_manifest,
)
from .records import DataError
from .search import HyperGrid
from .synth import ConfigError, GeneratorConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _add_common(p: _Parser, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="orders CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", required=True, type=int, help="base seed (mandatory)")
    p.add_argument("--ratio", type=float, default=0.8, help="train fraction")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    p.add_argument(
        "--max-bad-rows", type=int, default=0,
        help="tolerated malformed/invalid input rows before aborting",
    )


def _add_model_opts(p: _Parser) -> None:
    p.add_argument(
        "--families",
        default=",".join(FAMILIES),
        help=f"comma-separated subset of {','.join(FAMILIES)}",
    )
    p.add_argument("--grid", default=None, help="JSON/TOML hyperparameter grid")
    p.add_argument("--candidates", type=int, default=3, help="sampled candidates per family")
    p.add_argument("--workers", type=int, default=1, help="parallel workers")


def build_parser() -> _Parser:
    parser = _Parser(prog="leadtime", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--n", required=True, type=int, help="number of orders")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--suppliers", type=int, default=25)
    p.add_argument("--parts", type=int, default=60)
    p.add_argument("--locations", type=int, default=12)
    p.add_argument("--missing-rate", type=float, default=0.5)
    p.add_argument("--batching-rate", type=float, default=0.15)
    p.add_argument("--noise", type=float, default=2.0)
    p.add_argument("--start", default="2019-07-01")
    p.add_argument("--end", default="2022-12-31")

    p = sub.add_parser("encode", help="split, learn schema, one-hot encode")
    _add_common(p)

    p = sub.add_parser("tune", help="random grid search with k-fold CV")
    _add_common(p)
    _add_model_opts(p)

    p = sub.add_parser("train", help="fit final models and write the report")
    _add_common(p)
    _add_model_opts(p)

    p = sub.add_parser("evaluate", help="plot payloads and importances")
    _add_common(p)
    p.add_argument("--families", default=",".join(FAMILIES))
    p.add_argument("--no-svg", action="store_true")

    p = sub.add_parser("predict", help="predicted days + forecast dates")
    _add_common(p)
    p.add_argument("--family", default=None, help="default: best by test RMSE")

    p = sub.add_parser("plan", help="planning decisions and load profiles")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--predictions", default=None, help="predictions.csv path")
    p.add_argument("--pickups", default=None, help="CSV: order_id,pickup_date")
    p.add_argument("--destination", default="US")
    p.add_argument("--granularity", choices=["month", "week"], default="month")
    p.add_argument("--periods", type=int, default=12)
    p.add_argument(
        "--horizon-start", default=None,
        help="first period (ISO date); default: earliest chosen date",
    )

    p = sub.add_parser("report", help="print ranking; rebuild the manifest")
    p.add_argument("--out", required=True)
    return parser


def _config(args, needs_input: bool = True) -> RunConfig:
    return RunConfig(
        out_dir=Path(args.out),
        seed=args.seed,
        input_csv=Path(args.input) if needs_input else None,
        ratio=getattr(args, "ratio", 0.8),
        folds=getattr(args, "folds", 5),
        families=tuple(
            f.strip() for f in getattr(args, "families", ",".join(FAMILIES)).split(",") if f.strip()
        ),
        grid=HyperGrid.from_file(args.grid) if getattr(args, "grid", None) else None,
        n_candidates=getattr(args, "candidates", 3),
        workers=getattr(args, "workers", 1),
        max_bad_rows=getattr(args, "max_bad_rows", 0),
        svg=not getattr(args, "no_svg", False),
    )


def _cmd_synth(args) -> int:
    config = RunConfig(
        out_dir=Path(args.out),
        seed=args.seed,
        synth=GeneratorConfig(
            n_orders=args.n,
            seed=args.seed,
            n_suppliers=args.suppliers,
            n_parts=args.parts,
            n_locations=args.locations,
            missing_contract_rate=args.missing_rate,
            batching_rate=args.batching_rate,
            noise_std_days=args.noise,
            date_start=date.fromisoformat(args.start),
            date_end=date.fromisoformat(args.end),
        ),
    )
    stage_synth(config)
    write_manifest(config.out_dir)
    return 0


def _cmd_encode(args) -> int:
    config = _config(args)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stage_encode(config, load_input(config))
    write_manifest(config.out_dir)
    return 0


def _cmd_tune(args) -> int:
    config = _config(args)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    encoded, plan, _ = stage_encode(config, load_input(config), write=False)
    stage_tune(config, encoded, plan)
    write_manifest(config.out_dir)
    return 0


def _cmd_train(args) -> int:
    config = _config(args)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    encoded, plan, _ = stage_encode(config, load_input(config), write=False)
    stage_train(config, encoded, plan)
    write_manifest(config.out_dir)
    return 0


def _cmd_evaluate(args) -> int:
    config = _config(args)
    encoded, plan, _ = stage_encode(config, load_input(config), write=False)
    models = load_models(config)
    stage_evaluate(config, models, encoded, plan)
    write_manifest(config.out_dir)
    return 0


def _cmd_predict(args) -> int:
    config = _config(args)
    dataset = load_input(config)
    encoded, plan, _ = stage_encode(config, dataset, write=False)
    models = load_models(config)
    if args.family:
        if args.family not in models:
            raise DataError(f"no model artifact for family {args.family!r}")
        model = models[args.family]
    else:
        report_path = config.out_dir / "report.json"
        if report_path.exists():
            ranking = json.loads(report_path.read_text())["ranking"]
            model = models[ranking[0]]
        else:
            model = next(iter(models.values()))
    if model.fingerprint != encoded.fingerprint:
        raise DataError(
            f"model {model.family} fingerprint does not match this input"
        )
    stage_predict(config, dataset, encoded, model)
    write_manifest(config.out_dir)
    return 0


def _read_date_map(path: Path, value_field: str) -> dict[str, date]:
    out: dict[str, date] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["order_id"]] = date.fromisoformat(row[value_field])
    return out


def _cmd_plan(args) -> int:
    config = RunConfig(
        out_dir=Path(args.out),
        seed=0,
        input_csv=Path(args.input),
        destination=args.destination,
        granularity=args.granularity,
        horizon_periods=args.periods,
    )
    dataset = load_input(config)
    predictions_path = (
        Path(args.predictions)
        if args.predictions
        else config.out_dir / "predictions.csv"
    )
    forecasts = (
        _read_date_map(predictions_path, "forecast_date")
        if predictions_path.exists()
        else {}
    )
    pickups = _read_date_map(Path(args.pickups), "pickup_date") if args.pickups else {}
    if not forecasts and not pickups:
        raise DataError("plan needs a predictions CSV and/or a pickups CSV")
    horizon_start = (
        date.fromisoformat(args.horizon_start) if args.horizon_start else None
    )
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stage_plan(config, dataset, forecasts, pickups, horizon_start=horizon_start)
    write_manifest(config.out_dir)
    return 0


def _cmd_report(args) -> int:
    out_dir = Path(args.out)
    report_path = out_dir / "report.json"
    if not report_path.exists():
        raise DataError(f"no report.json under {out_dir}; run train first")
    payload = json.loads(report_path.read_text())
    print(f"{'rank':>4}  {'family':<12} {'test_rmse':>10} {'test_r2':>8} {'test_mae':>9}")
    for rank, family in enumerate(payload["ranking"], start=1):
        row = payload["models"][family]
        r2 = "n/a" if row["test_r2"] is None else f"{row['test_r2']:.4f}"
        print(
            f"{rank:>4}  {family:<12} {row['test_rmse']:>10.4f} {r2:>8} "
            f"{row['test_mae']:>9.4f}"
        )
    unseen = payload.get("unseen_categories", {})
    if any(unseen.values()):
        print(f"unseen test-time categories: {unseen}")
    write_manifest(out_dir)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "encode": _cmd_encode,
    "tune": _cmd_tune,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "plan": _cmd_plan,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, TrainingDivergedError) as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
