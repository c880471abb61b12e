"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints one PASS/FAIL line via the conftest terminal summary.  The
heavyweight fixtures (10k-row datasets with tuned models, the end-to-end
pipeline runs) are shared across criteria.
"""

import json
import subprocess
import sys
import time
from datetime import date

import numpy as np
import pytest

from leadtime.encoding import learn_schema, one_hot_encode, split
from leadtime.linear import (
    fit_elastic_net,
    fit_lasso,
    fit_ols,
    fit_ridge,
)
from leadtime.metrics import (
    forty_five_degree_data,
    metrics,
    prediction_difference_histogram,
)
from leadtime.models import fit_model
from leadtime.nnet import MlpModel, TrainConfig, loss_and_grads, mse_loss
from leadtime.planning import (
    LONG_RANGE,
    MEDIUM_RANGE,
    SHORT_RANGE,
    DateInputs,
    PlanningDecision,
    build_load_profile,
    select_planning_date,
)
from leadtime.rng import derive_seed
from leadtime.search import HyperGrid, random_grid_search
from leadtime.synth import GeneratorConfig, generate
from leadtime.trees import feature_importance, fit_gbm, fit_random_forest, fit_tree
from oracles import brute_force_root_split


def _standardized(rng, n, d, noise=0.5):
    X = rng.normal(size=(n, d))
    X = (X - X.mean(0)) / np.where(X.std(0) == 0, 1, X.std(0))
    w = rng.normal(size=d)
    y = X @ w + rng.normal(0, noise, size=n) + float(rng.normal())
    return X, y


# --------------------------------------------------------------------------
# criterion 1: linear oracles


def test_criterion_01_linear_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(20):
        n = int(rng.integers(10, 51))
        d = int(rng.integers(1, 9))
        X, y = _standardized(rng, n, d)

        ols, _ = fit_ols(X, y)
        Z = np.column_stack([np.ones(n), X])
        theta = np.linalg.solve(Z.T @ Z, Z.T @ y)
        assert np.max(np.abs(np.r_[ols.bias, ols.weights] - theta)) < 1e-8

        lam = float(rng.uniform(0.1, 5.0))
        ridge = fit_ridge(X, y, lam=lam, penalize_bias=True)
        theta = np.linalg.solve(Z.T @ Z + lam * np.eye(d + 1), Z.T @ y)
        assert np.max(np.abs(np.r_[ridge.bias, ridge.weights] - theta)) < 1e-8

        lam = float(rng.uniform(0.5, 10.0))
        lasso, _ = fit_lasso(X, y, lam=lam, tol=1e-9)
        assert _subgradient_gap(lasso, X, y, lam, 1.0) < 1e-4

        alpha = float(rng.uniform(0.1, 0.9))
        enet, _ = fit_elastic_net(X, y, lam=lam, alpha=alpha, tol=1e-9)
        assert _subgradient_gap(enet, X, y, lam, alpha) < 1e-4
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"criterion 1 took {elapsed:.1f}s"
    print(f"criterion 1 PASS: linear oracle equivalence in {elapsed:.2f}s")


def _subgradient_gap(model, X, y, lam, alpha):
    r = y - X @ model.weights - model.bias
    worst = 0.0
    for j in range(X.shape[1]):
        g = -2.0 * float(X[:, j] @ r) + 2.0 * lam * (1.0 - alpha) * model.weights[j]
        if model.weights[j] == 0.0:
            worst = max(worst, abs(g) - lam * alpha)
        else:
            worst = max(worst, abs(g + lam * alpha * np.sign(model.weights[j])))
    return worst


# --------------------------------------------------------------------------
# criterion 2: elastic-net degeneracy chain


def test_criterion_02_degeneracy_chain():
    rng = np.random.default_rng(202)
    for _ in range(10):
        n = int(rng.integers(15, 45))
        d = int(rng.integers(2, 7))
        X, y = _standardized(rng, n, d)
        lam = float(rng.uniform(0.5, 8.0))

        lasso, _ = fit_lasso(X, y, lam=lam, tol=1e-10)
        as_lasso, _ = fit_elastic_net(X, y, lam=lam, alpha=1.0, tol=1e-10)
        assert np.max(np.abs(as_lasso.weights - lasso.weights)) < 1e-6
        assert abs(as_lasso.bias - lasso.bias) < 1e-6

        ridge = fit_ridge(X, y, lam=lam)
        as_ridge, _ = fit_elastic_net(X, y, lam=lam, alpha=0.0, tol=1e-10)
        assert np.max(np.abs(as_ridge.weights - ridge.weights)) < 1e-6
        assert abs(as_ridge.bias - ridge.bias) < 1e-6

        ols, _ = fit_ols(X, y)
        unpenalized, _ = fit_elastic_net(X, y, lam=0.0, alpha=0.5, tol=1e-10)
        assert np.max(np.abs(unpenalized.weights - ols.weights)) < 1e-6
        assert abs(unpenalized.bias - ols.bias) < 1e-6
    print("criterion 2 PASS: elastic net degenerates to lasso/ridge/OLS")


# --------------------------------------------------------------------------
# criterion 3: tree split oracle + forest averaging


def test_criterion_03_tree_oracle():
    rng = np.random.default_rng(303)
    for _ in range(20):
        n = int(rng.integers(4, 13))
        d = int(rng.integers(1, 5))
        X = rng.normal(size=(n, d)).round(2)
        y = rng.normal(size=n)
        tree = fit_tree(X, y, max_depth=1)
        oracle = brute_force_root_split(X, y)
        if oracle is None:
            assert tree.n_splits == 0
            continue
        gain, maximizers = oracle
        chosen = (int(tree.feature[0]), float(tree.threshold[0]))
        assert any(
            chosen[0] == col and abs(chosen[1] - thr) < 1e-12
            for col, thr in maximizers
        ), f"{chosen} not among exhaustive-search winners {maximizers}"
        assert abs(tree.gain[0] - gain) < 1e-8 * max(1.0, abs(gain))

    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    forest = fit_random_forest(X, y, n_trees=5, max_depth=4, seed=1)
    member = np.stack([t.predict(X) for t in forest.trees])
    assert np.array_equal(forest.predict(X), member.mean(axis=0))
    print("criterion 3 PASS: root splits match exhaustive search; forest averages")


# --------------------------------------------------------------------------
# criterion 4: GBM contract


def test_criterion_04_gbm_contract():
    rng = np.random.default_rng(404)
    for _ in range(10):
        n = int(rng.integers(15, 40))
        X = rng.normal(size=(n, 3))
        y = rng.normal(size=n) * 3.0
        model = fit_gbm(X, y, n_stages=30, learning_rate=0.2, max_depth=2)
        history = np.array(model.mse_history)
        assert np.all(history[1:] <= history[:-1] + 1e-12)
    X = rng.normal(size=(20, 2))
    y = rng.normal(size=20) + 5.0
    frozen = fit_gbm(X, y, n_stages=8, learning_rate=0.0)
    np.testing.assert_allclose(frozen.predict(X), np.full(20, y.mean()), atol=1e-12)
    print("criterion 4 PASS: GBM training MSE nonincreasing; zero rate predicts mean")


# --------------------------------------------------------------------------
# criterion 5: NN gradient check over the architecture grid


def test_criterion_05_nn_gradient_check():
    started = time.perf_counter()
    rng = np.random.default_rng(505)
    architectures = [(16,), (64,), (128,), (16, 16), (64, 64), (128, 128)]
    d, batch = 4, 4
    for hidden in architectures:
        config = TrainConfig(
            hidden=hidden, epochs=0, step_size=1e-2, batch_size=batch, seed=0
        )
        sizes = (d,) + hidden + (1,)
        for _ in range(10):
            weights = [
                rng.normal(0.0, 0.5, size=(a, b))
                for a, b in zip(sizes[:-1], sizes[1:])
            ]
            biases = [rng.normal(0.0, 0.2, size=b) for b in sizes[1:]]
            model = MlpModel(weights=weights, biases=biases, config=config)
            X = rng.normal(size=(batch, d))
            y = rng.normal(size=batch)
            _, grads_w, grads_b = loss_and_grads(model, X, y)
            analytic = np.concatenate(
                [g.ravel() for pair in zip(grads_w, grads_b) for g in pair]
            )
            numeric = _finite_difference_flat(model, X, y, h=1e-5)
            rel = np.linalg.norm(analytic - numeric) / max(
                np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12
            )
            assert rel < 1e-4, f"architecture {hidden}: rel error {rel:.2e}"
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"criterion 5 took {elapsed:.1f}s"
    print(f"criterion 5 PASS: gradient checks across 6 architectures in {elapsed:.1f}s")


def _finite_difference_flat(model, X, y, h):
    out = []
    for w, b in zip(model.weights, model.biases):
        for arr in (w, b):
            flat = arr.ravel()
            g = np.empty(flat.size)
            for k in range(flat.size):
                keep = flat[k]
                flat[k] = keep + h
                up = mse_loss(model, X, y)
                flat[k] = keep - h
                down = mse_loss(model, X, y)
                flat[k] = keep
                g[k] = (up - down) / (2 * h)
            out.append(g)
    return np.concatenate(out)


# --------------------------------------------------------------------------
# criterion 6: pipeline determinism across worker counts


def _run_pipeline_cli(out_dir, data_csv, workers):
    base = [sys.executable, "-m", "leadtime.cli"]
    steps = [
        ["encode", "--input", data_csv, "--out", out_dir, "--seed", "4242"],
        [
            "tune", "--input", data_csv, "--out", out_dir, "--seed", "4242",
            "--candidates", "3", "--workers", str(workers),
        ],
        ["train", "--input", data_csv, "--out", out_dir, "--seed", "4242"],
        ["evaluate", "--input", data_csv, "--out", out_dir, "--seed", "4242"],
        ["predict", "--input", data_csv, "--out", out_dir, "--seed", "4242"],
        ["plan", "--input", data_csv, "--out", out_dir],
        ["report", "--out", out_dir],
    ]
    for step in steps:
        proc = subprocess.run(
            base + step, capture_output=True, text=True, timeout=280
        )
        assert proc.returncode == 0, f"{step[0]} failed: {proc.stderr[-2000:]}"


def test_criterion_06_pipeline_determinism(tmp_path):
    started = time.perf_counter()
    dir_a, dir_b = tmp_path / "serial", tmp_path / "parallel"
    for out in (dir_a, dir_b):
        proc = subprocess.run(
            [
                sys.executable, "-m", "leadtime.cli", "synth",
                "--n", "2000", "--seed", "4242", "--out", str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
    # 7 families x 3 sampled candidates = 21 >= 20 grid candidates
    _run_pipeline_cli(str(dir_a), str(dir_a / "dataset.csv"), workers=1)
    _run_pipeline_cli(str(dir_b), str(dir_b / "dataset.csv"), workers=8)
    manifest_a = (dir_a / "manifest.json").read_bytes()
    manifest_b = (dir_b / "manifest.json").read_bytes()
    assert manifest_a == manifest_b
    files = json.loads(manifest_a)["files"]
    assert len(files) > 30
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0, f"criterion 6 took {elapsed:.0f}s"
    print(
        f"criterion 6 PASS: 1-worker and 8-worker manifests byte-identical "
        f"({len(files)} artifacts, {elapsed:.0f}s)"
    )


# --------------------------------------------------------------------------
# criteria 7 + 8: benchmark ordering and importance ranking on synthetic data


LINEAR_FAMILIES = ("ols", "lasso", "ridge", "elastic_net")


@pytest.fixture(scope="module")
def tuned_models_by_seed():
    """10,000-row datasets for 3 seeds with default-grid-tuned models."""
    grid = HyperGrid.default()
    results = {}
    for seed in (1, 2, 3):
        dataset, _ = generate(GeneratorConfig(n_orders=10_000, seed=seed))
        orders = dataset.orders
        plan = split(len(orders), 0.8, 5, seed=seed)
        schema = learn_schema([orders[i] for i in plan.train_indices])
        encoded = one_hot_encode(orders, schema)
        fitted = {}
        test_rmse = {}
        for family in LINEAR_FAMILIES + ("rf", "gbm"):
            candidates = 2 if family in ("rf", "gbm") else 3
            tune = random_grid_search(
                encoded, plan, family, grid,
                n_candidates=candidates, seed=derive_seed(seed, "tune", family),
            )
            model = fit_model(
                encoded, plan.train_indices, family, tune.best_params,
                derive_seed(seed, "final", family),
            )
            pred = model.predict(encoded.matrix[plan.test_indices])
            fitted[family] = model
            test_rmse[family] = metrics(
                encoded.targets[plan.test_indices], pred
            ).rmse
        results[seed] = (fitted, test_rmse, encoded)
    return results


def test_criterion_07_tree_ensembles_beat_linear_models(tuned_models_by_seed):
    for seed, (_, test_rmse, _) in tuned_models_by_seed.items():
        for ensemble in ("rf", "gbm"):
            for linear_family in LINEAR_FAMILIES:
                assert test_rmse[ensemble] < test_rmse[linear_family], (
                    f"seed {seed}: {ensemble} ({test_rmse[ensemble]:.3f}) not "
                    f"below {linear_family} ({test_rmse[linear_family]:.3f})"
                )
    summary = {
        seed: {k: round(v, 3) for k, v in rmse.items()}
        for seed, (_, rmse, _) in tuned_models_by_seed.items()
    }
    print(f"criterion 7 PASS: RF/GBM under all four linear families: {summary}")


def test_criterion_08_promised_days_ranks_first(tuned_models_by_seed):
    for seed, (fitted, _, encoded) in tuned_models_by_seed.items():
        for family in ("rf", "gbm"):
            report = feature_importance(fitted[family].inner, encoded.column_meta)
            assert abs(sum(report.percentages.values()) - 100.0) < 1e-9
            top = report.ranking()[0]
            assert top[0] == "promised_days", (
                f"seed {seed} {family}: top feature {top}"
            )
    print("criterion 8 PASS: promised_days ranks first in RF and GBM importance")


# --------------------------------------------------------------------------
# criterion 9: split fidelity


def test_criterion_09_split_fidelity():
    plan = split(27_729, 0.8, 5, seed=0)
    assert len(plan.train_indices) == 22_183
    assert len(plan.test_indices) == 5_546
    sizes = np.bincount(plan.fold_of, minlength=5)
    assert sizes.max() - sizes.min() <= 1
    assert sizes.sum() == 22_183
    print("criterion 9 PASS: 27,729 rows split 22,183/5,546 with balanced folds")


# --------------------------------------------------------------------------
# criterion 10: planning protocol


def test_criterion_10_planning_protocol(rng):
    pickup, promised, forecast = (
        date(2021, 5, 2),
        date(2021, 6, 1),
        date(2021, 7, 15),
    )
    expected = {
        (True, False, False): (SHORT_RANGE, pickup, False),
        (True, True, False): (SHORT_RANGE, pickup, False),
        (True, False, True): (SHORT_RANGE, pickup, False),
        (True, True, True): (SHORT_RANGE, pickup, False),
        (False, True, False): (MEDIUM_RANGE, promised, True),
        (False, True, True): (MEDIUM_RANGE, promised, True),
        (False, False, True): (LONG_RANGE, forecast, True),
    }
    for (p, m, f), (source, chosen, mutable) in expected.items():
        decision = select_planning_date(
            DateInputs(
                pickup if p else None,
                promised if m else None,
                forecast if f else None,
            )
        )
        assert (decision.source, decision.chosen_date, decision.subject_to_change) == (
            source, chosen, mutable,
        )

    from conftest import make_order

    entries = []
    for i in range(1000):
        order = make_order(
            order_id=f"SO-{i:04d}",
            supplier_location=("CN|Shanghai", "SG|Singapore", "KR|Busan")[i % 3],
            product_amount=int(rng.integers(1, 60)),
        )
        chosen = date(2021, 1 + int(rng.integers(0, 12)), int(rng.integers(1, 28)))
        entries.append(
            (order, PlanningDecision(chosen, MEDIUM_RANGE, subject_to_change=True))
        )
    lane = ("CN|Shanghai", "US")
    profile = build_load_profile(entries, lane, date(2021, 1, 1), 12)
    expected_counts = [0] * 12
    expected_amounts = [0] * 12
    for order, decision in entries:
        if order.supplier_location != "CN|Shanghai":
            continue
        expected_counts[decision.chosen_date.month - 1] += 1
        expected_amounts[decision.chosen_date.month - 1] += order.product_amount
    assert list(profile.order_counts) == expected_counts
    assert list(profile.total_amounts) == expected_amounts
    print("criterion 10 PASS: precedence truth table and load-profile grouping")


# --------------------------------------------------------------------------
# criterion 11: metric identities


def test_criterion_11_metric_identities(rng):
    for _ in range(25):
        n = int(rng.integers(2, 200))
        y = rng.normal(size=n) * 10
        p = rng.normal(size=n) * 10
        result = metrics(y, p)
        assert result.rmse >= result.mae - 1e-12
        hist = prediction_difference_histogram(y, p, 13)
        assert hist.total == n
        spread = forty_five_degree_data(y, p).spread
        assert abs(spread - result.rmse / np.sqrt(2.0)) < 1e-12
    y = rng.normal(size=50)
    assert metrics(y, y).r2 == 1.0
    assert abs(metrics(y, np.full(50, y.mean())).r2) < 1e-12
    print("criterion 11 PASS: metric identities hold")
