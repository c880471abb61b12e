import numpy as np
import pytest

from leadtime.encoding import learn_schema, one_hot_encode
from leadtime.linear import fit_ols, predict as linear_predict
from leadtime.synth import GeneratorConfig, generate
from leadtime.trees import (
    GbmModel,
    feature_importance,
    fit_gbm,
    fit_random_forest,
    fit_tree,
)


from oracles import brute_force_root_split


def _leaf_rows(tree, X):
    """Independent row-routing oracle: rows reaching each leaf."""
    reached = {}
    for i in range(X.shape[0]):
        node = 0
        while tree.feature[node] >= 0:
            if X[i, tree.feature[node]] <= tree.threshold[node]:
                node = int(tree.left[node])
            else:
                node = int(tree.right[node])
        reached.setdefault(node, []).append(i)
    return reached


def test_pure_binary_split():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([1.0, 1.0, 3.0, 3.0])
    tree = fit_tree(X, y)
    assert tree.n_nodes == 3
    assert tree.feature[0] == 0 and tree.threshold[0] == 0.5
    np.testing.assert_array_equal(tree.predict(X), y)


def test_constant_target_single_leaf():
    X = np.arange(10.0).reshape(-1, 1)
    tree = fit_tree(X, np.full(10, 4.25))
    assert tree.n_nodes == 1
    assert tree.value[0] == 4.25


def test_root_split_matches_brute_force(rng):
    for _ in range(8):
        n = int(rng.integers(6, 13))
        d = int(rng.integers(1, 5))
        X = rng.normal(size=(n, d)).round(3)
        y = rng.normal(size=n)
        tree = fit_tree(X, y, max_depth=1)
        gain, maximizers = brute_force_root_split(X, y)
        chosen = (int(tree.feature[0]), float(tree.threshold[0]))
        assert any(
            chosen[0] == col and abs(chosen[1] - thr) < 1e-12
            for col, thr in maximizers
        ), f"{chosen} not among exhaustive-search winners {maximizers}"
        assert abs(tree.gain[0] - gain) < 1e-8 * max(1.0, abs(gain))


def test_tie_breaking_prefers_lowest_column():
    base = np.array([0.0, 0.0, 1.0, 1.0])
    X = np.column_stack([base, base])  # identical columns: an exact tie
    y = np.array([1.0, 2.0, 5.0, 6.0])
    tree = fit_tree(X, y, max_depth=1)
    assert tree.feature[0] == 0


def test_max_depth_limits_splits():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(64, 3))
    y = rng.normal(size=64)
    tree = fit_tree(X, y, max_depth=1)
    assert tree.n_splits == 1


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 2))
    y = rng.normal(size=30)
    tree = fit_tree(X, y, min_samples_leaf=5)
    leaves = tree.feature < 0
    assert np.all(tree.n_samples[leaves] >= 5)


def test_leaf_predictions_are_sample_means(rng):
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    tree = fit_tree(X, y, max_depth=3)
    for leaf, rows in _leaf_rows(tree, X).items():
        assert abs(tree.value[leaf] - y[rows].mean()) < 1e-12
        assert tree.n_samples[leaf] == len(rows)


def test_gains_nonnegative(rng):
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    tree = fit_tree(X, y)
    assert np.all(tree.gain >= 0.0)


def test_structure_equivariant_under_affine_rescaling():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(25, 2))
    y = rng.normal(size=25)
    mu, sigma = 3.0, 2.5
    X_scaled = X.copy()
    X_scaled[:, 0] = (X[:, 0] - mu) / sigma
    raw = fit_tree(X, y, max_depth=3)
    scaled = fit_tree(X_scaled, y, max_depth=3)
    np.testing.assert_array_equal(raw.feature, scaled.feature)
    for node in range(raw.n_nodes):
        if raw.feature[node] == 0:
            mapped = (raw.threshold[node] - mu) / sigma
            assert abs(scaled.threshold[node] - mapped) < 1e-9
        elif raw.feature[node] == 1:
            assert abs(scaled.threshold[node] - raw.threshold[node]) < 1e-12


def test_forest_degenerates_to_single_tree(rng):
    X = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    forest = fit_random_forest(
        X, y, n_trees=1, max_depth=4, m=4, seed=3, bootstrap=False
    )
    single = fit_tree(X, y, max_depth=4)
    np.testing.assert_array_equal(forest.predict(X), single.predict(X))


def test_forest_prediction_is_mean_of_trees(rng):
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    forest = fit_random_forest(X, y, n_trees=3, max_depth=4, seed=1)
    member = np.stack([t.predict(X) for t in forest.trees])
    np.testing.assert_array_equal(forest.predict(X), member.mean(axis=0))


def test_forest_prediction_permutation_invariant(rng):
    import dataclasses

    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    forest = fit_random_forest(X, y, n_trees=5, max_depth=3, seed=2)
    reversed_forest = dataclasses.replace(forest, trees=forest.trees[::-1])
    np.testing.assert_allclose(
        forest.predict(X), reversed_forest.predict(X), atol=1e-12
    )


def test_forest_deterministic_per_seed(rng):
    X = rng.normal(size=(50, 4))
    y = rng.normal(size=50)
    a = fit_random_forest(X, y, n_trees=4, max_depth=5, seed=9)
    b = fit_random_forest(X, y, n_trees=4, max_depth=5, seed=9)
    np.testing.assert_array_equal(a.predict(X), b.predict(X))


def test_forest_rejects_oversized_subset(rng):
    with pytest.raises(ValueError):
        fit_random_forest(rng.normal(size=(10, 3)), np.ones(10), n_trees=2, m=4)


def test_forest_beats_ols_on_nonlinear_training_data():
    # the generator's ground truth has interactions a first-order model
    # cannot represent, so deep trees fit the 30 training rows tighter
    dataset, _ = generate(
        GeneratorConfig(
            n_orders=30, seed=17, n_suppliers=2, n_parts=4, n_locations=1,
            noise_std_days=2.0,
        )
    )
    encoded = one_hot_encode(dataset.orders, learn_schema(dataset.orders))
    X, y = encoded.matrix, encoded.targets
    assert X.shape[1] < 20  # OLS cannot quasi-interpolate 30 rows here
    forest = fit_random_forest(
        X, y, n_trees=20, max_depth=None, seed=5, bootstrap=False
    )
    forest_rmse = float(np.sqrt(np.mean((forest.predict(X) - y) ** 2)))
    ols, _ = fit_ols(X, y)
    ols_rmse = float(np.sqrt(np.mean((linear_predict(ols, X) - y) ** 2)))
    assert forest_rmse < ols_rmse


def test_gbm_constant_target():
    X = np.arange(12.0).reshape(-1, 1)
    y = np.full(12, 9.0)
    model = fit_gbm(X, y, n_stages=5, learning_rate=0.5)
    assert model.initial == 9.0
    for stage in model.stages:
        assert stage.n_nodes == 1 and stage.value[0] == 0.0
    np.testing.assert_array_equal(model.predict(X), y)


def test_gbm_single_full_stage_equals_deep_tree(rng):
    X = rng.normal(size=(30, 3))
    y = rng.normal(size=30)
    gbm = fit_gbm(X, y, n_stages=1, learning_rate=1.0, max_depth=None)
    tree = fit_tree(X, y)
    np.testing.assert_allclose(gbm.predict(X), tree.predict(X), atol=1e-9)


def test_gbm_training_mse_nonincreasing_with_residual_oracle(rng):
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20) * 4.0
    model = fit_gbm(X, y, n_stages=50, learning_rate=0.1, max_depth=2, seed=3)
    history = np.array(model.mse_history)
    assert len(history) == 51
    assert np.all(history[1:] <= history[:-1] + 1e-12)
    # independent oracle: re-accumulate the staged predictions
    resid = y - model.initial
    for stage_index, stage in enumerate(model.stages, start=1):
        resid = resid - model.learning_rate * stage.predict(X)
        assert abs(float(np.mean(resid**2)) - history[stage_index]) < 1e-12
    np.testing.assert_allclose(y - resid, model.predict(X), atol=1e-12)


def test_gbm_zero_learning_rate_predicts_mean(rng):
    X = rng.normal(size=(25, 2))
    y = rng.normal(size=25) + 3.0
    model = fit_gbm(X, y, n_stages=10, learning_rate=0.0)
    np.testing.assert_allclose(model.predict(X), np.full(25, y.mean()), atol=1e-12)


def test_gbm_rejects_bad_arguments(rng):
    X, y = rng.normal(size=(10, 2)), rng.normal(size=10)
    with pytest.raises(ValueError):
        fit_gbm(X, y, n_stages=0)
    with pytest.raises(ValueError):
        fit_gbm(X, y, n_stages=1, learning_rate=1.5)


def test_importance_single_split_gets_everything():
    X = np.array([[0.0, 5.0], [0.0, 5.0], [1.0, 5.0], [1.0, 5.0]])
    y = np.array([1.0, 1.0, 3.0, 3.0])
    forest = fit_random_forest(X, y, n_trees=1, m=2, bootstrap=False, seed=0)

    class Meta:
        def __init__(self, source):
            self.source = source

    meta = (Meta("informative"), Meta("constant"))
    report = feature_importance(forest, meta)
    assert not report.degenerate
    assert report.percentages["informative"] == pytest.approx(100.0, abs=1e-9)
    assert report.percentages["constant"] == 0.0


def test_importance_sums_to_hundred(rng):
    X = rng.normal(size=(60, 5))
    y = X[:, 0] * 3 + (X[:, 2] > 0) * 2 + rng.normal(size=60)
    forest = fit_random_forest(X, y, n_trees=7, max_depth=4, seed=11)

    class Meta:
        def __init__(self, source):
            self.source = source

    meta = tuple(Meta(f"f{j}") for j in range(5))
    report = feature_importance(forest, meta)
    assert abs(sum(report.percentages.values()) - 100.0) < 1e-9
    gbm = fit_gbm(X, y, n_stages=20, learning_rate=0.2, max_depth=2)
    report = feature_importance(gbm, meta)
    assert abs(sum(report.percentages.values()) - 100.0) < 1e-9


def test_importance_degenerate_zero_splits():
    X = np.ones((8, 2))
    y = np.full(8, 3.0)
    forest = fit_random_forest(X, y, n_trees=2, m=2, seed=0)

    class Meta:
        def __init__(self, source):
            self.source = source

    report = feature_importance(forest, (Meta("a"), Meta("b")))
    assert report.degenerate
    assert all(v == 0.0 for v in report.percentages.values())


def test_model_json_round_trip(rng):
    X = rng.normal(size=(30, 3))
    y = rng.normal(size=30)
    forest = fit_random_forest(X, y, n_trees=3, max_depth=3, seed=4)
    from leadtime.trees import ForestModel

    clone = ForestModel.from_json_dict(forest.to_json_dict())
    np.testing.assert_array_equal(forest.predict(X), clone.predict(X))
    gbm = fit_gbm(X, y, n_stages=5, learning_rate=0.3)
    clone = GbmModel.from_json_dict(gbm.to_json_dict())
    np.testing.assert_array_equal(gbm.predict(X), clone.predict(X))
