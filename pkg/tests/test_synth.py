from datetime import date

import numpy as np
import pytest

from leadtime.records import derive_target, validate_order, write_csv
from leadtime.synth import (
    ConfigError,
    GeneratorConfig,
    generate,
    read_ground_truth,
    write_ground_truth,
)


def test_same_seed_same_dataset(tmp_path):
    config = GeneratorConfig(n_orders=300, seed=99)
    first, truth_a = generate(config)
    second, truth_b = generate(config)
    assert first.orders == second.orders
    assert truth_a.true_days == truth_b.true_days
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(first, p1)
    write_csv(second, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_different_seeds_differ():
    a, _ = generate(GeneratorConfig(n_orders=100, seed=1))
    b, _ = generate(GeneratorConfig(n_orders=100, seed=2))
    assert a.orders != b.orders


def test_missing_contract_rate_near_half():
    # binomial oracle: n=10000, p=0.5 has std 0.005, so [0.47, 0.53] is 6 sigma
    dataset, _ = generate(
        GeneratorConfig(n_orders=10_000, seed=5, missing_contract_rate=0.5)
    )
    missing = sum(1 for o in dataset.orders if o.contract_delivery_time is None)
    assert 0.47 <= missing / len(dataset) <= 0.53


@pytest.mark.parametrize("rate", [0.0, 0.3, 1.0])
def test_missing_rate_within_three_sigma(rate):
    n = 4000
    dataset, _ = generate(
        GeneratorConfig(n_orders=n, seed=7, missing_contract_rate=rate)
    )
    missing = sum(1 for o in dataset.orders if o.contract_delivery_time is None)
    sigma = np.sqrt(rate * (1 - rate) / n)
    assert abs(missing / n - rate) <= 3 * sigma + 1e-12


def test_forced_batching_single_supplier_week():
    dataset, _ = generate(
        GeneratorConfig(
            n_orders=40,
            seed=3,
            n_suppliers=1,
            batching_rate=1.0,
            date_start=date(2021, 3, 1),
            date_end=date(2021, 3, 5),  # one ISO week
        )
    )
    dates = {o.availability_date for o in dataset.orders}
    assert len(dates) == 1


def test_noiseless_unbatched_targets_equal_ground_truth():
    dataset, truth = generate(
        GeneratorConfig(n_orders=500, seed=21, noise_std_days=0.0, batching_rate=0.0)
    )
    for order in dataset.orders:
        assert derive_target(order) == truth.true_days[order.order_id]


def test_every_order_valid_and_nonnegative():
    dataset, truth = generate(GeneratorConfig(n_orders=2000, seed=13))
    for order in dataset.orders:
        assert validate_order(order) == []
        assert derive_target(order) >= 0
    assert all(v >= 0 for v in truth.true_days.values())


def test_degenerate_date_range_rejected():
    with pytest.raises(ConfigError):
        generate(
            GeneratorConfig(
                n_orders=10,
                seed=1,
                date_start=date(2021, 1, 1),
                date_end=date(2021, 1, 1),
            )
        )


@pytest.mark.parametrize(
    "field,value",
    [
        ("missing_contract_rate", 1.5),
        ("batching_rate", -0.1),
        ("noise_std_days", -1.0),
        ("n_orders", 0),
    ],
)
def test_bad_config_rejected(field, value):
    with pytest.raises(ConfigError):
        generate(GeneratorConfig(**{"n_orders": 10, "seed": 1, field: value}))


def test_ground_truth_csv_round_trip(tmp_path):
    _, truth = generate(GeneratorConfig(n_orders=50, seed=8))
    path = tmp_path / "truth.csv"
    write_ground_truth(truth, path)
    assert read_ground_truth(path).true_days == truth.true_days
