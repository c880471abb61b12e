"""Synthetic product-order generator with a known ground-truth lead time.

The generator reproduces the pathologies a real order history exhibits
(roughly half the contract delivery times missing, and suppliers batching
several orders into one pick-up date) while embedding a ground truth that a
first-order linear model cannot represent:

    core      = base(supplier) * factor(part family)
                + overload(supplier) * [amount > capacity(supplier)]
                + 0.2 * approval_days
    promised  = round(base(supplier) + bias(supplier) + jitter)   (>= 1)
    slip      = rate(supplier) * max(0, promised - round(base + bias))
    truth     = (1 - PULL) * core + PULL * promised + slip        (rounded, >= 0)
    target    = truth + truncated Gaussian noise                  (>= 0)

Suppliers quote their standard lead time plus a per-supplier bias and
per-order estimation jitter, blind to the workload terms, so the
supplier-by-family factor and the capacity threshold are interactions only
trees or a network can embed.  The promised date stays the single strongest
predictor: it is pulled into the truth directly, and orders quoted beyond
the supplier's standard window slip at a supplier-specific rate, a kinked
promised-by-supplier effect no first-order model can represent.  Cost is
log-normal and amount geometric; both are unvalidated defaults chosen for
plausibility, not fitted to any real distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .records import Dataset, LOCATION_SEP, ProductOrder

# Ground-truth constants (see module docstring).
PULL = 0.3
APPROVAL_COEF = 0.2
JITTER_STD = 9.0
SLIP_RATE_LO = 0.5
SLIP_RATE_HI = 1.2

_N_FAMILIES = 8
_FAMILY_PATHS = (
    "turbine-systems/rotors",
    "turbine-systems/blades",
    "electronic-systems/controls",
    "electronic-systems/sensors",
    "structural/castings",
    "structural/fasteners",
    "auxiliary/pumps",
    "auxiliary/valves",
)

_LOCATION_POOL = (
    ("CN", "Shanghai"),
    ("CN", "Shenzhen"),
    ("SG", "Singapore"),
    ("KR", "Busan"),
    ("KR", "Seoul"),
    ("JP", "Osaka"),
    ("DE", "Hamburg"),
    ("IT", "Genoa"),
    ("US", "Houston"),
    ("US", "Savannah"),
    ("MX", "Monterrey"),
    ("IN", "Chennai"),
    ("VN", "Haiphong"),
    ("TH", "Bangkok"),
    ("TR", "Izmir"),
    ("PL", "Gdansk"),
)


class ConfigError(ValueError):
    """Invalid generator configuration."""


@dataclass(frozen=True)
class GeneratorConfig:
    n_orders: int
    seed: int
    n_suppliers: int = 25
    n_parts: int = 60
    n_locations: int = 12
    missing_contract_rate: float = 0.5
    batching_rate: float = 0.1
    noise_std_days: float = 2.0
    date_start: date = date(2019, 7, 1)
    date_end: date = date(2022, 12, 31)

    def validate(self) -> None:
        if self.n_orders < 1:
            raise ConfigError("n_orders must be positive")
        for name in ("n_suppliers", "n_parts", "n_locations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("missing_contract_rate", "batching_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.noise_std_days < 0:
            raise ConfigError("noise_std_days must be nonnegative")
        if self.date_start >= self.date_end:
            raise ConfigError("date_range is degenerate (start must precede end)")


@dataclass(frozen=True)
class GroundTruth:
    """Noiseless availability days per order, for oracle tests."""

    true_days: dict[str, int]


def _locations(n: int) -> list[str]:
    labels = [c + LOCATION_SEP + city for c, city in _LOCATION_POOL]
    for i in range(len(labels), n):
        labels.append(f"XX{LOCATION_SEP}City{i:02d}")
    return labels[:n]


def generate(config: GeneratorConfig) -> tuple[Dataset, GroundTruth]:
    """Generate a dataset plus its ground truth, deterministically per seed."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_orders

    # Supplier profiles.
    base = rng.uniform(8.0, 42.0, config.n_suppliers)
    capacity = rng.integers(30, 120, config.n_suppliers)
    bias = rng.uniform(-12.0, -3.0, config.n_suppliers)
    overload = rng.uniform(12.0, 28.0, config.n_suppliers)
    slip_rate = rng.uniform(SLIP_RATE_LO, SLIP_RATE_HI, config.n_suppliers)
    supplier_loc = rng.integers(0, config.n_locations, config.n_suppliers)
    locations = _locations(config.n_locations)

    # Part families drive a multiplicative factor on the supplier base.
    family_factor = rng.uniform(0.6, 1.8, _N_FAMILIES)
    part_family = np.arange(config.n_parts) % _N_FAMILIES

    # Per-order draws, in one fixed order so the stream is reproducible.
    sup = rng.integers(0, config.n_suppliers, n)
    part = rng.integers(0, config.n_parts, n)
    amount = np.minimum(rng.geometric(1.0 / 45.0, n), 500)
    cost = np.round(rng.lognormal(8.0, 1.2, n), 2)
    approval_off = rng.integers(0, 15, n)
    span = (config.date_end - config.date_start).days
    pocd_off = rng.integers(0, span + 1, n)
    jitter = rng.normal(0.0, JITTER_STD, n)
    need_by_slack = rng.integers(3, 29, n)
    contract_scale = rng.uniform(0.8, 1.2, n)
    contract_missing = rng.random(n) < config.missing_contract_rate
    noise = rng.normal(0.0, config.noise_std_days, n) if config.noise_std_days > 0 else np.zeros(n)

    fam = part_family[part]
    core = (
        base[sup] * family_factor[fam]
        + overload[sup] * (amount > capacity[sup])
        + APPROVAL_COEF * approval_off
    )
    promised_days = np.maximum(
        1, np.rint(base[sup] + bias[sup] + jitter).astype(np.int64)
    )
    quote_window = np.rint(base[sup] + bias[sup])
    slip = slip_rate[sup] * np.maximum(0.0, promised_days - quote_window)
    truth_real = (1.0 - PULL) * core + PULL * promised_days + slip
    truth_days = np.maximum(0, np.rint(truth_real).astype(np.int64))
    avail_days = np.maximum(0, np.rint(truth_real + noise).astype(np.int64))
    # Contracts quote the supplier's standard lead time, not the realized
    # workload: unreliable by construction, like the real feature.
    contract_days = np.rint(base[sup] * contract_scale).astype(np.int64)

    # Supplier batching: with probability batching_rate, every order a
    # supplier created in the same ISO week is picked up on the batch's
    # latest availability date.
    pocd = [config.date_start + timedelta(days=int(d)) for d in pocd_off]
    groups: dict[tuple[int, int, int], list[int]] = {}
    for i in range(n):
        iso = pocd[i].isocalendar()
        groups.setdefault((int(sup[i]), iso[0], iso[1]), []).append(i)
    avail_dates = [pocd[i] + timedelta(days=int(avail_days[i])) for i in range(n)]
    for key in sorted(groups):
        members = groups[key]
        if len(members) > 1 and rng.random() < config.batching_rate:
            snap = max(avail_dates[i] for i in members)
            for i in members:
                avail_dates[i] = snap

    orders = []
    truth: dict[str, int] = {}
    for i in range(n):
        order_id = f"SO-{i:06d}"
        orders.append(
            ProductOrder(
                order_id=order_id,
                part_number=f"P-{1000 + int(part[i])}",
                supplier_code=f"SUP-{100 + int(sup[i])}",
                supplier_location=locations[int(supplier_loc[sup[i]])],
                product_cost=float(cost[i]),
                product_amount=int(amount[i]),
                product_details=_FAMILY_PATHS[int(fam[i])],
                contract_delivery_time=(
                    None if contract_missing[i] else int(contract_days[i])
                ),
                order_creation_date=pocd[i],
                latest_need_by_date=pocd[i]
                + timedelta(days=int(promised_days[i] + need_by_slack[i])),
                latest_promised_date=pocd[i] + timedelta(days=int(promised_days[i])),
                approval_date=pocd[i] + timedelta(days=int(approval_off[i])),
                availability_date=avail_dates[i],
            )
        )
        truth[order_id] = int(truth_days[i])

    return Dataset(orders=tuple(orders), provenance="synthetic"), GroundTruth(truth)


def write_ground_truth(truth: GroundTruth, path) -> None:
    """Sibling CSV: order_id, true_days."""
    with open(path, "w", newline="") as fh:
        fh.write("order_id,true_days\n")
        for order_id in truth.true_days:
            fh.write(f"{order_id},{truth.true_days[order_id]}\n")


def read_ground_truth(path) -> GroundTruth:
    truth: dict[str, int] = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            order_id, days = line.rstrip("\n").split(",")
            truth[order_id] = int(days)
    return GroundTruth(truth)
