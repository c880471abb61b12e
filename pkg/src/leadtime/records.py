"""Product-order records, dataset container, and the shared feature schema.

An order row carries ten predictive features (four categorical, six
numerical once the three date offsets are derived) plus the raw dates.  The
prediction target is the whole-day count from order creation to the
availability date.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from datetime import date, timedelta
log = logging.getLogger(__name__)

LOCATION_SEP = "|"

CSV_COLUMNS = (
    "order_id",
    "part_number",
    "supplier_code",
    "supplier_country",
    "supplier_city",
    "product_cost",
    "product_amount",
    "product_details",
    "contract_delivery_time",
    "order_creation_date",
    "latest_need_by_date",
    "latest_promised_date",
    "approval_date",
    "availability_date",
)

CATEGORICAL_FEATURES = (
    "part_number",
    "supplier_code",
    "supplier_location",
    "product_details",
)

# contract_delivery_time is the only feature that may be missing; the three
# *_days offsets are derived from the raw dates at encoding time.
NUMERICAL_FEATURES = (
    "product_cost",
    "product_amount",
    "contract_delivery_time",
    "need_by_days",
    "promised_days",
    "approval_days",
)

FEATURE_ORDER = (
    "part_number",
    "supplier_code",
    "supplier_location",
    "product_cost",
    "product_amount",
    "product_details",
    "contract_delivery_time",
    "need_by_days",
    "promised_days",
    "approval_days",
)


class DataError(Exception):
    """Malformed or unusable input data."""


class TargetUnavailableError(DataError):
    """The availability date is absent, so no target can be derived."""


class InvalidRecordError(DataError):
    """The record violates an invariant that makes it unusable."""


@dataclass(frozen=True)
class ProductOrder:
    """One purchase-order line.

    ``supplier_location`` is the concatenation ``"country|city"``; the pipe
    separator avoids collisions with commas inside city names.
    """

    order_id: str
    part_number: str
    supplier_code: str
    supplier_location: str
    product_cost: float
    product_amount: int
    product_details: str
    contract_delivery_time: int | None
    order_creation_date: date
    latest_need_by_date: date
    latest_promised_date: date
    approval_date: date
    availability_date: date | None = None


def derive_target(order: ProductOrder) -> int:
    """Days from order creation to availability (the regression target).

    Raises ``TargetUnavailableError`` when the availability date is absent
    and ``InvalidRecordError`` when it precedes order creation.
    """
    if order.availability_date is None:
        raise TargetUnavailableError(
            f"order {order.order_id}: availability date is unknown"
        )
    days = (order.availability_date - order.order_creation_date).days
    if days < 0:
        raise InvalidRecordError(
            f"order {order.order_id}: negative lead time ({days} days)"
        )
    return days


def date_offsets(order: ProductOrder) -> tuple[int, int, int]:
    """(need_by_days, promised_days, approval_days) relative to creation."""
    pocd = order.order_creation_date
    return (
        (order.latest_need_by_date - pocd).days,
        (order.latest_promised_date - pocd).days,
        (order.approval_date - pocd).days,
    )


def feature_values(order: ProductOrder) -> dict[str, object]:
    """Feature name -> raw value for the ten predictive features."""
    need_by, promised, approval = date_offsets(order)
    return {
        "part_number": order.part_number,
        "supplier_code": order.supplier_code,
        "supplier_location": order.supplier_location,
        "product_cost": order.product_cost,
        "product_amount": order.product_amount,
        "product_details": order.product_details,
        "contract_delivery_time": order.contract_delivery_time,
        "need_by_days": need_by,
        "promised_days": promised,
        "approval_days": approval,
    }


def validate_order(order: ProductOrder) -> list[str]:
    """Return every invariant violation; an empty list means the order is ok."""
    violations = []
    if not order.order_id:
        violations.append("order_id must be nonempty")
    if order.product_cost < 0:
        violations.append("product_cost must be >= 0")
    if order.product_amount < 1:
        violations.append("product_amount must be >= 1")
    if LOCATION_SEP not in order.supplier_location:
        violations.append(
            f"supplier_location must be 'country{LOCATION_SEP}city'"
        )
    pocd = order.order_creation_date
    if order.latest_need_by_date < pocd:
        violations.append("latest_need_by_date precedes order creation")
    if order.latest_promised_date < pocd:
        violations.append("latest_promised_date precedes order creation")
    if order.availability_date is not None and order.availability_date < pocd:
        violations.append("negative lead time: availability precedes creation")
    return violations


def shift_dates(order: ProductOrder, days: int) -> ProductOrder:
    """Shift every date of the order by ``days`` (used by invariance tests)."""
    delta = timedelta(days=days)
    return replace(
        order,
        order_creation_date=order.order_creation_date + delta,
        latest_need_by_date=order.latest_need_by_date + delta,
        latest_promised_date=order.latest_promised_date + delta,
        approval_date=order.approval_date + delta,
        availability_date=(
            None
            if order.availability_date is None
            else order.availability_date + delta
        ),
    )


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of product orders with unique order ids."""

    orders: tuple[ProductOrder, ...]
    provenance: str  # "synthetic" | "ingested"

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for order in self.orders:
            if order.order_id in seen:
                raise InvalidRecordError(
                    f"duplicate order_id {order.order_id!r}"
                )
            seen.add(order.order_id)

    def __len__(self) -> int:
        return len(self.orders)


@dataclass(frozen=True)
class FeatureSpec:
    """Descriptor for one feature: kind, vocabulary, missing-value policy."""

    name: str
    kind: str  # "categorical" | "numerical"
    vocabulary: tuple[str, ...] = ()
    missing_policy: str = "none"  # "none" | "median_impute_with_flag"
    impute_value: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "numerical" and self.vocabulary:
            raise ValueError(f"numerical feature {self.name} has a vocabulary")
        if self.kind == "categorical":
            if tuple(sorted(set(self.vocabulary))) != self.vocabulary:
                raise ValueError(
                    f"vocabulary of {self.name} must be deduplicated and sorted"
                )


@dataclass(frozen=True)
class FeatureSchema:
    """Per-feature descriptors in canonical feature order."""

    features: tuple[FeatureSpec, ...]

    def __getitem__(self, name: str) -> FeatureSpec:
        for spec in self.features:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "features": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "vocabulary": list(f.vocabulary),
                    "missing_policy": f.missing_policy,
                    "impute_value": f.impute_value,
                }
                for f in self.features
            ]
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "FeatureSchema":
        return cls(
            features=tuple(
                FeatureSpec(
                    name=f["name"],
                    kind=f["kind"],
                    vocabulary=tuple(f["vocabulary"]),
                    missing_policy=f["missing_policy"],
                    impute_value=f["impute_value"],
                )
                for f in payload["features"]
            )
        )


def _format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(dataset: Dataset, path) -> None:
    """Write the canonical one-header-row CSV ingestion format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for o in dataset.orders:
            country, _, city = o.supplier_location.partition(LOCATION_SEP)
            writer.writerow(
                [
                    o.order_id,
                    o.part_number,
                    o.supplier_code,
                    country,
                    city,
                    _format_cell(o.product_cost),
                    o.product_amount,
                    o.product_details,
                    _format_cell(o.contract_delivery_time),
                    _format_cell(o.order_creation_date),
                    _format_cell(o.latest_need_by_date),
                    _format_cell(o.latest_promised_date),
                    _format_cell(o.approval_date),
                    _format_cell(o.availability_date),
                ]
            )


def _parse_row(row: dict[str, str]) -> ProductOrder:
    def _date(field: str) -> date:
        return date.fromisoformat(row[field])

    contract = row["contract_delivery_time"].strip()
    availability = row["availability_date"].strip()
    return ProductOrder(
        order_id=row["order_id"],
        part_number=row["part_number"],
        supplier_code=row["supplier_code"],
        supplier_location=(
            row["supplier_country"] + LOCATION_SEP + row["supplier_city"]
        ),
        product_cost=float(row["product_cost"]),
        product_amount=int(row["product_amount"]),
        product_details=row["product_details"],
        contract_delivery_time=int(contract) if contract else None,
        order_creation_date=_date("order_creation_date"),
        latest_need_by_date=_date("latest_need_by_date"),
        latest_promised_date=_date("latest_promised_date"),
        approval_date=_date("approval_date"),
        availability_date=(
            date.fromisoformat(availability) if availability else None
        ),
    )


def read_csv(path, provenance: str = "ingested") -> tuple[Dataset, list[str]]:
    """Read the canonical CSV format.

    Malformed rows and rows violating order invariants (including negative
    lead times) are dropped with a logged warning; the returned issue list
    carries one diagnostic per dropped row.
    """
    orders: list[ProductOrder] = []
    issues: list[str] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                order = _parse_row(row)
            except (ValueError, KeyError) as exc:
                issues.append(f"line {lineno}: unparseable row ({exc})")
                continue
            violations = validate_order(order)
            if violations:
                issues.append(f"line {lineno}: {'; '.join(violations)}")
                continue
            if order.order_id in seen:
                issues.append(
                    f"line {lineno}: duplicate order_id {order.order_id!r}"
                )
                continue
            seen.add(order.order_id)
            orders.append(order)
    for issue in issues:
        log.warning("%s: dropped row: %s", path, issue)
    return Dataset(orders=tuple(orders), provenance=provenance), issues


def training_orders(dataset: Dataset) -> tuple[ProductOrder, ...]:
    """Orders usable for training: availability known and lead time >= 0."""
    usable = []
    for order in dataset.orders:
        if order.availability_date is None:
            continue
        try:
            derive_target(order)
        except InvalidRecordError:
            log.warning("order %s: dropped (negative lead time)", order.order_id)
            continue
        usable.append(order)
    return tuple(usable)
