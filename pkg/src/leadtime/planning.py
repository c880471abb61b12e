"""Hybrid planning-date selection and lane load-profile aggregation.

Date precedence is pickup > promised > forecast: a pick-up notification is
definitive, a supplier promise is planning-grade but subject to change, and
the model forecast backstops long-range planning.  Chosen dates are then
bucketed per shipping lane and period to build a load profile.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping, Sequence

from .records import ProductOrder

SHORT_RANGE = "short_range"
MEDIUM_RANGE = "medium_range"
LONG_RANGE = "long_range"


class NoPlanningDateError(ValueError):
    """No pickup, promised, or forecast date is available."""


@dataclass(frozen=True)
class DateInputs:
    pickup_date: date | None = None  # short range
    promised_date: date | None = None  # medium range
    forecast_date: date | None = None  # long range


@dataclass(frozen=True)
class PlanningDecision:
    chosen_date: date
    source: str
    subject_to_change: bool

    def __post_init__(self) -> None:
        if self.source == SHORT_RANGE and self.subject_to_change:
            raise ValueError("a pick-up date is not subject to change")
        if self.source in (MEDIUM_RANGE, LONG_RANGE) and not self.subject_to_change:
            raise ValueError(f"{self.source} decisions are subject to change")


def select_planning_date(inputs: DateInputs) -> PlanningDecision:
    """Apply the pickup > promised > forecast precedence."""
    if inputs.pickup_date is not None:
        return PlanningDecision(
            chosen_date=inputs.pickup_date,
            source=SHORT_RANGE,
            subject_to_change=False,
        )
    if inputs.promised_date is not None:
        return PlanningDecision(
            chosen_date=inputs.promised_date,
            source=MEDIUM_RANGE,
            subject_to_change=True,
        )
    if inputs.forecast_date is not None:
        return PlanningDecision(
            chosen_date=inputs.forecast_date,
            source=LONG_RANGE,
            subject_to_change=True,
        )
    raise NoPlanningDateError("no pickup, promised, or forecast date present")


def validate_date_inputs(inputs: DateInputs, pocd: date) -> list[str]:
    """Violations of the 'present dates are >= POCD' invariant."""
    violations = []
    for name, value in (
        ("pickup_date", inputs.pickup_date),
        ("promised_date", inputs.promised_date),
        ("forecast_date", inputs.forecast_date),
    ):
        if value is not None and value < pocd:
            violations.append(f"{name} precedes order creation")
    return violations


Lane = tuple[str, str]  # (origin supplier_location, destination label)


def lane_of(
    order: ProductOrder, destination_of: Mapping[str, str] | str
) -> Lane:
    """Orders carry no explicit lane; the origin is the supplier location
    and the destination comes from a configured mapping (or one label)."""
    if isinstance(destination_of, str):
        dest = destination_of
    else:
        dest = destination_of.get(order.supplier_location, "US")
    return (order.supplier_location, dest)


def _add_months(d: date, months: int) -> date:
    month_index = d.year * 12 + (d.month - 1) + months
    return date(month_index // 12, month_index % 12 + 1, 1)


@dataclass(frozen=True)
class LoadProfile:
    lane: Lane
    granularity: str  # "month" | "week"
    period_starts: tuple[date, ...]
    order_counts: tuple[int, ...]
    total_amounts: tuple[int, ...]
    overflow_ids: tuple[str, ...]  # decided dates outside the horizon

    def __post_init__(self) -> None:
        if not (
            len(self.period_starts)
            == len(self.order_counts)
            == len(self.total_amounts)
        ):
            raise ValueError("per-bucket fields must align")


def build_load_profile(
    entries: Sequence[tuple[ProductOrder, PlanningDecision]],
    lane: Lane,
    horizon_start: date,
    n_periods: int,
    granularity: str = "month",
    destination_of: Mapping[str, str] | str = "US",
) -> LoadProfile:
    """Bucket chosen dates of one lane's orders over a contiguous horizon.

    Orders decided outside [horizon_start, horizon_end) are excluded from
    the buckets and reported in ``overflow_ids``.
    """
    if n_periods < 1:
        raise ValueError("horizon must contain at least one period")
    if granularity not in ("month", "week"):
        raise ValueError("granularity must be 'month' or 'week'")

    if granularity == "month":
        start = date(horizon_start.year, horizon_start.month, 1)
        period_starts = tuple(_add_months(start, i) for i in range(n_periods))

        def period_of(d: date) -> int:
            return (d.year - start.year) * 12 + (d.month - start.month)

    else:
        start = horizon_start
        period_starts = tuple(start + timedelta(weeks=i) for i in range(n_periods))

        def period_of(d: date) -> int:
            days = (d - start).days
            return days // 7 if days >= 0 else -1

    counts = [0] * n_periods
    amounts = [0] * n_periods
    overflow: list[str] = []
    for order, decision in entries:
        if lane_of(order, destination_of) != lane:
            continue
        idx = period_of(decision.chosen_date)
        if 0 <= idx < n_periods:
            counts[idx] += 1
            amounts[idx] += order.product_amount
        else:
            overflow.append(order.order_id)
    return LoadProfile(
        lane=lane,
        granularity=granularity,
        period_starts=period_starts,
        order_counts=tuple(counts),
        total_amounts=tuple(amounts),
        overflow_ids=tuple(overflow),
    )


def write_decisions_csv(
    entries: Sequence[tuple[ProductOrder, PlanningDecision]], path
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["order_id", "chosen_date", "source", "subject_to_change"])
        for order, decision in entries:
            writer.writerow(
                [
                    order.order_id,
                    decision.chosen_date.isoformat(),
                    decision.source,
                    str(decision.subject_to_change).lower(),
                ]
            )


def write_load_profiles_csv(profiles: Sequence[LoadProfile], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lane", "period_start", "order_count", "total_amount"])
        for profile in profiles:
            lane_label = f"{profile.lane[0]}->{profile.lane[1]}"
            for start, count, amount in zip(
                profile.period_starts, profile.order_counts, profile.total_amounts
            ):
                writer.writerow([lane_label, start.isoformat(), count, amount])


def write_overflow_csv(profiles: Sequence[LoadProfile], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lane", "order_id"])
        for profile in profiles:
            lane_label = f"{profile.lane[0]}->{profile.lane[1]}"
            for order_id in profile.overflow_ids:
                writer.writerow([lane_label, order_id])
