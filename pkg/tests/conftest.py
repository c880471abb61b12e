import hashlib
import re
from datetime import date

import numpy as np
import pytest

from leadtime.records import ProductOrder

_CRITERION_RESULTS: dict[int, tuple[str, str]] = {}
_CRITERION_PATTERN = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    match = _CRITERION_PATTERN.search(report.nodeid)
    if match and report.when == "call":
        number = int(match.group(1))
        _CRITERION_RESULTS[number] = (report.outcome.upper(), match.group(2))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_RESULTS):
        outcome, name = _CRITERION_RESULTS[number]
        label = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(
            f"criterion {number:>2} [{name.replace('_', ' ')}]: {label}"
        )


def make_order(**overrides) -> ProductOrder:
    fields = dict(
        order_id="SO-000001",
        part_number="P-1001",
        supplier_code="SUP-101",
        supplier_location="CN|Shanghai",
        product_cost=1250.0,
        product_amount=20,
        product_details="turbine-systems/rotors",
        contract_delivery_time=30,
        order_creation_date=date(2021, 3, 1),
        latest_need_by_date=date(2021, 5, 1),
        latest_promised_date=date(2021, 4, 15),
        approval_date=date(2021, 3, 3),
        availability_date=date(2021, 4, 20),
    )
    fields.update(overrides)
    return ProductOrder(**fields)


@pytest.fixture()
def rng(request):
    # per-test deterministic stream: results never depend on test ordering
    digest = hashlib.blake2b(request.node.name.encode(), digest_size=4).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))
