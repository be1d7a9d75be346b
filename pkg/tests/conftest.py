import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lagrecover.instances import example1, symmetric_counterexample  # noqa: E402


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def counter():
    return symmetric_counterexample()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Record an acceptance outcome: ``record(criterion, ok, detail)``; a criterion passes only if all records do."""

    def _record(criterion: int, ok: bool, detail: str = "") -> None:
        prev_ok, prev_detail = ACCEPTANCE.get(criterion, (True, []))
        ACCEPTANCE[criterion] = (prev_ok and bool(ok), prev_detail + ([detail] if detail else []))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, details = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({'; '.join(details)})")
