import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def configs_dir():
    return ROOT / "configs"


@pytest.fixture
def golden_dir():
    return ROOT / "tests" / "golden"


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str, elapsed: float, limit: float):
        timed = elapsed <= limit
        status = "PASS" if ok and timed else "FAIL"
        line = f"criterion {number:>2} {status}  {title}: {detail}  [{elapsed:.2f} s / {limit:g} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert timed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
