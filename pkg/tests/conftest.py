import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def relerr(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


@pytest.fixture
def rel():
    return relerr


# one summary line per acceptance criterion, repeated after the test report
CRITERIA_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, title: str, checks) -> None:
        """Print a pass/fail line for ``checks`` (label, ok, detail) and assert them all."""
        failed = [(label, detail) for label, ok, detail in checks if not ok]
        shown = failed if failed else [(label, detail) for label, _, detail in checks]
        body = "; ".join(f"{label} {detail}" for label, detail in shown)
        line = f"[{'FAIL' if failed else 'PASS'}] criterion {number}: {title} | {body}"
        CRITERIA_LINES.append(line)
        print(line)
        assert not failed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
