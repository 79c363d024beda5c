import numpy as np
import pytest

from semr.environment import build_environment

ACCEPTANCE_LINES = []


@pytest.fixture
def five_arms():
    return build_environment(0.0, [1.0, 2.0, 3.0, 4.0, 5.0], 5.0)


@pytest.fixture
def acceptance_log():
    def record(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def random_spd(rng, d, jitter=0.0):
    a = rng.standard_normal((d, d))
    return a.T @ a + jitter * np.eye(d)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
