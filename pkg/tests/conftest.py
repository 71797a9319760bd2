import numpy as np
import pytest

from crosskerr import build_variation, example_params, normalize, steady_state_at

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def example():
    return normalize(example_params())


@pytest.fixture(scope="session")
def ss100(example):
    return steady_state_at(100.0, example)


@pytest.fixture(scope="session")
def vs100(example, ss100):
    return build_variation(ss100, example)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
