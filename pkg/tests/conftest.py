import numpy as np
import pytest

from mixedisc.linalg import build_adjacency

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok, detail: str = "") -> None:
    """``ok`` is True, False, or None for a skipped criterion."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE_LINES.append(f"{status}  {criterion}" + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def triangle():
    return build_adjacency(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
