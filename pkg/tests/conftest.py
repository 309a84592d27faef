import numpy as np
import pytest

from esbox import boxes

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def teleport():
    return boxes.teleportation_box()


@pytest.fixture(scope="session")
def twirled(teleport):
    return boxes.twirled_box(teleport)


@pytest.fixture(scope="session")
def random_boxes():
    """200 seeded boxes, alternating 4 and 8 outcomes."""
    return [boxes.random_es_box(4 if k % 2 == 0 else 8, k) for k in range(200)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record():
    """Log one pass/fail line for an acceptance criterion, then assert it."""

    def _record(number: int, title: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record
