import itertools
import random

import pytest

from dyckmatch.paths import SignPath


def all_bridges(n):
    """Every bridge of size n, generated independently of the oracle module."""
    for ups in itertools.combinations(range(2 * n), n):
        steps = [-1] * (2 * n)
        for i in ups:
            steps[i] = 1
        yield SignPath(tuple(steps))


def random_bridge(n, rnd):
    steps = [1] * n + [-1] * n
    rnd.shuffle(steps)
    return SignPath(tuple(steps))


@pytest.fixture
def rnd():
    return random.Random(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
