import os

import numpy as np
import pytest

from inputsel.graph import Graph, named_graph


def pytest_collection_modifyitems(config, items):
    if os.environ.get("INPUTSEL_FULL"):
        return
    skip = pytest.mark.skip(reason="full-scale run; set INPUTSEL_FULL=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def accessibility_graph():
    # one-based nodes 1..6 mapped to 0..5; node 6 (id 5) is the input
    edges = [(5, 1), (5, 2), (1, 0), (2, 0), (0, 1), (4, 3), (3, 4)]
    return Graph(6, tuple(edges), directed=True)


@pytest.fixture
def dilation_graph():
    # followers 1 and 3 (ids 0, 2) have node 6 (id 5) as their only in-neighbour
    edges = [(5, 0), (5, 2), (0, 1), (1, 3), (3, 4), (2, 4)]
    return Graph(6, tuple(edges), directed=True)


@pytest.fixture
def ring10():
    return named_graph("ring", 10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
