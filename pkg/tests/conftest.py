import hypothesis
import numpy as np
import pytest

from verifcs.graph import MeasurementGraph

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")


@pytest.fixture
def single_edge():
    return MeasurementGraph(1, 1, [[0]])


@pytest.fixture
def six_cycle():
    # v0:{c0,c1}, v1:{c1,c2}, v2:{c2,c0}
    return MeasurementGraph(3, 3, [[0, 1], [1, 2], [2, 0]])


@pytest.fixture
def duplicate_columns():
    return MeasurementGraph(2, 1, [[0], [0]])


def random_tiny_graph(rng, max_n=12, max_m=8, max_deg=3):
    """Unstructured binary matrix: 4-cycles, repeated and empty columns allowed."""
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(2, max_m + 1))
    adj = []
    for _ in range(n):
        d = int(rng.integers(0, min(max_deg, m) + 1))
        adj.append(rng.choice(m, size=d, replace=False).tolist())
    return MeasurementGraph(n, m, adj)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
