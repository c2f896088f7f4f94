import numpy as np
import pytest

from graphlap.graph import build_graph
from graphlap.manifold import ManifoldSpec, sample_cloud
from graphlap.spectral import decompose

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def circle200():
    cloud = sample_cloud(ManifoldSpec("circle", 2, seed=7), 200, "trig-2")
    graph = build_graph(cloud, 0.25)
    assert graph.is_connected
    return cloud, graph, decompose(graph, 200)


@pytest.fixture(scope="session")
def triangle():
    """Complete graph on three vertices with h = 1."""
    pts = np.array([[0.0], [0.3], [0.6]])
    graph = build_graph(pts, 1.0)
    return graph
