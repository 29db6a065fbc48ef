import sys

import pytest
from hypothesis import settings

from evacsim.building import BuildingGraph, BuildingNode, Edge, load_default_building

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_graph(edges, exits, n=None, positions=None, capacity=1, floors=None, name="t"):
    """Small graph helper: ``edges`` as (u, v, length) triples."""
    n = n if n is not None else 1 + max(max(u, v) for u, v, _ in edges)
    nodes = []
    for i in range(n):
        pos = positions[i] if positions else (100.0 * i, 0.0, 0.0)
        cap = capacity[i] if isinstance(capacity, (list, tuple)) else capacity
        floor = floors[i] if floors else 1
        nodes.append(BuildingNode(i, pos, floor, cap, i in exits))
    return BuildingGraph.build(name, nodes, [Edge(u, v, float(w)) for u, v, w in edges])


@pytest.fixture(scope="session")
def default_graph():
    return load_default_building()


TRIANGLE = """\
building tri
node 0 0 0 0 1 1
node 1 100 0 0 1 1
node 2 50 80 0 1 1 exit
edge 0 1 10
edge 1 2 10
edge 0 2 25
"""


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
