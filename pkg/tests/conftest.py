from fractions import Fraction

import pytest

# One line per acceptance criterion, filled in by tests/test_acceptance.py and
# echoed after the run (output capture would otherwise swallow the prints).
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)

from replan.model import DataGraph, ReplicationScheme, ServerSet, ShardingMap
from replan.workload import CausalAccessPath, QueryType


@pytest.fixture
def toy_social_graph():
    """Toy social graph: three persons, three messages, knows/creates edges."""
    g = DataGraph()
    for p in ["Alice", "Bob", "Charlie"]:
        g.add_vertex(p, "person", Fraction(1))
    for m in ["m1", "m2", "m3"]:
        g.add_vertex(m, "message", Fraction(1))
    g.add_edge("Alice", "knows", "Bob")
    g.add_edge("Alice", "knows", "Charlie")
    g.add_edge("Bob", "creates", "m1")
    g.add_edge("Charlie", "creates", "m2")
    g.add_edge("Charlie", "creates", "m3")
    return g


@pytest.fixture
def toy_social_query():
    return QueryType("friend-messages", "person", (("knows", "person"), ("creates", "message")), 2)


def make_path(nodes, name="q", bound=2):
    qt = QueryType(name, "x", tuple(("e", "x") for _ in nodes[1:]), bound)
    return CausalAccessPath(qt, tuple(nodes))


@pytest.fixture
def chain6_fixture():
    """Six-object chain regression fixture for the robustness example.

    The last two objects live on their own servers (s5, s6), which yields the
    reference latencies: 2 with the initial replicas, 3 after the non-robust
    extension, and 2 again with the robust scheme.
    """
    g = DataGraph()
    for i in range(1, 7):
        g.add_vertex(f"v{i}", "obj", Fraction(1))
    for i in range(1, 6):
        g.add_edge(f"v{i}", "e", f"v{i + 1}")
    servers = ServerSet([f"s{i}" for i in range(1, 7)])
    d = ShardingMap(
        {"v1": "s1", "v2": "s1", "v3": "s3", "v4": "s4", "v5": "s5", "v6": "s6"}
    )
    path = make_path([f"v{i}" for i in range(1, 7)], bound=2)

    def scheme(replicas):
        r = ReplicationScheme(ShardingMap(dict(d.assignment)))
        for v, s in replicas:
            r.add(v, s)
        return r

    return g, servers, d, path, scheme
