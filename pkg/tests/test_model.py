import io
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from replan.model import (
    DataGraph,
    FormatError,
    ReplicationScheme,
    ServerSet,
    ShardingMap,
    all_server_storage,
    hash_shard,
    load_graph,
    load_servers,
    load_sharding,
    save_graph,
    server_storage,
    vertex_bucket,
)


def parse(text):
    return load_graph(io.StringIO(text))


class TestLoadGraph:
    def test_empty_sections(self):
        g = parse("#graph v1\n")
        assert len(g.labels) == 0
        assert g.num_edges() == 0

    def test_toy_social_counts(self, toy_social_graph):
        buf = io.StringIO()
        save_graph(toy_social_graph, buf)
        g = parse(buf.getvalue())
        assert len(g.labels) == 6
        assert g.num_edges() == 5

    def test_malformed_line_reports_number(self):
        with pytest.raises(FormatError, match="line 3"):
            parse("#graph v1\nV a person\nV broken\n")

    def test_dangling_edge(self):
        with pytest.raises(FormatError, match="not a declared vertex"):
            parse("#graph v1\nV a x\nE a e b\n")

    def test_duplicate_vertex(self):
        with pytest.raises(FormatError, match="duplicate vertex"):
            parse("#graph v1\nV a x\nV a y\n")

    def test_negative_cost(self):
        with pytest.raises(FormatError, match="negative"):
            parse("#graph v1\nV a x -1\n")

    def test_edges_may_precede_vertices(self):
        g = parse("#graph v1\nE a e b\nV a x\nV b x\n")
        assert g.num_edges() == 1

    def test_default_cost_is_one(self):
        g = parse("#graph v1\nV a x\n")
        assert g.cost("a") == 1

    def test_rational_and_decimal_costs(self):
        g = parse("#graph v1\nV a x 1/8\nV b x 2.5\n")
        assert g.cost("a") == Fraction(1, 8)
        assert g.cost("b") == Fraction(5, 2)

    def test_random_roundtrip(self):
        rng = random.Random(7)
        g = DataGraph()
        for i in range(100):
            g.add_vertex(f"n{i}", f"l{i % 5}", Fraction(rng.randint(0, 9)))
        for _ in range(200):
            g.add_edge(f"n{rng.randrange(100)}", "e", f"n{rng.randrange(100)}")
        buf = io.StringIO()
        save_graph(g, buf)
        g2 = parse(buf.getvalue())
        assert g2.labels == g.labels
        assert g2.costs == g.costs
        assert {v: sorted((e.label, e.dst) for e in es) for v, es in g2.adj.items()} == {
            v: sorted((e.label, e.dst) for e in es) for v, es in g.adj.items()
        }


class TestServers:
    def test_parse(self):
        s = load_servers(io.StringIO("#servers v1\ns0 10\ns1\nepsilon rel 1/50\n"))
        assert s.servers == ["s0", "s1"]
        assert s.capacity("s0") == 10
        assert s.capacity("s1") is None
        assert s.epsilon == ("rel", Fraction(1, 50))

    def test_epsilon_inf(self):
        s = load_servers(io.StringIO("#servers v1\ns0\nepsilon abs inf\n"))
        assert s.epsilon is None
        assert s.epsilon_given

    def test_missing_epsilon_flagged(self):
        s = load_servers(io.StringIO("#servers v1\ns0\n"))
        assert not s.epsilon_given

    def test_duplicate_server(self):
        with pytest.raises(FormatError, match="duplicate"):
            load_servers(io.StringIO("#servers v1\ns0\ns0\n"))

    def test_empty_is_error(self):
        with pytest.raises(FormatError):
            load_servers(io.StringIO("#servers v1\n"))


class TestHashShard:
    def test_single_server(self, toy_social_graph):
        servers = ServerSet(["only"])
        m = hash_shard(toy_social_graph, servers, seed=3)
        assert set(m.assignment.values()) == {"only"}

    def test_deterministic(self, toy_social_graph):
        servers = ServerSet(["a", "b", "c"])
        assert hash_shard(toy_social_graph, servers, 5).assignment == hash_shard(
            toy_social_graph, servers, 5
        ).assignment

    def test_balance(self):
        g = DataGraph()
        for i in range(10_000):
            g.add_vertex(f"v{i}", "x")
        servers = ServerSet(["s0", "s1", "s2", "s3"])
        m = hash_shard(g, servers, seed=1)
        counts = {s: 0 for s in servers.servers}
        for s in m.assignment.values():
            counts[s] += 1
        for c in counts.values():
            assert 1500 <= c <= 3500

    @given(st.text(min_size=1, max_size=20), st.integers(0, 2**64 - 1))
    def test_pure_function_of_id_seed_count(self, vid, seed):
        assert vertex_bucket(vid, seed, 7) == vertex_bucket(vid, seed, 7)
        assert 0 <= vertex_bucket(vid, seed, 7) < 7


class TestSharding:
    def test_load_total(self, toy_social_graph):
        servers = ServerSet(["s0"])
        text = "#shard v1\n" + "".join(f"{v} s0\n" for v in toy_social_graph.vertices)
        m = load_sharding(io.StringIO(text), toy_social_graph, servers)
        assert len(m.assignment) == 6

    def test_missing_vertex(self, toy_social_graph):
        servers = ServerSet(["s0"])
        with pytest.raises(FormatError, match="not total"):
            load_sharding(io.StringIO("#shard v1\nAlice s0\n"), toy_social_graph, servers)

    def test_unknown_server(self, toy_social_graph):
        servers = ServerSet(["s0"])
        with pytest.raises(FormatError, match="unknown server"):
            load_sharding(io.StringIO("#shard v1\nAlice s9\n"), toy_social_graph, servers)

    def test_split_by_label(self, toy_social_graph):
        servers = ServerSet(["s0", "s1"])
        lines = [
            f"{v} {'s0' if toy_social_graph.labels[v] == 'person' else 's1'}"
            for v in toy_social_graph.vertices
        ]
        m = load_sharding(
            io.StringIO("#shard v1\n" + "\n".join(lines) + "\n"), toy_social_graph, servers
        )
        m.validate(toy_social_graph, servers)
        assert m["Alice"] == "s0"
        assert m["m1"] == "s1"


class TestStorage:
    def test_single_server_unit_costs(self, toy_social_graph):
        servers = ServerSet(["s0"])
        r = ReplicationScheme(hash_shard(toy_social_graph, servers, 0))
        assert server_storage(toy_social_graph, r, "s0") == 6

    def test_shard_only_matches_shard_sums(self, toy_social_graph):
        servers = ServerSet(["s0", "s1"])
        m = hash_shard(toy_social_graph, servers, 0)
        r = ReplicationScheme(m)
        for s in servers.servers:
            expected = sum(
                toy_social_graph.cost(v) for v, sv in m.assignment.items() if sv == s
            )
            assert server_storage(toy_social_graph, r, s) == expected

    def test_replication_adds_exact_cost(self):
        g = DataGraph()
        g.add_vertex("a", "x", Fraction(5, 2))
        servers = ServerSet(["s0", "s1"])
        r = ReplicationScheme(ShardingMap({"a": "s0"}))
        before = server_storage(g, r, "s1")
        r.add("a", "s1")
        assert server_storage(g, r, "s1") - before == Fraction(5, 2)

    @given(st.integers(0, 2**32), st.integers(1, 4), st.integers(2, 12))
    def test_double_counting_identity(self, seed, n_servers, n_vertices):
        rng = random.Random(seed)
        g = DataGraph()
        for i in range(n_vertices):
            g.add_vertex(f"v{i}", "x", Fraction(rng.randint(0, 5)))
        servers = ServerSet([f"s{i}" for i in range(n_servers)])
        r = ReplicationScheme(hash_shard(g, servers, seed))
        for _ in range(n_vertices):
            r.add(f"v{rng.randrange(n_vertices)}", f"s{rng.randrange(n_servers)}")
        loads = all_server_storage(g, r, servers)
        lhs = sum(loads.values(), Fraction(0))
        rhs = sum(
            (g.cost(v) * len(cs) for v, cs in r.items()), Fraction(0)
        )
        assert lhs == rhs

    def test_original_always_present(self, toy_social_graph):
        servers = ServerSet(["s0", "s1"])
        m = hash_shard(toy_social_graph, servers, 0)
        r = ReplicationScheme(m)
        r.validate(toy_social_graph)
        for v in toy_social_graph.vertices:
            assert m[v] in r.copies(v)
