"""Seeded instance generators: random layered workloads, a social-network
toy, and the hardness-reduction constructions."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from .model import DataGraph, ServerSet, ShardingMap, hash_shard
from .oracle import ProblemInstance, UndirectedGraph, reduce_bridge_to_replication
from .workload import QueryType, WorkloadSpec


def random_instance(
    vertices: int,
    servers: int,
    seed: int,
    hops: int = 2,
    queries: int = 2,
    t_bounds: Optional[list[Optional[int]]] = None,
    max_out_degree: int = 3,
    capacity: Optional[Fraction] = None,
    epsilon: Optional[tuple[str, Fraction]] = None,
) -> ProblemInstance:
    """A layered random graph with label-path query types that match it.

    Vertices are striped over hops+1 label layers; edges go one layer down,
    so each query type (root layer 0, one step per layer) has matching paths.
    Deterministic for a fixed seed.
    """
    rng = random.Random(seed)
    layers = hops + 1
    g = DataGraph()
    by_layer: list[list[str]] = [[] for _ in range(layers)]
    for i in range(vertices):
        layer = i % layers
        vid = f"v{i}"
        g.add_vertex(vid, f"L{layer}", Fraction(rng.randint(1, 3)))
        by_layer[layer].append(vid)
    for layer in range(layers - 1):
        nxt = by_layer[layer + 1]
        if not nxt:
            continue
        for vid in by_layer[layer]:
            for dst in sorted(rng.sample(nxt, min(rng.randint(0, max_out_degree), len(nxt)))):
                g.add_edge(vid, f"e{layer}", dst)

    sset = ServerSet(
        [f"s{i}" for i in range(servers)],
        {f"s{i}": capacity for i in range(servers)},
        epsilon=epsilon,
    )
    sharding = hash_shard(g, sset, seed)

    if t_bounds is None:
        t_bounds = [rng.choice([0, 1, 2]) for _ in range(queries)]
    workload: WorkloadSpec = []
    for qi, t in enumerate(t_bounds):
        length = rng.randint(1, hops)
        steps = tuple((f"e{i}", f"L{i + 1}") for i in range(length))
        workload.append(QueryType(f"q{qi}", "L0", steps, t))
    return ProblemInstance(g, sset, sharding, workload)


def snb_toy_instance(
    persons: int = 6,
    servers: int = 2,
    seed: int = 0,
    epsilon: Optional[tuple[str, Fraction]] = None,
) -> ProblemInstance:
    """A small social-network instance: persons who know each other and
    create posts, with three query types of distinct latency bounds."""
    rng = random.Random(seed)
    g = DataGraph()
    for i in range(persons):
        g.add_vertex(f"p{i}", "person", Fraction(1))
    post_id = 0
    for i in range(persons):
        # Ring of knows edges plus a random chord.
        g.add_edge(f"p{i}", "knows", f"p{(i + 1) % persons}")
        chord = rng.randrange(persons)
        if chord not in (i, (i + 1) % persons):
            g.add_edge(f"p{i}", "knows", f"p{chord}")
        for _ in range(rng.randint(1, 2)):
            pid = f"po{post_id}"
            post_id += 1
            g.add_vertex(pid, "post", Fraction(2))
            g.add_edge(f"p{i}", "creates", pid)
            g.add_edge(pid, "hasCreator", f"p{i}")

    sset = ServerSet([f"s{i}" for i in range(servers)], epsilon=epsilon)
    sharding = hash_shard(g, sset, seed)
    workload: WorkloadSpec = [
        QueryType("friend-posts", "person", (("knows", "person"), ("creates", "post")), 1),
        QueryType("friends-of-friends", "person", (("knows", "person"), ("knows", "person")), 2),
        QueryType("post-author-friends", "post", (("hasCreator", "person"), ("knows", "person")), 0),
    ]
    return ProblemInstance(g, sset, sharding, workload)


def cycle_graph(n: int) -> UndirectedGraph:
    g = UndirectedGraph()
    for i in range(n):
        g.add_edge(f"u{i}", f"u{(i + 1) % n}")
    return g


def random_ugraph(n: int, p: float, seed: int) -> UndirectedGraph:
    rng = random.Random(seed)
    g = UndirectedGraph()
    names = [f"u{i}" for i in range(n)]
    for v in names:
        g.add_vertex(v)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                g.add_edge(names[i], names[j])
    return g


def bridge_reduction_instance(g: UndirectedGraph, k: int) -> ProblemInstance:
    return reduce_bridge_to_replication(g, k)
