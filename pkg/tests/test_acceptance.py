"""End-to-end acceptance checks.

Each test exercises one acceptance criterion and prints a single PASS/FAIL
line (run with -s to see them as they complete).
"""

import functools
import io
import random
import time
from fractions import Fraction

import pytest

import conftest
from replan.cli import main
from replan.generate import cycle_graph, random_instance, random_ugraph, snb_toy_instance
from replan.model import save_scheme
from replan.oracle import (
    UndirectedGraph,
    brute_force_optimal,
    feasible_bound_zero_free_root,
    min_bisection_cut_bf,
    min_bridge_bisection_bf,
    min_max_bridge_bf,
    reduce_bridge_to_replication,
    triple_gadget,
    verify_upward,
)
from replan.planner import PlannerConfig, greedy_plan
from replan.reshard import MoveRejected, apply_reshard
from replan.routing import check_robustness, path_latency, validate_workload
from replan.workload import enumerate_paths


def _verdict(num, desc):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                _record(f"criterion {num:2d} ({desc}): FAIL")
                raise
            _record(f"criterion {num:2d} ({desc}): PASS")

        return wrapper

    return decorate


def _record(line):
    print(f"\n{line}")
    conftest.ACCEPTANCE_RESULTS.append(line)


@pytest.fixture(scope="module")
def planned_instances():
    """100 seeded instances (<=200 vertices, 4 servers, t in {0,1,2}) with
    their planner outputs and per-instance planning times."""
    out = []
    for seed in range(100):
        inst = random_instance(
            vertices=50 + (seed * 3) % 151,
            servers=4,
            seed=seed,
            queries=2 + seed % 2,
        )
        t0 = time.perf_counter()
        scheme, rmap, report = greedy_plan(
            inst.graph, inst.workload, inst.sharding, inst.servers
        )
        elapsed = time.perf_counter() - t0
        out.append((inst, scheme, rmap, report, elapsed))
    return out


@_verdict(1, "bound satisfaction on 100 random instances")
def test_criterion_1_bound_satisfaction(planned_instances):
    for inst, scheme, _, report, elapsed in planned_instances:
        assert report.status == "ok"
        assert elapsed < 5.0
        check = validate_workload(
            inst.graph, inst.workload, inst.sharding, scheme, inst.servers
        )
        assert check.latency_ok
        assert check.violating_path_total == 0


@_verdict(2, "bounds survive 50 injected replicas")
def test_criterion_2_robust_under_extension(planned_instances):
    for idx, (inst, scheme, _, _, _) in enumerate(planned_instances):
        extended = scheme.copy()
        rng = random.Random(1000 + idx)
        vertices = sorted(inst.graph.vertices)
        for _ in range(50):
            extended.add(rng.choice(vertices), rng.choice(inst.servers.servers))
        check = validate_workload(
            inst.graph, inst.workload, inst.sharding, extended, inst.servers
        )
        assert check.latency_ok
        assert check.violating_path_total == 0


@_verdict(3, "six-object routing regression")
def test_criterion_3_fixture_regression(chain6_fixture):
    _, _, d, path, scheme = chain6_fixture
    non_robust = scheme([("v4", "s3"), ("v5", "s3")])
    assert path_latency(path, non_robust, d) == 2
    assert not check_robustness(path, non_robust, d)

    extended = scheme([("v4", "s3"), ("v5", "s3"), ("v3", "s1")])
    assert path_latency(path, extended, d) == 3

    robust = scheme([("v4", "s3"), ("v5", "s3"), ("v5", "s4"), ("v3", "s1")])
    assert path_latency(path, robust, d) == 2
    assert check_robustness(
        path, scheme([("v4", "s3"), ("v5", "s3"), ("v5", "s4")]), d
    )


@_verdict(4, "toy-graph path enumeration")
def test_criterion_4_enumeration(toy_social_graph, toy_social_query):
    paths = [p.nodes for p in enumerate_paths(toy_social_graph, toy_social_query)]
    assert paths == [
        ("Alice", "Bob", "m1"),
        ("Alice", "Charlie", "m2"),
        ("Alice", "Charlie", "m3"),
    ]


@_verdict(5, "greedy vs. exhaustive oracle on 200 tiny instances")
def test_criterion_5_oracle_sandwich():
    for seed in range(200):
        capacity = None if seed % 2 == 0 else Fraction(7)
        inst = random_instance(
            7, 3, seed=seed, t_bounds=[seed % 2, 1], capacity=capacity
        )
        best = brute_force_optimal(inst)
        scheme, _, report = greedy_plan(
            inst.graph, inst.workload, inst.sharding, inst.servers
        )
        if report.status != "ok":
            assert best is None  # greedy gives up only on infeasible instances
            continue
        assert best is not None
        r_opt, opt_cost = best
        greedy_cost = inst.graph.total_cost() + report.total_added_cost
        assert greedy_cost >= opt_cost
        assert verify_upward(inst, r_opt)
        check = validate_workload(
            inst.graph, inst.workload, inst.sharding, scheme, inst.servers
        )
        assert check.latency_ok


def _reduction_corpus():
    corpus = [cycle_graph(4), cycle_graph(6), cycle_graph(8)]
    for n in (4, 6, 8):
        seed = 0
        found = 0
        while found < 10:
            g = random_ugraph(n, 0.45, seed)
            seed += 1
            if g.is_connected():
                corpus.append(g)
                found += 1
    return corpus


@_verdict(6, "hardness-reduction round trip")
def test_criterion_6_reduction_round_trip():
    corpus = _reduction_corpus()
    assert len(corpus) >= 30
    for g in corpus:
        assert g.is_connected() and len(g.vertices) <= 8
        for k in (0, 1, 2):
            inst = reduce_bridge_to_replication(g, k)
            assert feasible_bound_zero_free_root(inst) == (
                min_bridge_bisection_bf(g, k) is not None
            )

    k4 = UndirectedGraph()
    names = [f"k{i}" for i in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            k4.add_edge(names[i], names[j])
    prism = UndirectedGraph()
    for a, b in [
        ("a", "b"), ("b", "c"), ("a", "c"),
        ("x", "y"), ("y", "z"), ("x", "z"),
        ("a", "x"), ("b", "y"), ("c", "z"),
    ]:
        prism.add_edge(a, b)
    for g in (k4, prism):
        h = triple_gadget(g)
        assert h.is_regular(3) and len(h.vertices) == 3 * len(g.vertices)
        assert min_max_bridge_bf(h) == min_bisection_cut_bf(g)


@_verdict(7, "reshard safety over random move batches")
def test_criterion_7_reshard_safety():
    for seed in range(20):
        inst = random_instance(30, 3, seed=200 + seed)
        scheme, rmap, report = greedy_plan(
            inst.graph, inst.workload, inst.sharding, inst.servers
        )
        assert report.status == "ok"
        vertices = sorted(inst.graph.vertices)
        totals_before = {
            v: sum(c for (vv, _), c in rmap.ref_counts.items() if vv == v)
            for v in vertices
        }
        rng = random.Random(seed)
        applied = 0
        while applied < 10:
            u = rng.choice(vertices)
            to = rng.choice(inst.servers.servers)
            try:
                apply_reshard(
                    [(u, scheme.sharding[u], to)],
                    inst.graph,
                    inst.servers,
                    scheme,
                    rmap,
                )
            except MoveRejected:
                continue
            applied += 1
            for v in vertices:
                total = sum(c for (vv, _), c in rmap.ref_counts.items() if vv == v)
                assert total == totals_before[v]
        scheme.validate(inst.graph)
        check = validate_workload(
            inst.graph, inst.workload, scheme.sharding, scheme, inst.servers
        )
        assert check.latency_ok
        assert check.violating_path_total == 0


@_verdict(8, "degenerate instances add nothing")
def test_criterion_8_degenerate():
    for seed in range(5):
        single = random_instance(40, 1, seed=seed)
        scheme, _, report = greedy_plan(
            single.graph, single.workload, single.sharding, single.servers
        )
        assert scheme.replica_count() == 0
        assert report.replication_overhead == Fraction(0)

        unbounded = random_instance(40, 3, seed=seed, t_bounds=[None, None])
        scheme, _, report = greedy_plan(
            unbounded.graph, unbounded.workload, unbounded.sharding, unbounded.servers
        )
        assert scheme.replica_count() == 0
        assert report.replication_overhead == Fraction(0)


@_verdict(9, "path pruning changes nothing")
def test_criterion_9_pruning_equivalence():
    for seed in range(50):
        inst = random_instance(25, 3, seed=300 + seed)
        outputs = []
        for prune in (True, False):
            scheme, _, report = greedy_plan(
                inst.graph,
                inst.workload,
                inst.sharding,
                inst.servers,
                PlannerConfig(prune=prune, deterministic=True),
            )
            assert report.status == "ok"
            buf = io.StringIO()
            save_scheme(scheme, buf)
            outputs.append(buf.getvalue())
        assert outputs[0] == outputs[1]


@_verdict(10, "bound-sweep table shape")
def test_criterion_10_tradeoff_table(tmp_path):
    gen = tmp_path / "inst"
    assert main(["gen", "snb-toy", "--persons", "6", "--out-dir", str(gen)]) == 0
    out = tmp_path / "out"
    code = main([
        "plan",
        "--graph", str(gen / "graph.txt"),
        "--servers", str(gen / "servers.txt"),
        "--shard", str(gen / "shard.txt"),
        "--workload", str(gen / "workload.txt"),
        "--t-override", "0,1,2,inf",
        "--out-dir", str(out),
    ])
    assert code == 0
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "t,overhead,worst_latency"
    rows = [ln.split(",") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["0", "1", "2", "inf"]
    overheads = {r[0]: float(r[1]) for r in rows}
    assert all(v >= 0.0 for v in overheads.values())
    assert overheads["inf"] == 0.0
    assert overheads["0"] >= overheads["inf"]
    for label, _, worst in rows:
        if label != "inf":
            assert int(worst) <= int(label)
