"""Greedy latency-bound replication planner.

Processes one causal access path at a time. For each path whose subpath count
under the sharding exceeds its budget, it enumerates candidate subsets of
subpaths to retain, merges the others into their retained predecessor by
upward replication (with the extra copies that make the result robust under
later replica additions), filters candidates by storage and balance
constraints, and commits the cheapest survivor.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .model import (
    DataGraph,
    ReplicationScheme,
    ServerId,
    ServerSet,
    ShardingMap,
    VertexId,
    all_server_storage,
)
from .reshard import ReshardingMap
from .routing import validate_workload
from .workload import CausalAccessPath, WorkloadSpec, enumerate_paths


@dataclass
class PlannerConfig:
    two_pass: bool = True
    deterministic: bool = True
    balance_check: str = "per-candidate"  # or "final-only"
    prune: bool = True


@dataclass
class Candidate:
    selected: tuple[int, ...]  # sorted subpath indices, always containing 0
    staged: list[tuple[VertexId, ServerId]]
    cost: Fraction
    # (u, v, d(u)) for every predecessor/object pair covered by this merge,
    # including pairs whose copy already existed; feeds the resharding map.
    colocations: list[tuple[VertexId, VertexId, ServerId]]


class NoSolutionFound(Exception):
    def __init__(self, query: str, path: CausalAccessPath):
        super().__init__(
            f"no candidate satisfies the storage/balance constraints for a path "
            f"of query {query!r}: {'->'.join(path.nodes)}"
        )
        self.query = query
        self.path = path


@dataclass
class PerServerReport:
    storage: Fraction
    capacity: Optional[Fraction]
    share: Fraction


@dataclass
class PerQueryReport:
    name: str
    bound: Optional[int]
    worst_latency: int
    path_count: int
    pruned_count: int


@dataclass
class PlanReport:
    status: str = "ok"
    total_original_cost: Fraction = Fraction(0)
    total_added_cost: Fraction = Fraction(0)
    replication_overhead: Fraction = Fraction(0)
    per_server: dict[ServerId, PerServerReport] = field(default_factory=dict)
    imbalance: Fraction = Fraction(0)
    per_query: list[PerQueryReport] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)
    failure: Optional[str] = None


def subpaths_under_sharding(p: CausalAccessPath, d: ShardingMap) -> list[tuple[int, int]]:
    """Maximal runs of consecutive path nodes sharded to the same server.

    With no replicas every access lands on the object's original server, so
    the server-local subpaths are exactly the runs of equal d values.
    """
    ranges = []
    start = 0
    nodes = p.nodes
    for i in range(1, len(nodes)):
        if d[nodes[i]] != d[nodes[i - 1]]:
            ranges.append((start, i))
            start = i
    ranges.append((start, len(nodes)))
    return ranges


def enumerate_candidates(h: int, t: int) -> Iterator[tuple[int, ...]]:
    """All C(h, t) subsets of {1..h} of size t, each augmented with index 0,
    in lexicographic order."""
    for combo in itertools.combinations(range(1, h + 1), t):
        yield (0,) + combo


def stage_candidate(
    selected: tuple[int, ...],
    p: CausalAccessPath,
    r: ReplicationScheme,
    subpaths: list[tuple[int, int]],
    graph: DataGraph,
) -> Candidate:
    """Compute the replica additions a candidate needs on top of r.

    Each non-selected subpath i is merged into its selected predecessor j:
    every object v in subpath i is replicated to the original server of every
    object u in subpaths j..i-1, skipping copies already present or staged.
    """
    d = r.sharding
    sel = set(selected)
    staged: list[tuple[VertexId, ServerId]] = []
    staged_set: set[tuple[VertexId, ServerId]] = set()
    colocations: list[tuple[VertexId, VertexId, ServerId]] = []
    cost = Fraction(0)
    h = len(subpaths) - 1
    for i in range(1, h + 1):
        if i in sel:
            continue
        j = max(x for x in selected if x < i)
        vi_start, vi_end = subpaths[i]
        for v in p.nodes[vi_start:vi_end]:
            for k in range(j, i):
                uk_start, uk_end = subpaths[k]
                for u in p.nodes[uk_start:uk_end]:
                    s = d[u]
                    colocations.append((u, v, s))
                    if r.holds(v, s) or (v, s) in staged_set:
                        continue
                    staged_set.add((v, s))
                    staged.append((v, s))
                    cost += graph.cost(v)
    return Candidate(selected, staged, cost, colocations)


def candidate_feasible(
    candidate: Candidate,
    servers: ServerSet,
    loads: dict[ServerId, Fraction],
    graph: DataGraph,
    check_balance: bool = True,
) -> bool:
    """Would committing the staged replicas keep every server within capacity
    and (optionally) pairwise loads within the imbalance bound?"""
    new_loads = dict(loads)
    for v, s in candidate.staged:
        new_loads[s] += graph.cost(v)
    for s in servers.servers:
        cap = servers.capacity(s)
        if cap is not None and new_loads[s] > cap:
            return False
    if check_balance and servers.epsilon is not None:
        values = list(new_loads.values())
        total = sum(values, Fraction(0))
        bound = servers.epsilon_threshold(total)
        if bound is not None and max(values) - min(values) > bound:
            return False
    return True


def update(
    r: ReplicationScheme,
    p: CausalAccessPath,
    t: Optional[int],
    graph: DataGraph,
    servers: ServerSet,
    config: PlannerConfig,
    loads: dict[ServerId, Fraction],
    rm: Optional[ReshardingMap] = None,
) -> Fraction:
    """Extend r so the path meets its bound; commit the cheapest feasible
    candidate. Mutates r (and loads, rm) in place; returns the added cost.

    Subpaths are taken under the sharding function, not the evolving scheme,
    so the committed candidate is latency-robust by construction.
    """
    subpaths = subpaths_under_sharding(p, r.sharding)
    h = len(subpaths) - 1
    if t is None:
        return Fraction(0)
    if h <= t:
        if rm is not None:
            _record_run_colocations(p, subpaths, r.sharding, rm)
        return Fraction(0)

    check_balance = config.balance_check == "per-candidate"

    def feasible(c: Candidate) -> bool:
        return candidate_feasible(c, servers, loads, graph, check_balance)

    chosen: Optional[Candidate] = None
    if config.two_pass:
        # First pass: cost every candidate. Second pass: in ascending cost
        # order (ties: lexicographically smallest selection), take the first
        # feasible one.
        costed = [
            stage_candidate(sel, p, r, subpaths, graph)
            for sel in enumerate_candidates(h, t)
        ]
        costed.sort(key=lambda c: (c.cost, c.selected))
        for c in costed:
            if feasible(c):
                chosen = c
                break
    else:
        for sel in enumerate_candidates(h, t):
            c = stage_candidate(sel, p, r, subpaths, graph)
            if not feasible(c):
                continue
            if chosen is None or (c.cost, c.selected) < (chosen.cost, chosen.selected):
                chosen = c

    if chosen is None:
        raise NoSolutionFound(p.query.name, p)

    for v, s in chosen.staged:
        r.add(v, s)
        loads[s] += graph.cost(v)
    if rm is not None:
        for u, v, s in chosen.colocations:
            rm.record_colocation(u, v, s)
        _record_run_colocations(p, subpaths, r.sharding, rm)
    return chosen.cost


def _record_run_colocations(
    p: CausalAccessPath,
    subpaths: list[tuple[int, int]],
    d: ShardingMap,
    rm: ReshardingMap,
):
    """Record that every object in a run is accessed at the server of each
    earlier original in the same run.

    These pairs create no replicas (the objects are co-sharded already), but
    they must be reference-counted: when one of the originals later moves,
    its old copy is retained as a replica and the run-mates follow it, which
    is what keeps satisfied latency bounds satisfied across reshards.
    """
    for start, end in subpaths:
        for xi in range(start, end):
            u = p.nodes[xi]
            s = d[u]
            for yi in range(xi + 1, end):
                rm.record_colocation(u, p.nodes[yi], s)


def greedy_plan(
    graph: DataGraph,
    workload: WorkloadSpec,
    sharding: ShardingMap,
    servers: ServerSet,
    config: Optional[PlannerConfig] = None,
) -> tuple[ReplicationScheme, ReshardingMap, PlanReport]:
    """Run the greedy planner over every path of every query."""
    config = config or PlannerConfig()
    report = PlanReport()
    r = ReplicationScheme(sharding)
    rm = ReshardingMap()
    loads = all_server_storage(graph, r, servers)
    report.total_original_cost = graph.total_cost()

    t0 = time.perf_counter()
    added = Fraction(0)
    pruned_counts: dict[str, int] = {}
    path_counts: dict[str, int] = {}
    # Pruned paths reuse the replicas staged for their class representative,
    # so their roots must also be associated in the resharding map; otherwise
    # moving the representative's original could garbage-collect copies a
    # sibling root still needs.
    prune_classes: list[tuple[dict, dict]] = []
    try:
        for qt in workload:
            t = qt.effective_bound()
            stream = enumerate_paths(graph, qt)
            if config.prune:
                counted = _counting(stream, qt.name, path_counts)
                reps: dict[tuple, VertexId] = {}
                sibs: dict[tuple, set[VertexId]] = {}
                prune_classes.append((reps, sibs))
                stream = _prune_tracking(counted, sharding, reps, sibs)
            for p in stream:
                pruned_counts[qt.name] = pruned_counts.get(qt.name, 0) + 1
                if not config.prune:
                    path_counts[qt.name] = path_counts.get(qt.name, 0) + 1
                added += update(r, p, t, graph, servers, config, loads, rm)
    except NoSolutionFound as e:
        report.status = "no-solution-found"
        report.failure = str(e)
    for reps, sibs in prune_classes:
        for key, roots in sibs.items():
            rep = reps[key]
            tail = set(key[1])
            shared = sorted(v for v in rm.associated(rep) if v in tail)
            for sib in sorted(roots):
                for v in shared:
                    rm.record_colocation(sib, v, sharding[sib])
    report.timing["plan"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    check = validate_workload(graph, workload, sharding, r, servers)
    report.timing["validate"] = time.perf_counter() - t0
    if report.status == "ok" and not check.ok:
        # Capacity or balance violated by the final scheme (possible in
        # final-only balance mode); surfaced as infeasibility, not silently.
        report.status = "no-solution-found"
        report.failure = "final validation: storage or balance constraint violated"

    report.total_added_cost = added
    if report.total_original_cost > 0:
        report.replication_overhead = added / report.total_original_cost
    total = sum(check.storage.values(), Fraction(0))
    for s in servers.servers:
        st = check.storage[s]
        report.per_server[s] = PerServerReport(
            st, servers.capacity(s), st / total if total else Fraction(0)
        )
    report.imbalance = check.imbalance
    for qc in check.per_query:
        report.per_query.append(
            PerQueryReport(
                qc.name,
                qc.bound,
                qc.worst_latency,
                qc.path_count,
                pruned_counts.get(qc.name, 0),
            )
        )
    return r, rm, report


def _counting(stream, name: str, counts: dict[str, int]):
    for p in stream:
        counts[name] = counts.get(name, 0) + 1
        yield p


def _prune_tracking(stream, sharding, reps, siblings):
    """prune_paths, but also record each class representative and the roots
    of the paths pruned in its favor."""
    for p in stream:
        key = (sharding[p.nodes[0]], p.nodes[1:])
        if key in reps:
            if p.nodes[0] != reps[key]:
                siblings.setdefault(key, set()).add(p.nodes[0])
            continue
        reps[key] = p.nodes[0]
        yield p
