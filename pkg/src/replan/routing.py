"""Thrifty-routing simulator: access locations, latency costs, robustness.

These functions are the ground-truth semantics the planner is verified
against. All are pure over immutable snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .model import (
    DataGraph,
    ReplicationScheme,
    ServerId,
    ServerSet,
    ShardingMap,
    all_server_storage,
)
from .workload import CausalAccessPath, WorkloadSpec, enumerate_paths, group_by_query


def access_locations(p: CausalAccessPath, r: ReplicationScheme, d: ShardingMap) -> list[ServerId]:
    """Where each access of the path lands under thrifty routing.

    The root is accessed at its original server; each later access stays on
    the current server if it holds a copy, otherwise jumps to the original.
    """
    nodes = p.nodes
    out = [d[nodes[0]]]
    for v in nodes[1:]:
        prev = out[-1]
        out.append(prev if r.holds(v, prev) else d[v])
    return out


def path_latency(p: CausalAccessPath, r: ReplicationScheme, d: ShardingMap) -> int:
    """Number of distributed traversals: adjacent access-location changes."""
    locs = access_locations(p, r, d)
    return sum(1 for a, b in zip(locs, locs[1:]) if a != b)


def query_latency(paths: list[CausalAccessPath], r: ReplicationScheme, d: ShardingMap) -> int:
    """Worst latency over the paths of one query."""
    return max((path_latency(p, r, d) for p in paths), default=0)


@dataclass(frozen=True)
class SubpathDecomposition:
    """Maximal constant-location runs of a path, as half-open index ranges."""

    subpaths: tuple[tuple[int, int], ...]

    def latency(self) -> int:
        return len(self.subpaths) - 1


def server_local_subpaths(p: CausalAccessPath, r: ReplicationScheme, d: ShardingMap) -> SubpathDecomposition:
    locs = access_locations(p, r, d)
    ranges: list[tuple[int, int]] = []
    start = 0
    for i in range(1, len(locs)):
        if locs[i] != locs[i - 1]:
            ranges.append((start, i))
            start = i
    ranges.append((start, len(locs)))
    return SubpathDecomposition(tuple(ranges))


def check_robustness(p: CausalAccessPath, r: ReplicationScheme, d: ShardingMap) -> bool:
    """Latency-robustness: within each server-local subpath, every object is
    replicated at the original servers of all its predecessors in the subpath."""
    decomp = server_local_subpaths(p, r, d)
    for start, end in decomp.subpaths:
        for x in range(start, end):
            sx = d[p.nodes[x]]
            for y in range(x + 1, end):
                if not r.holds(p.nodes[y], sx):
                    return False
    return True


@dataclass
class QueryCheck:
    name: str
    bound: Optional[int]
    worst_latency: int
    path_count: int


@dataclass
class ValidationReport:
    per_query: list[QueryCheck] = field(default_factory=list)
    violating_paths: list[tuple[str, tuple[str, ...], int]] = field(default_factory=list)
    violating_path_total: int = 0
    storage: dict[ServerId, Fraction] = field(default_factory=dict)
    imbalance: Fraction = Fraction(0)
    imbalance_bound: Optional[Fraction] = None
    capacity_violations: list[ServerId] = field(default_factory=list)

    @property
    def latency_ok(self) -> bool:
        return self.violating_path_total == 0

    @property
    def ok(self) -> bool:
        return self.latency_ok and not self.capacity_violations and self.balance_ok

    @property
    def balance_ok(self) -> bool:
        return self.imbalance_bound is None or self.imbalance <= self.imbalance_bound


def validate_workload(
    graph: DataGraph,
    workload: WorkloadSpec,
    sharding: ShardingMap,
    r: ReplicationScheme,
    servers: ServerSet,
    violation_cap: int = 100,
) -> ValidationReport:
    """Check every workload path against its bound and the storage constraints.

    Violations are reported as data, not raised; violating-path listings are
    capped to bound memory.
    """
    report = ValidationReport()
    for name, qts in group_by_query(workload).items():
        worst = 0
        count = 0
        bound = qts[0].effective_bound()
        for qt in qts:
            for p in enumerate_paths(graph, qt):
                count += 1
                lat = path_latency(p, r, sharding)
                worst = max(worst, lat)
                if bound is not None and lat > bound:
                    report.violating_path_total += 1
                    if len(report.violating_paths) < violation_cap:
                        report.violating_paths.append((name, p.nodes, lat))
        report.per_query.append(QueryCheck(name, bound, worst, count))

    report.storage = all_server_storage(graph, r, servers)
    loads = list(report.storage.values())
    report.imbalance = max(loads) - min(loads) if loads else Fraction(0)
    total = sum(loads, Fraction(0))
    report.imbalance_bound = servers.epsilon_threshold(total)
    for s in servers.servers:
        cap = servers.capacity(s)
        if cap is not None and report.storage[s] > cap:
            report.capacity_violations.append(s)
    return report
