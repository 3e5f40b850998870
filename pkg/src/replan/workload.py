"""Query types, causal access path enumeration, and redundant-path pruning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

from .model import DataGraph, FormatError, ShardingMap, VertexId


@dataclass(frozen=True)
class QueryType:
    """One root-to-leaf label pattern of a query, with its latency bound.

    A query written as a tree in the workload file is expanded into several
    QueryTypes sharing the same name, one per root-to-leaf path. latency_bound
    is None for unbounded.
    """

    name: str
    root_label: str
    steps: tuple[tuple[str, str], ...]  # (edge_label, vertex_label)
    latency_bound: Optional[int]

    def effective_bound(self) -> Optional[int]:
        """A bound larger than the path length is equivalent to unbounded."""
        if self.latency_bound is None or self.latency_bound > len(self.steps):
            return None
        return self.latency_bound


WorkloadSpec = list[QueryType]


@dataclass(frozen=True)
class CausalAccessPath:
    """Root-to-leaf sequence of causally-dependent object accesses."""

    query: QueryType
    nodes: tuple[VertexId, ...]


def enumerate_paths(graph: DataGraph, qt: QueryType) -> Iterator[CausalAccessPath]:
    """Yield every path matching the label pattern, lazily.

    Roots are visited in ascending VertexId order and neighbors in
    adjacency-list order, so the stream order is deterministic. Revisiting a
    vertex is allowed; depth is bounded by the pattern length.
    """
    steps = qt.steps

    def expand(prefix: list[VertexId], depth: int) -> Iterator[CausalAccessPath]:
        if depth == len(steps):
            yield CausalAccessPath(qt, tuple(prefix))
            return
        edge_label, vertex_label = steps[depth]
        for e in graph.adj[prefix[-1]]:
            if e.label == edge_label and graph.labels[e.dst] == vertex_label:
                prefix.append(e.dst)
                yield from expand(prefix, depth + 1)
                prefix.pop()

    for root in sorted(graph.vertices):
        if graph.labels[root] == qt.root_label:
            yield from expand([root], 0)


def prune_paths(paths: Iterable[CausalAccessPath], sharding: ShardingMap) -> Iterator[CausalAccessPath]:
    """Drop paths identical to an earlier one except for a co-sharded root.

    Two paths are equivalent when their tails match and their roots are
    sharded to the same server; a scheme feasible for one is feasible for the
    other, so only the first representative is kept.
    """
    seen: set[tuple] = set()
    for p in paths:
        key = (sharding[p.nodes[0]], p.nodes[1:])
        if key in seen:
            continue
        seen.add(key)
        yield p


def load_workload(source: IO) -> WorkloadSpec:
    """Parse the workload file (header '#workload v1')."""
    first = source.readline()
    if isinstance(first, bytes):
        first = first.decode("utf-8")
    if first.strip() != "#workload v1":
        raise FormatError("expected header '#workload v1'", 1)

    spec: WorkloadSpec = []
    names: set[str] = set()
    name: Optional[str] = None
    bound: Optional[int] = None
    bound_set = False
    root: Optional[str] = None
    path_lines: list[tuple[tuple[str, str], ...]] = []

    def flush(no: int):
        nonlocal name, bound, bound_set, root, path_lines
        if name is None:
            return
        if root is None:
            raise FormatError(f"query {name!r} has no root directive", no)
        if not bound_set:
            raise FormatError(f"query {name!r} has no t directive", no)
        if not path_lines:
            # A bare root is a single-access query with no steps.
            path_lines = [()]
        for steps in path_lines:
            spec.append(QueryType(name, root, steps, bound))
        name, bound, bound_set, root, path_lines = None, None, False, None, []

    last_no = 1
    for no, raw in enumerate(source, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        last_no = no
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "Q":
            if len(parts) != 2:
                raise FormatError(f"malformed Q line: {line!r}", no)
            flush(no)
            name = parts[1]
            if name in names:
                raise FormatError(f"duplicate query name {name!r}", no)
            names.add(name)
        elif name is None:
            raise FormatError(f"directive {parts[0]!r} outside a Q block", no)
        elif parts[0] == "t":
            if len(parts) != 2:
                raise FormatError(f"malformed t line: {line!r}", no)
            if parts[1] == "inf":
                bound = None
            else:
                bound = int(parts[1])
                if bound < 0:
                    raise FormatError(f"negative latency bound {bound}", no)
            bound_set = True
        elif parts[0] == "root":
            if len(parts) != 2:
                raise FormatError(f"malformed root line: {line!r}", no)
            root = parts[1]
        elif parts[0] == "path":
            labels = parts[1:]
            if not labels or len(labels) % 2 != 0:
                raise FormatError(f"path needs (edge_label vertex_label) pairs: {line!r}", no)
            steps = tuple(
                (labels[i], labels[i + 1]) for i in range(0, len(labels), 2)
            )
            path_lines.append(steps)
        else:
            raise FormatError(f"unknown directive {parts[0]!r}", no)
    flush(last_no)
    return spec


def save_workload(spec: WorkloadSpec, sink: IO):
    sink.write("#workload v1\n")
    by_name: dict[str, list[QueryType]] = {}
    for qt in spec:
        by_name.setdefault(qt.name, []).append(qt)
    for name, qts in by_name.items():
        sink.write(f"Q {name}\n")
        b = qts[0].latency_bound
        sink.write(f"t {'inf' if b is None else b}\n")
        sink.write(f"root {qts[0].root_label}\n")
        for qt in qts:
            if qt.steps:
                flat = " ".join(f"{e} {v}" for e, v in qt.steps)
                sink.write(f"path {flat}\n")


def group_by_query(spec: WorkloadSpec) -> dict[str, list[QueryType]]:
    """Group the path patterns of each named query."""
    groups: dict[str, list[QueryType]] = {}
    for qt in spec:
        groups.setdefault(qt.name, []).append(qt)
    return groups
