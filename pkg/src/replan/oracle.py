"""Brute-force ground truth at desk scale.

Exhaustive optimal replication, feasibility checks, min-bridge bisection, and
the two hardness-reduction constructions used as instance generators and
cross-checking oracles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Optional

from .model import (
    DataGraph,
    FormatError,
    ReplicationScheme,
    ServerId,
    ServerSet,
    ShardingMap,
    VertexId,
    all_server_storage,
)
from .routing import access_locations, path_latency
from .workload import (
    CausalAccessPath,
    QueryType,
    WorkloadSpec,
    enumerate_paths,
    group_by_query,
)


class BudgetError(ValueError):
    """Instance exceeds the enumeration budget of a brute-force oracle."""


@dataclass
class ProblemInstance:
    graph: DataGraph
    servers: ServerSet
    sharding: ShardingMap
    workload: WorkloadSpec


def _materialize_paths(inst: ProblemInstance, t_override) -> list[tuple[CausalAccessPath, Optional[int]]]:
    out = []
    for qt in inst.workload:
        bound = qt.effective_bound() if t_override == "keep" else t_override
        for p in enumerate_paths(inst.graph, qt):
            out.append((p, bound))
    return out


def _scheme_from_mask(inst: ProblemInstance, pairs, mask: int) -> ReplicationScheme:
    r = ReplicationScheme(inst.sharding)
    for idx, (v, s) in enumerate(pairs):
        if mask >> idx & 1:
            r.add(v, s)
    return r


def _constraints_ok(inst: ProblemInstance, r: ReplicationScheme, paths) -> bool:
    for p, bound in paths:
        if bound is not None and path_latency(p, r, inst.sharding) > bound:
            return False
    loads = all_server_storage(inst.graph, r, inst.servers)
    for s in inst.servers.servers:
        cap = inst.servers.capacity(s)
        if cap is not None and loads[s] > cap:
            return False
    values = list(loads.values())
    total = sum(values, Fraction(0))
    eps = inst.servers.epsilon_threshold(total)
    if eps is not None and max(values) - min(values) > eps:
        return False
    return True


def brute_force_optimal(
    inst: ProblemInstance, t_override="keep"
) -> Optional[tuple[ReplicationScheme, Fraction]]:
    """Exhaustively search all replica subsets for a minimal-storage feasible
    scheme. Returns (scheme, total storage) or None if no scheme is feasible.

    t_override replaces every query bound when not "keep" (None = unbounded).
    """
    pairs = [
        (v, s)
        for v in sorted(inst.graph.vertices)
        for s in inst.servers.servers
        if s != inst.sharding[v]
    ]
    if len(pairs) > 20:
        raise BudgetError(
            f"{len(pairs)} replica slots exceed the enumeration budget of 20"
        )
    paths = _materialize_paths(inst, t_override)
    costs = [inst.graph.cost(v) for v, _ in pairs]
    base = inst.graph.total_cost()

    masks = sorted(
        range(1 << len(pairs)),
        key=lambda m: (
            sum((costs[i] for i in range(len(pairs)) if m >> i & 1), Fraction(0)),
            m,
        ),
    )
    for mask in masks:
        r = _scheme_from_mask(inst, pairs, mask)
        if _constraints_ok(inst, r, paths):
            added = sum(
                (costs[i] for i in range(len(pairs)) if mask >> i & 1), Fraction(0)
            )
            return r, base + added
    return None


def brute_force_feasible(inst: ProblemInstance, t_override="keep") -> bool:
    return brute_force_optimal(inst, t_override) is not None


def verify_upward(
    inst: ProblemInstance, r: ReplicationScheme
) -> bool:
    """Check the structure an optimal scheme must have: every non-original
    access is co-located with its parent's access, and every replica copy is
    the access location of its object in at least one workload path."""
    d = inst.sharding
    used: set[tuple[VertexId, ServerId]] = set()
    for qt in inst.workload:
        for p in enumerate_paths(inst.graph, qt):
            locs = access_locations(p, r, d)
            for i in range(1, len(locs)):
                if locs[i] != d[p.nodes[i]] and locs[i] != locs[i - 1]:
                    return False
                used.add((p.nodes[i], locs[i]))
            used.add((p.nodes[0], locs[0]))
    for v, copies in r.items():
        for s in copies:
            if s != d[v] and (v, s) not in used:
                return False
    return True


def feasible_bound_zero_free_root(inst: ProblemInstance) -> bool:
    """Feasibility of an all-bound-zero workload when a query may start at any
    server holding a copy of its root.

    With a zero bound, a query instance is satisfied exactly when some single
    server holds copies of every object it accesses, so feasibility reduces to
    assigning each query instance a home server without exceeding capacities.
    Searched exhaustively with load pruning.
    """
    for qt in inst.workload:
        if qt.effective_bound() != 0:
            raise ValueError("free-root feasibility oracle requires all bounds = 0")

    # One unit per (query name, root vertex): the object set it needs local.
    units: dict[tuple[str, VertexId], set[VertexId]] = {}
    for qt in inst.workload:
        for p in enumerate_paths(inst.graph, qt):
            units.setdefault((qt.name, p.nodes[0]), set()).update(p.nodes)
    unit_sets = [frozenset(objs) for _, objs in sorted(units.items())]

    servers = inst.servers.servers
    if len(unit_sets) > 12 and len(servers) ** len(unit_sets) > 4_000_000:
        raise BudgetError("too many query instances for exhaustive assignment")

    d = inst.sharding
    base = {
        s: sum(
            (inst.graph.cost(v) for v in inst.graph.vertices if d[v] == s),
            Fraction(0),
        )
        for s in servers
    }
    caps = {s: inst.servers.capacity(s) for s in servers}
    held: dict[ServerId, set[VertexId]] = {s: {v for v in inst.graph.vertices if d[v] == s} for s in servers}
    loads = dict(base)

    def assign(idx: int) -> bool:
        if idx == len(unit_sets):
            return True
        objs = unit_sets[idx]
        for s in servers:
            new = [v for v in objs if v not in held[s]]
            extra = sum((inst.graph.cost(v) for v in new), Fraction(0))
            cap = caps[s]
            if cap is not None and loads[s] + extra > cap:
                continue
            for v in new:
                held[s].add(v)
            loads[s] += extra
            if assign(idx + 1):
                return True
            for v in new:
                held[s].remove(v)
            loads[s] -= extra
        return False

    return assign(0)


# --- undirected graphs and bisections --------------------------------------

@dataclass
class UndirectedGraph:
    vertices: list[str] = field(default_factory=list)
    adj: dict[str, set[str]] = field(default_factory=dict)

    def add_vertex(self, v: str):
        if v not in self.adj:
            self.vertices.append(v)
            self.adj[v] = set()

    def add_edge(self, u: str, v: str):
        if u == v:
            raise ValueError("self-loops not allowed")
        self.add_vertex(u)
        self.add_vertex(v)
        self.adj[u].add(v)
        self.adj[v].add(u)

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for u in self.vertices:
            for v in self.adj[u]:
                if u < v:
                    out.append((u, v))
        return out

    def degree(self, v: str) -> int:
        return len(self.adj[v])

    def is_regular(self, k: int) -> bool:
        return all(self.degree(v) == k for v in self.vertices)

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)


@dataclass
class Bisection:
    side1: frozenset[str]
    side2: frozenset[str]


def bridge_counts(g: UndirectedGraph, side1: frozenset[str]) -> tuple[int, int]:
    """Vertices per side with at least one neighbor across the cut."""
    side2 = set(g.vertices) - side1
    b1 = sum(1 for v in side1 if g.adj[v] & side2)
    b2 = sum(1 for v in side2 if any(w in side1 for w in g.adj[v]))
    return b1, b2


def cut_size(g: UndirectedGraph, side1: frozenset[str]) -> int:
    return sum(1 for u, v in g.edges() if (u in side1) != (v in side1))


def _bisections(g: UndirectedGraph):
    verts = g.vertices
    n2 = len(verts)
    if n2 % 2 != 0:
        raise ValueError("bisection requires an even vertex count")
    first, rest = verts[0], verts[1:]
    for combo in itertools.combinations(rest, n2 // 2 - 1):
        yield frozenset((first,) + combo)


def min_bridge_bisection_bf(g: UndirectedGraph, k: int) -> Optional[Bisection]:
    """A balanced bisection with at most k bridge vertices per side, or None."""
    if len(g.vertices) > 14:
        raise BudgetError("graph too large for exhaustive bisection")
    for side1 in _bisections(g):
        b1, b2 = bridge_counts(g, side1)
        if b1 <= k and b2 <= k:
            return Bisection(side1, frozenset(set(g.vertices) - side1))
    return None


def min_bisection_cut_bf(g: UndirectedGraph) -> int:
    """Minimum cut size over all balanced bisections."""
    if len(g.vertices) > 14:
        raise BudgetError("graph too large for exhaustive bisection")
    return min(cut_size(g, side1) for side1 in _bisections(g))


def min_max_bridge_bf(g: UndirectedGraph) -> int:
    """Minimum over balanced bisections of the larger per-side bridge count."""
    if len(g.vertices) > 18:
        raise BudgetError("graph too large for exhaustive bisection")
    return min(max(bridge_counts(g, side1)) for side1 in _bisections(g))


# --- hardness-reduction constructions --------------------------------------

def reduce_bridge_to_replication(g: UndirectedGraph, k: int) -> ProblemInstance:
    """Build the 4-server replication instance whose feasibility matches the
    min-bridge bisection question on g with parameter k.

    Each graph vertex contributes a marker object (cost 1) and a regular
    object (cost 1/(2n)); each marker roots a bound-0 query over the regular
    object and its neighbors' regular objects. Markers are split across the
    first two servers, regulars crosswise, so the first two servers start
    exactly at capacity and all replication is forced onto the spare pair.
    """
    verts = sorted(g.vertices)
    if len(verts) % 2 != 0:
        raise ValueError("the source graph needs an even vertex count")
    n = len(verts) // 2
    half = Fraction(1, 2)
    reg_cost = Fraction(1, 2 * n)

    dg = DataGraph()
    for v in verts:
        dg.add_vertex(f"m_{v}", f"m_{v}", Fraction(1))
        dg.add_vertex(f"o_{v}", f"o_{v}", reg_cost)
    for v in verts:
        dg.add_edge(f"m_{v}", "c", f"o_{v}")
        for u in sorted(g.adj[v]):
            dg.add_edge(f"o_{v}", "n", f"o_{u}")

    servers = ServerSet(
        ["s1", "s2", "s3", "s4"],
        {
            "s1": n + half,
            "s2": n + half,
            "s3": n + half + Fraction(k, 2 * n),
            "s4": n + half + Fraction(k, 2 * n),
        },
        epsilon=None,
    )

    assignment: dict[VertexId, ServerId] = {}
    for i, v in enumerate(verts):
        marker_home = "s1" if i < n else "s2"
        regular_home = "s2" if i < n else "s1"
        assignment[f"m_{v}"] = marker_home
        assignment[f"o_{v}"] = regular_home
    sharding = ShardingMap(assignment)

    workload: WorkloadSpec = []
    for v in verts:
        name = f"q_{v}"
        neighbors = sorted(g.adj[v])
        if not neighbors:
            workload.append(QueryType(name, f"m_{v}", (("c", f"o_{v}"),), 0))
        for u in neighbors:
            workload.append(
                QueryType(name, f"m_{v}", (("c", f"o_{v}"), ("n", f"o_{u}")), 0)
            )
    return ProblemInstance(dg, servers, sharding, workload)


def triple_gadget(g: UndirectedGraph) -> UndirectedGraph:
    """Replace each vertex of a 3-regular graph by a triangle of three copies
    and route each original edge between spare copy slots. The result is
    3-regular with three times the vertices."""
    if not g.is_regular(3):
        raise ValueError("triple gadget requires a 3-regular graph")
    h = UndirectedGraph()
    free: dict[str, list[str]] = {}
    for v in g.vertices:
        copies = [f"{v}.1", f"{v}.2", f"{v}.3"]
        for c in copies:
            h.add_vertex(c)
        h.add_edge(copies[0], copies[1])
        h.add_edge(copies[1], copies[2])
        h.add_edge(copies[0], copies[2])
        free[v] = list(copies)
    for u, v in g.edges():
        h.add_edge(free[u].pop(), free[v].pop())
    return h


# --- undirected graph file format ------------------------------------------

def load_ugraph(source: IO) -> UndirectedGraph:
    first = source.readline()
    if isinstance(first, bytes):
        first = first.decode("utf-8")
    if first.strip() != "#ugraph v1":
        raise FormatError("expected header '#ugraph v1'", 1)
    g = UndirectedGraph()
    for no, raw in enumerate(source, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            g.add_vertex(parts[0])
        elif len(parts) == 2:
            g.add_edge(parts[0], parts[1])
        else:
            raise FormatError(f"malformed ugraph line: {line!r}", no)
    return g


def save_ugraph(g: UndirectedGraph, sink: IO):
    sink.write("#ugraph v1\n")
    isolated = [v for v in g.vertices if not g.adj[v]]
    for v in isolated:
        sink.write(f"{v}\n")
    for u, v in sorted(g.edges()):
        sink.write(f"{u} {v}\n")
