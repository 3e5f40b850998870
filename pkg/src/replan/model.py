"""Core data model: graph, servers, sharding, and replication schemes.

Storage costs and capacities are exact rationals (fractions.Fraction) so that
cost comparisons and candidate tie-breaks are deterministic across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Optional

VertexId = str
ServerId = str

UNBOUNDED: Optional[Fraction] = None


class FormatError(ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def parse_rational(tok: str) -> Fraction:
    """Parse an exact rational: integer, decimal, or 'p/q'."""
    tok = tok.strip()
    if "/" in tok:
        num, den = tok.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(tok)


def format_rational(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Edge:
    label: str
    dst: VertexId


@dataclass
class DataGraph:
    """Labeled directed graph; each vertex carries a storage cost f(v)."""

    labels: dict[VertexId, str] = field(default_factory=dict)
    costs: dict[VertexId, Fraction] = field(default_factory=dict)
    adj: dict[VertexId, list[Edge]] = field(default_factory=dict)

    def add_vertex(self, vid: VertexId, label: str, cost: Fraction = Fraction(1)):
        if vid in self.labels:
            raise ValueError(f"duplicate vertex id {vid!r}")
        if cost < 0:
            raise ValueError(f"negative storage cost for {vid!r}")
        self.labels[vid] = label
        self.costs[vid] = cost
        self.adj[vid] = []

    def add_edge(self, src: VertexId, label: str, dst: VertexId):
        if src not in self.labels:
            raise ValueError(f"edge source {src!r} is not a declared vertex")
        if dst not in self.labels:
            raise ValueError(f"edge destination {dst!r} is not a declared vertex")
        self.adj[src].append(Edge(label, dst))

    @property
    def vertices(self) -> Iterable[VertexId]:
        return self.labels.keys()

    def cost(self, vid: VertexId) -> Fraction:
        return self.costs[vid]

    def total_cost(self) -> Fraction:
        return sum(self.costs.values(), Fraction(0))

    def num_edges(self) -> int:
        return sum(len(es) for es in self.adj.values())


@dataclass
class ServerSet:
    """Ordered server list with capacities and the load-imbalance bound."""

    servers: list[ServerId]
    capacities: dict[ServerId, Optional[Fraction]] = field(default_factory=dict)
    # ("abs", x) bounds pairwise load difference by x; ("rel", x) by x * mean load.
    # None means unbounded.
    epsilon: Optional[tuple[str, Fraction]] = None
    # False when the server file carried no epsilon directive; lets the CLI
    # apply its default without clobbering an explicit "epsilon abs inf".
    epsilon_given: bool = True

    def __post_init__(self):
        if not self.servers:
            raise ValueError("at least one server is required")
        if len(set(self.servers)) != len(self.servers):
            raise ValueError("duplicate server ids")
        for s in self.servers:
            self.capacities.setdefault(s, UNBOUNDED)
            cap = self.capacities[s]
            if cap is not None and cap < 0:
                raise ValueError(f"negative capacity for server {s!r}")

    def capacity(self, s: ServerId) -> Optional[Fraction]:
        return self.capacities.get(s, UNBOUNDED)

    def epsilon_threshold(self, total_load: Fraction) -> Optional[Fraction]:
        """Absolute pairwise-difference bound, resolving the relative mode."""
        if self.epsilon is None:
            return None
        mode, value = self.epsilon
        if mode == "abs":
            return value
        return value * total_load / len(self.servers)


@dataclass
class ShardingMap:
    """The sharding function d: every vertex to exactly one server."""

    assignment: dict[VertexId, ServerId]

    def __getitem__(self, vid: VertexId) -> ServerId:
        return self.assignment[vid]

    def validate(self, graph: DataGraph, servers: ServerSet):
        known = set(servers.servers)
        for vid in graph.vertices:
            if vid not in self.assignment:
                raise ValueError(f"map not total: vertex {vid!r} unassigned")
            if self.assignment[vid] not in known:
                raise ValueError(f"unknown server {self.assignment[vid]!r} for {vid!r}")
        for vid in self.assignment:
            if vid not in graph.labels:
                raise ValueError(f"unknown vertex {vid!r} in sharding map")


class ReplicationScheme:
    """Maps each vertex to its copy set; always contains the original server.

    Additions are monotone; only the reshard module may remove copies.
    """

    def __init__(self, sharding: ShardingMap):
        self._sharding = sharding
        self._copies: dict[VertexId, set[ServerId]] = {
            v: {s} for v, s in sharding.assignment.items()
        }

    @property
    def sharding(self) -> ShardingMap:
        return self._sharding

    def copies(self, vid: VertexId) -> frozenset[ServerId]:
        return frozenset(self._copies[vid])

    def holds(self, vid: VertexId, s: ServerId) -> bool:
        return s in self._copies[vid]

    def add(self, vid: VertexId, s: ServerId) -> bool:
        """Add a replica; returns True if it was not present."""
        cs = self._copies[vid]
        if s in cs:
            return False
        cs.add(s)
        return True

    def _remove(self, vid: VertexId, s: ServerId):
        """Reshard-module only: drop a replica copy, never the original."""
        if s == self._sharding[vid]:
            raise ValueError(f"cannot remove original copy of {vid!r} from {s!r}")
        self._copies[vid].discard(s)

    def _relocate_original(self, vid: VertexId, to: ServerId):
        """Reshard-module only: record that the original of vid now lives on to."""
        self._sharding.assignment[vid] = to
        self._copies[vid].add(to)

    def items(self):
        return self._copies.items()

    def replica_count(self) -> int:
        """Number of added copies beyond the originals."""
        return sum(len(cs) - 1 for cs in self._copies.values())

    def copy(self) -> "ReplicationScheme":
        dup = ReplicationScheme(ShardingMap(dict(self._sharding.assignment)))
        dup._copies = {v: set(cs) for v, cs in self._copies.items()}
        return dup

    def validate(self, graph: DataGraph):
        for vid in graph.vertices:
            if self._sharding[vid] not in self._copies[vid]:
                raise ValueError(f"original missing: {vid!r} lacks its home server")


def server_storage(graph: DataGraph, scheme: ReplicationScheme, server: ServerId) -> Fraction:
    """Total storage cost of a server: sum of f(v) over v it holds a copy of."""
    return sum(
        (graph.cost(v) for v, cs in scheme.items() if server in cs),
        Fraction(0),
    )


def all_server_storage(graph: DataGraph, scheme: ReplicationScheme, servers: ServerSet) -> dict[ServerId, Fraction]:
    loads = {s: Fraction(0) for s in servers.servers}
    for v, cs in scheme.items():
        c = graph.cost(v)
        for s in cs:
            loads[s] += c
    return loads


# --- hash sharding ---------------------------------------------------------

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def vertex_bucket(vid: VertexId, seed: int, n: int) -> int:
    """Bucket index for a vertex: FNV-1a of the id, finalized by splitmix64."""
    return _splitmix64(_fnv1a64(vid.encode("utf-8")) ^ (seed & _MASK)) % n


def hash_shard(graph: DataGraph, servers: ServerSet, seed: int) -> ShardingMap:
    """Deterministic hash partitioning of vertices onto the server list."""
    n = len(servers.servers)
    return ShardingMap(
        {v: servers.servers[vertex_bucket(v, seed, n)] for v in graph.vertices}
    )


# --- file formats ----------------------------------------------------------

def _lines(source: IO) -> Iterable[tuple[int, str]]:
    # The caller has already consumed the header line.
    for no, raw in enumerate(source, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield no, line


def _check_header(source: IO, expected: str):
    first = source.readline()
    if isinstance(first, bytes):
        first = first.decode("utf-8")
    if first.strip() != expected:
        raise FormatError(f"expected header {expected!r}", 1)


def load_graph(source: IO) -> DataGraph:
    """Parse the line-oriented graph format (header '#graph v1')."""
    _check_header(source, "#graph v1")
    g = DataGraph()
    edges: list[tuple[int, str, str, str]] = []
    for no, line in _lines(source):
        parts = line.split()
        if parts[0] == "V":
            if len(parts) not in (3, 4):
                raise FormatError(f"malformed vertex line: {line!r}", no)
            _, vid, label = parts[:3]
            cost = Fraction(1)
            if len(parts) == 4:
                try:
                    cost = parse_rational(parts[3])
                except (ValueError, ZeroDivisionError):
                    raise FormatError(f"bad cost {parts[3]!r}", no)
            try:
                g.add_vertex(vid, label, cost)
            except ValueError as e:
                raise FormatError(str(e), no)
        elif parts[0] == "E":
            if len(parts) != 4:
                raise FormatError(f"malformed edge line: {line!r}", no)
            edges.append((no, parts[1], parts[2], parts[3]))
        else:
            raise FormatError(f"unknown directive {parts[0]!r}", no)
    for no, src, label, dst in edges:
        try:
            g.add_edge(src, label, dst)
        except ValueError as e:
            raise FormatError(str(e), no)
    return g


def save_graph(graph: DataGraph, sink: IO):
    sink.write("#graph v1\n")
    for vid in sorted(graph.labels):
        sink.write(f"V {vid} {graph.labels[vid]} {format_rational(graph.costs[vid])}\n")
    for vid in sorted(graph.labels):
        for e in graph.adj[vid]:
            sink.write(f"E {vid} {e.label} {e.dst}\n")


def load_servers(source: IO) -> ServerSet:
    """Parse the server file (header '#servers v1')."""
    _check_header(source, "#servers v1")
    servers: list[ServerId] = []
    caps: dict[ServerId, Optional[Fraction]] = {}
    epsilon: Optional[tuple[str, Fraction]] = None
    epsilon_given = False
    for no, line in _lines(source):
        parts = line.split()
        if parts[0] == "epsilon":
            if len(parts) != 3 or parts[1] not in ("abs", "rel"):
                raise FormatError(f"malformed epsilon directive: {line!r}", no)
            if parts[2] == "inf":
                epsilon = None
            else:
                epsilon = (parts[1], parse_rational(parts[2]))
            epsilon_given = True
            continue
        if len(parts) not in (1, 2):
            raise FormatError(f"malformed server line: {line!r}", no)
        sid = parts[0]
        if sid in caps:
            raise FormatError(f"duplicate server id {sid!r}", no)
        cap: Optional[Fraction] = UNBOUNDED
        if len(parts) == 2 and parts[1] != "inf":
            cap = parse_rational(parts[1])
        servers.append(sid)
        caps[sid] = cap
    try:
        return ServerSet(servers, caps, epsilon, epsilon_given)
    except ValueError as e:
        raise FormatError(str(e))


def save_servers(servers: ServerSet, sink: IO):
    sink.write("#servers v1\n")
    for s in servers.servers:
        cap = servers.capacities[s]
        if cap is None:
            sink.write(f"{s}\n")
        else:
            sink.write(f"{s} {format_rational(cap)}\n")
    if servers.epsilon is None:
        sink.write("epsilon abs inf\n")
    else:
        mode, value = servers.epsilon
        sink.write(f"epsilon {mode} {format_rational(value)}\n")


def load_sharding(source: IO, graph: DataGraph, servers: ServerSet) -> ShardingMap:
    """Parse a sharding file and validate totality over the graph."""
    _check_header(source, "#shard v1")
    known = set(servers.servers)
    assignment: dict[VertexId, ServerId] = {}
    for no, line in _lines(source):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"malformed sharding line: {line!r}", no)
        vid, sid = parts
        if vid not in graph.labels:
            raise FormatError(f"unknown vertex {vid!r}", no)
        if sid not in known:
            raise FormatError(f"unknown server {sid!r}", no)
        if vid in assignment:
            raise FormatError(f"duplicate assignment for {vid!r}", no)
        assignment[vid] = sid
    for vid in graph.vertices:
        if vid not in assignment:
            raise FormatError(f"map not total: vertex {vid!r} unassigned")
    return ShardingMap(assignment)


def save_sharding(sharding: ShardingMap, sink: IO):
    sink.write("#shard v1\n")
    for vid in sorted(sharding.assignment):
        sink.write(f"{vid} {sharding.assignment[vid]}\n")


def load_scheme(source: IO, graph: DataGraph, servers: ServerSet, sharding: ShardingMap) -> ReplicationScheme:
    """Parse a replication scheme file; each line lists a vertex's full copy set."""
    _check_header(source, "#scheme v1")
    known = set(servers.servers)
    scheme = ReplicationScheme(sharding)
    seen: set[VertexId] = set()
    for no, line in _lines(source):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"malformed scheme line: {line!r}", no)
        vid = parts[0]
        if vid not in graph.labels:
            raise FormatError(f"unknown vertex {vid!r}", no)
        if vid in seen:
            raise FormatError(f"duplicate scheme line for {vid!r}", no)
        seen.add(vid)
        copy_set = parts[1].split(",")
        for s in copy_set:
            if s not in known:
                raise FormatError(f"unknown server {s!r}", no)
        if sharding[vid] not in copy_set:
            raise FormatError(f"original missing: {vid!r} copy set lacks {sharding[vid]!r}", no)
        for s in copy_set:
            scheme.add(vid, s)
    return scheme


def save_scheme(scheme: ReplicationScheme, sink: IO):
    sink.write("#scheme v1\n")
    for vid in sorted(dict(scheme.items())):
        cs = ",".join(sorted(scheme.copies(vid)))
        sink.write(f"{vid} {cs}\n")
