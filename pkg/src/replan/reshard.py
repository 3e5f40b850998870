"""Resharding map, reference counts, and incremental scheme updates on moves."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

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


@dataclass
class ReshardingMap:
    """Records which replicas were co-located with which originals.

    entries[u] holds the objects v whose replica was placed alongside the
    original of u (which lives at d(u)); ref_counts[(v, s)] counts the
    distinct originals at server s that v is associated with, and drives
    replica garbage collection when originals move.
    """

    entries: dict[VertexId, set[VertexId]] = field(default_factory=dict)
    ref_counts: dict[tuple[VertexId, ServerId], int] = field(default_factory=dict)

    def record_colocation(self, u: VertexId, v: VertexId, s: ServerId):
        """Associate replica v with original u at server s = d(u). Idempotent."""
        vs = self.entries.setdefault(u, set())
        if v in vs:
            return
        vs.add(v)
        self.ref_counts[(v, s)] = self.ref_counts.get((v, s), 0) + 1

    def rc(self, v: VertexId, s: ServerId) -> int:
        return self.ref_counts.get((v, s), 0)

    def associated(self, u: VertexId) -> frozenset[VertexId]:
        return frozenset(self.entries.get(u, ()))


class MoveRejected(Exception):
    def __init__(self, u: VertexId, to: ServerId, reason: str):
        super().__init__(f"move of {u!r} to {to!r} rejected: {reason}")
        self.u = u
        self.to = to


def apply_reshard(
    moves: list[tuple[VertexId, ServerId, ServerId]],
    graph: DataGraph,
    servers: ServerSet,
    r: ReplicationScheme,
    rm: ReshardingMap,
):
    """Relocate originals and carry their associated replicas along.

    Mutates r (including its sharding map) and rm in place, under exclusive
    access. A move that would overflow the destination capacity raises
    MoveRejected before any of its effects are applied.
    """
    d = r.sharding
    for u, frm, to in moves:
        if u not in graph.labels:
            raise ValueError(f"unknown vertex {u!r} in move")
        if to not in servers.servers:
            raise ValueError(f"unknown server {to!r} in move")
        if d[u] != frm:
            raise ValueError(f"move of {u!r}: original is at {d[u]!r}, not {frm!r}")
        if frm == to:
            continue

        cap = servers.capacity(to)
        if cap is not None:
            added = graph.cost(u) if not r.holds(u, to) else 0
            for v in rm.associated(u):
                if not r.holds(v, to):
                    added += graph.cost(v)
            load = all_server_storage(graph, r, servers)[to]
            if load + added > cap:
                raise MoveRejected(u, to, "destination capacity exceeded")

        r._relocate_original(u, to)
        if rm.rc(u, frm) < 1:
            r._remove(u, frm)
        for v in sorted(rm.associated(u)):
            # Transfer the associated replica unless a copy is already at to;
            # counts are updated either way so later moves stay consistent.
            r.add(v, to)
            rm.ref_counts[(v, to)] = rm.rc(v, to) + 1
            rm.ref_counts[(v, frm)] = rm.rc(v, frm) - 1
            if rm.rc(v, frm) < 1 and frm != d[v]:
                r._remove(v, frm)


def load_moves(source: IO) -> list[tuple[VertexId, ServerId, ServerId]]:
    first = source.readline()
    if isinstance(first, bytes):
        first = first.decode("utf-8")
    if first.strip() != "#moves v1":
        raise FormatError("expected header '#moves v1'", 1)
    moves = []
    for no, raw in enumerate(source, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"malformed move line: {line!r}", no)
        moves.append((parts[0], parts[1], parts[2]))
    return moves


def load_rmap(source: IO) -> ReshardingMap:
    first = source.readline()
    if isinstance(first, bytes):
        first = first.decode("utf-8")
    if first.strip() != "#rmap v1":
        raise FormatError("expected header '#rmap v1'", 1)
    rm = ReshardingMap()
    for no, raw in enumerate(source, start=2):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "RC":
            if len(parts) != 4:
                raise FormatError(f"malformed RC line: {line!r}", no)
            rm.ref_counts[(parts[1], parts[2])] = int(parts[3])
        elif len(parts) == 2:
            rm.entries.setdefault(parts[0], set()).add(parts[1])
        else:
            raise FormatError(f"malformed rmap line: {line!r}", no)
    return rm


def save_rmap(rm: ReshardingMap, sink: IO):
    sink.write("#rmap v1\n")
    for u in sorted(rm.entries):
        for v in sorted(rm.entries[u]):
            sink.write(f"{u} {v}\n")
    for (v, s), count in sorted(rm.ref_counts.items()):
        if count > 0:
            sink.write(f"RC {v} {s} {count}\n")
