"""Shortest-path and greedy geographic routing with virtual-node route repair.

Shortest-path tables point every node at the sink. With power awareness on,
danger-zone nodes never relay and paths are ranked by (critical-zone relays,
hop count). Each route entry remembers, for the path it describes, the
off-path neighbors able to stand in for a path node (virtual nodes). When a
next hop disappears the upstream node splices a virtual node in locally; only
when none exists does an error travel back to the source, which floods a new
route request.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from rtsim.scheduling import Metric
from rtsim.topology import PowerZone, Topology


class Phase(Enum):
    RREQ = "RReq"
    RRPR = "RRpr"
    ERR = "Err"


class RouteFailure(RuntimeError):
    """No route from a node to the sink."""


@dataclass(frozen=True)
class VirtualNodeEntry:
    vn: int
    protects: int
    battery_zone: PowerZone


@dataclass
class RouteEntry:
    destination: int
    next_hop: int
    hop_count: int
    euclidean_to_sink: float
    path: list[int] = field(default_factory=list)
    virtual_nodes: list[VirtualNodeEntry] = field(default_factory=list)


@dataclass(frozen=True)
class RepairMessage:
    phase: Phase
    origin: int
    target: int
    path_so_far: tuple[int, ...]
    seq: int


@dataclass
class RepairOutcome:
    success: bool
    phase: Phase
    messages: int
    path: list[int] = field(default_factory=list)
    vn: Optional[int] = None


def bfs_distances(topology: Topology, sink: int,
                  relay_ok: Optional[Sequence[bool]] = None) -> dict[int, int]:
    """Hop distance to ``sink`` for every node that can reach it.

    ``relay_ok[v]`` False keeps ``v`` from relaying traffic; it may still be
    an endpoint.
    """
    nodes = topology.nodes
    if not nodes[sink].usable:
        return {}
    dist = {sink: 0}
    frontier = deque([sink])
    while frontier:
        v = frontier.popleft()
        if v != sink and relay_ok is not None and not relay_ok[v]:
            continue
        for u in topology.neighbors[v]:
            if u not in dist and nodes[u].usable:
                dist[u] = dist[v] + 1
                frontier.append(u)
    return dist


def _relay_ok(topology: Topology, power_aware: bool) -> list[bool]:
    return [n.usable and not (power_aware and n.zone is PowerZone.DANGER)
            for n in topology.nodes]


def path_costs(topology: Topology, sink: int, power_aware: bool = True
               ) -> tuple[dict[int, tuple[int, int]], dict[int, int]]:
    """Lexicographic (critical relays, hops) cost to the sink and the chosen next hop.

    Without power awareness the critical count is always 0, so this reduces
    to breadth-first hop distance. Ties go to the lowest next-hop id.
    """
    nodes = topology.nodes
    relay_ok = _relay_ok(topology, power_aware)
    cost: dict[int, tuple[int, int]] = {}
    if not nodes[sink].usable:
        return cost, {}

    def weight(u: int) -> int:
        return int(power_aware and nodes[u].zone is PowerZone.CRITICAL)

    cost[sink] = (0, 0)
    heap = [(0, 0, sink)]
    done = set()
    while heap:
        crit, hops, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v != sink and not relay_ok[v]:
            continue
        for u in topology.neighbors[v]:
            if not nodes[u].usable or u in done:
                continue
            cand = (crit + weight(u), hops + 1)
            if u not in cost or cand < cost[u]:
                cost[u] = cand
                heapq.heappush(heap, (cand[0], cand[1], u))
    nxt: dict[int, int] = {}
    for u, (crit, hops) in cost.items():
        if u == sink:
            continue
        for v in topology.neighbors[u]:
            if v in cost and (v == sink or relay_ok[v]):
                if (cost[v][0] + weight(u), cost[v][1] + 1) == (crit, hops):
                    nxt[u] = v
                    break
    return cost, nxt


def follow(next_hops: Sequence[Optional[int]], start: int, sink: int,
           limit: Optional[int] = None) -> list[int]:
    """Walk next-hop pointers from ``start``; empty list on a dead end or loop."""
    limit = len(next_hops) + 1 if limit is None else limit
    path = [start]
    seen = {start}
    node = start
    while node != sink:
        node = next_hops[node]
        if node is None or node in seen or len(path) > limit:
            return []
        path.append(node)
        seen.add(node)
    return path


def select_virtual_nodes(path: Sequence[int], topology: Topology) -> list[VirtualNodeEntry]:
    """Off-path stand-ins, one hop from each protected path node.

    An interior node may be replaced by any live off-path node adjacent to both
    its predecessor and successor. An endpoint's stand-in must neighbor the
    endpoint and its single path neighbor. Per protected node, candidates are
    ordered best battery zone first, then lowest id.
    """
    on_path = set(path)
    nodes = topology.nodes
    entries: list[VirtualNodeEntry] = []
    if len(path) < 2:
        return entries
    for idx, p in enumerate(path):
        if idx == 0:
            anchors = (p, path[1])
        elif idx == len(path) - 1:
            anchors = (path[idx - 1], p)
        else:
            anchors = (path[idx - 1], path[idx + 1])
        a, b = anchors
        cands = [v for v in topology.neighbors[a]
                 if v not in on_path and nodes[v].usable and topology.is_neighbor(v, b)]
        cands.sort(key=lambda v: (nodes[v].zone, v))
        entries.extend(VirtualNodeEntry(v, p, nodes[v].zone) for v in cands)
    return entries


def build_sp_routes(topology: Topology, sink: Optional[int] = None,
                    power_aware: bool = True, with_vn: bool = True
                    ) -> list[Optional[RouteEntry]]:
    sink = topology.sink if sink is None else sink
    cost, nxt = path_costs(topology, sink, power_aware)
    next_hops: list[Optional[int]] = [None] * len(topology)
    for u, v in nxt.items():
        next_hops[u] = v
    return _tables_from(topology, sink, next_hops, with_vn)


def _tables_from(topology: Topology, sink: int, next_hops: Sequence[Optional[int]],
                 with_vn: bool) -> list[Optional[RouteEntry]]:
    tables: list[Optional[RouteEntry]] = [None] * len(topology)
    for u in range(len(topology)):
        if u == sink or next_hops[u] is None:
            continue
        path = follow(next_hops, u, sink)
        if not path:
            continue
        tables[u] = RouteEntry(sink, path[1], len(path) - 1, topology.distance(u, sink), path,
                               select_virtual_nodes(path, topology) if with_vn else [])
    return tables


def gf_next_hop(current: int, sink: int, topology: Topology, power_aware: bool = True,
                exclude: Iterable[int] = ()) -> Optional[int]:
    """Live neighbor making the most strict progress toward the sink, or None (void)."""
    nodes = topology.nodes
    here = topology.distance(current, sink)
    banned = set(exclude)
    best = None
    best_d = here
    for v in topology.neighbors[current]:
        node = nodes[v]
        if v in banned or not node.usable:
            continue
        if v == sink:
            return v
        if power_aware and node.zone is PowerZone.DANGER:
            continue
        d = topology.distance(v, sink)
        if d < best_d:
            best, best_d = v, d
    return best


def distance_to_sink(node: int, metric: Metric, topology: Topology,
                     tables: Optional[Sequence[Optional[RouteEntry]]] = None,
                     sink: Optional[int] = None) -> float:
    sink = topology.sink if sink is None else sink
    if node == sink:
        return 0
    if metric is Metric.EUCLIDEAN:
        return topology.distance(node, sink)
    if tables is None or tables[node] is None:
        raise RouteFailure(f"node {topology.label(node)} has no route to the sink")
    return tables[node].hop_count


class Router:
    """Routing state of one simulated network."""

    def __init__(self, topology: Topology, protocol: str = "sp", power_aware: bool = True,
                 vn_enabled: bool = True):
        if protocol not in ("sp", "gf"):
            raise ValueError(f"unknown routing protocol {protocol!r}")
        self.topology = topology
        self.sink = topology.sink
        self.protocol = protocol
        self.power_aware = power_aware
        self.vn_enabled = vn_enabled
        self.control_messages = 0
        self.messages: list[RepairMessage] = []
        self._seq = 0
        self.tables: list[Optional[RouteEntry]] = []
        self._gf_cache: dict[int, Optional[int]] = {}
        self.hop_distance: dict[int, int] = {}
        self.rebuild()

    def rebuild(self) -> None:
        topo = self.topology
        self.tables = build_sp_routes(topo, self.sink, self.power_aware, self.vn_enabled)
        self.hop_distance = bfs_distances(topo, self.sink, _relay_ok(topo, self.power_aware))
        self._gf_cache.clear()

    def topology_changed(self) -> None:
        """A node died or changed battery zone."""
        if self.protocol == "sp" and self.power_aware:
            self.rebuild()
        else:
            self.hop_distance = bfs_distances(self.topology, self.sink,
                                              _relay_ok(self.topology, self.power_aware))
            self._gf_cache.clear()

    def reachable(self, node: int) -> bool:
        if node == self.sink:
            return True
        if self.protocol == "sp":
            return self.tables[node] is not None
        return node in self.hop_distance

    def next_hop(self, node: int) -> Optional[int]:
        if self.protocol == "sp":
            entry = self.tables[node]
            return entry.next_hop if entry is not None else None
        if node not in self._gf_cache:
            self._gf_cache[node] = gf_next_hop(node, self.sink, self.topology, self.power_aware)
        return self._gf_cache[node]

    def remaining_distance(self, node: int, metric: Metric) -> float:
        if node == self.sink:
            return 0.0
        if metric is Metric.EUCLIDEAN:
            return self.topology.distance(node, self.sink)
        if self.protocol == "sp":
            entry = self.tables[node]
            if entry is None:
                raise RouteFailure(f"node {self.topology.label(node)} has no route")
            return float(entry.hop_count)
        if node not in self.hop_distance:
            raise RouteFailure(f"node {self.topology.label(node)} cannot reach the sink")
        return float(self.hop_distance[node])

    def path_from(self, node: int) -> list[int]:
        if self.protocol == "sp":
            entry = self.tables[node]
            return list(entry.path) if entry else []
        return follow([self.next_hop(u) for u in range(len(self.topology))], node, self.sink)

    def _send(self, phase: Phase, origin: int, target: int, path: Sequence[int]) -> None:
        self._seq += 1
        self.messages.append(RepairMessage(phase, origin, target, tuple(path), self._seq))
        self.control_messages += 1

    def repair(self, broken_at: int, failed: int, source: int,
               travelled: Sequence[int] = ()) -> RepairOutcome:
        """Restore a route after ``broken_at`` lost its next hop ``failed``.

        ``travelled`` is the path the affected packet took from ``source`` to
        ``broken_at``; the error phase retraces it.
        """
        if self.protocol == "gf":
            self._gf_cache.pop(broken_at, None)
            nxt = gf_next_hop(broken_at, self.sink, self.topology, self.power_aware,
                              exclude=(failed,))
            self._gf_cache[broken_at] = nxt
            return RepairOutcome(nxt is not None, Phase.RRPR, 0,
                                 [broken_at, nxt] if nxt is not None else [])
        if self.vn_enabled:
            outcome = self._splice(broken_at)
            if outcome is not None:
                return outcome
        return self._rediscover(broken_at, source, travelled)

    def _splice(self, u: int) -> Optional[RepairOutcome]:
        topo = self.topology
        nodes = topo.nodes
        entry = self.tables[u]
        if entry is None:
            return None
        path = entry.path
        i = 1
        while i < len(path) and not nodes[path[i]].usable:
            i += 1
        if i >= len(path):
            return None
        w = path[i]
        dead = set(path[1:i])
        on_path = set(path)
        cands = sorted({e.vn for e in entry.virtual_nodes if e.protects in dead},
                       key=lambda v: (nodes[v].zone, v))
        for v in cands:
            if v in on_path or not nodes[v].usable:
                continue
            if self.power_aware and nodes[v].zone is PowerZone.DANGER:
                continue
            if not (topo.is_neighbor(u, v) and topo.is_neighbor(v, w)):
                continue
            next_hops = [e.next_hop if e else None for e in self.tables]
            next_hops[u] = v
            next_hops[v] = w
            self.tables = _tables_from(topo, self.sink, next_hops, self.vn_enabled)
            self._send(Phase.RRPR, u, v, (u, v))
            self._send(Phase.RRPR, u, w, (u, v, w))
            return RepairOutcome(True, Phase.RRPR, 2, self.tables[u].path, v)
        return None

    def _rediscover(self, u: int, source: int, travelled: Sequence[int]) -> RepairOutcome:
        topo = self.topology
        nodes = topo.nodes
        sent = 0
        back = list(travelled) if travelled else [source]
        if back[-1] != u:
            back.append(u)
        # error travels hop by hop from the break back to the source
        for k in range(len(back) - 1, 0, -1):
            self._send(Phase.ERR, u, source, back[k - 1:][::-1])
            sent += 1
        if not nodes[source].usable:
            return RepairOutcome(False, Phase.ERR, sent)
        # flood with duplicate suppression: every reached relay-capable node
        # rebroadcasts once; the sink answers instead of rebroadcasting
        relay_ok = _relay_ok(topo, self.power_aware)
        seen = {source}
        frontier = deque([source])
        while frontier:
            v = frontier.popleft()
            if v == self.sink or (v != source and not relay_ok[v]):
                continue
            self._send(Phase.RREQ, source, self.sink, (v,))
            sent += 1
            for x in topo.neighbors[v]:
                if x not in seen and nodes[x].usable:
                    seen.add(x)
                    frontier.append(x)
        self.rebuild()
        entry = self.tables[source] if source != self.sink else None
        if self.sink not in seen or (source != self.sink and entry is None):
            return RepairOutcome(False, Phase.RREQ, sent)
        new_path = list(entry.path) if entry else [source]
        # route reply retraces the chosen path back to the source
        for k in range(len(new_path) - 1):
            self._send(Phase.RREQ, self.sink, source, new_path[::-1][:k + 2])
            sent += 1
        ok = u == self.sink or self.tables[u] is not None
        return RepairOutcome(ok, Phase.RREQ, sent, new_path)
