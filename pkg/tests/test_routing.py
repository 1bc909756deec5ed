import math
import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from rtsim.routing import (Phase, RouteFailure, Router, bfs_distances, build_sp_routes,
                           distance_to_sink, gf_next_hop, select_virtual_nodes)
from rtsim.scheduling import Metric
from rtsim.topology import (EnergyState, PowerZone, deploy_grid, deploy_positions,
                            deploy_random, fig2_topology)


def _labels(topo, path):
    return "-".join(topo.label(v) for v in path)


def _oracle_bfs(topo, sink, banned=frozenset()):
    # written independently of the library: plain adjacency from coordinates
    n = len(topo)
    pos = [(nd.x, nd.y) for nd in topo.nodes]
    adj = [[j for j in range(n) if j != i
            and math.dist(pos[i], pos[j]) <= topo.radio_range] for i in range(n)]
    dist = {sink: 0}
    q = deque([sink])
    while q:
        v = q.popleft()
        if v != sink and v in banned:
            continue
        for u in adj[v]:
            if u not in dist:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def test_grid_corner_diagonal_is_one_hop():
    topo = deploy_grid(100, 1000.0)
    tables = build_sp_routes(topo, power_aware=False)
    sink = topo.nodes[topo.sink]
    diag = next(i for i, n in enumerate(topo.nodes)
                if (n.x, n.y) == (sink.x + 100, sink.y - 100))
    assert tables[diag].hop_count == 1
    assert tables[topo.sink] is None
    assert distance_to_sink(topo.sink, Metric.HOPS, topo, tables) == 0


def test_sp_hops_match_oracle_on_grid():
    topo = deploy_grid(100, 1000.0)
    tables = build_sp_routes(topo, power_aware=False)
    oracle = _oracle_bfs(topo, topo.sink)
    for u, entry in enumerate(tables):
        if u != topo.sink:
            assert entry.hop_count == oracle[u]
            assert bfs_distances(topo, topo.sink)[u] == oracle[u]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_sp_hops_match_oracle_random(seed):
    topo = deploy_random(60, 1000.0, random.Random(seed))
    tables = build_sp_routes(topo, power_aware=False)
    oracle = _oracle_bfs(topo, topo.sink)
    for u, entry in enumerate(tables):
        if u == topo.sink:
            continue
        if u in oracle:
            assert entry is not None and entry.hop_count == oracle[u]
            assert entry.hop_count >= 1
        else:
            assert entry is None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(0, 59), max_size=15))
def test_power_aware_paths_avoid_danger(seed, drained):
    topo = deploy_random(60, 1000.0, random.Random(seed))
    for v in drained:
        if v != topo.sink:
            topo.nodes[v].energy = EnergyState(1e6, 5e4)
    danger = {v for v, n in enumerate(topo.nodes) if n.zone is PowerZone.DANGER}
    oracle = _oracle_bfs(topo, topo.sink, frozenset(danger))
    tables = build_sp_routes(topo, power_aware=True)
    for u, entry in enumerate(tables):
        if u == topo.sink:
            continue
        if u in oracle:
            assert entry is not None
            assert not danger & set(entry.path[1:-1])
        else:
            assert entry is None


def test_gf_picks_greatest_progress():
    topo = deploy_positions([(0, 1000), (500, 500), (400, 600), (450, 550)], sink=0)
    assert gf_next_hop(1, 0, topo) == 2


def test_gf_equidistant_neighbor_is_a_void():
    # (480, 140) lies exactly 500 m from the sink, like node 1 itself
    topo = deploy_positions([(0, 0), (500, 0), (480, 140)], sink=0)
    assert gf_next_hop(1, 0, topo) is None
    closer = deploy_positions([(0, 0), (500, 0), (480, 140), (300, 0)], sink=0)
    assert gf_next_hop(1, 0, closer) == 3


def test_gf_skips_danger_relays():
    topo = deploy_positions([(0, 0), (500, 0), (300, 0), (320, 80)], sink=0)
    topo.nodes[2].energy = EnergyState(1e6, 1.0)
    assert gf_next_hop(1, 0, topo) == 3
    assert gf_next_hop(1, 0, topo, power_aware=False) == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_gf_paths_strictly_decrease(seed):
    topo = deploy_random(80, 1000.0, random.Random(seed))
    for u in range(len(topo)):
        v, hops = u, 0
        while v != topo.sink:
            nxt = gf_next_hop(v, topo.sink, topo)
            if nxt is None:
                break
            assert topo.distance(nxt, topo.sink) < topo.distance(v, topo.sink)
            v, hops = nxt, hops + 1
            assert hops <= len(topo)


def test_euclidean_distance_to_sink():
    topo = deploy_positions([(50, 950), (950, 50)], sink=0)
    assert distance_to_sink(1, Metric.EUCLIDEAN, topo) == pytest.approx(1272.792206, abs=1e-6)
    assert distance_to_sink(0, Metric.EUCLIDEAN, topo) == 0


def test_unreachable_hop_distance_raises():
    topo = deploy_positions([(0, 0), (900, 900)], sink=0)
    router = Router(topo, "sp")
    with pytest.raises(RouteFailure):
        router.remaining_distance(1, Metric.HOPS)


# worked example topology

def test_fig2_power_aware_path():
    topo = fig2_topology()
    router = Router(topo, "sp", power_aware=True)
    assert _labels(topo, router.path_from(topo.node_id("A"))) == "A-B-H-G-F-E-D"
    plain = Router(topo, "sp", power_aware=False)
    assert _labels(topo, plain.path_from(topo.node_id("A"))) == "A-B-C-D"


def test_fig2_virtual_nodes():
    topo = fig2_topology()
    nid = topo.node_id
    path = [nid(c) for c in "ABHGFED"]
    vns = select_virtual_nodes(path, topo)
    protected_by = {}
    for e in vns:
        protected_by.setdefault(topo.label(e.vn), set()).add(topo.label(e.protects))
        # every stand-in is one hop from the node it protects
        assert topo.is_neighbor(e.vn, e.protects)
    assert {"H", "G"} <= protected_by["I"]
    assert protected_by["I"] <= {"B", "H", "G", "F"} | {"A"}
    assert {"E"} <= protected_by["J"]
    # J also covers the sink D and the neighbor K on the route K-D
    kd = select_virtual_nodes([nid("K"), nid("D")], topo)
    assert {topo.label(e.protects) for e in kd if topo.label(e.vn) == "J"} == {"K", "D"}


def test_vn_neighbors_both_path_neighbors():
    topo = deploy_grid(100, 1000.0)
    tables = build_sp_routes(topo)
    for entry in tables:
        if entry is None:
            continue
        p = entry.path
        for e in entry.virtual_nodes:
            i = p.index(e.protects)
            for k in (i - 1, i + 1):
                if 0 <= k < len(p):
                    assert topo.is_neighbor(e.vn, p[k])


def test_chain_has_no_virtual_nodes():
    topo = deploy_positions([(0, 0), (200, 0), (400, 0)], sink=0)
    assert select_virtual_nodes([2, 1, 0], topo) == []


def _kill_and_repair(vn_enabled):
    topo = fig2_topology()
    nid = topo.node_id
    router = Router(topo, "sp", power_aware=True, vn_enabled=vn_enabled)
    topo.nodes[nid("G")].alive = False
    travelled = [nid(c) for c in "ABH"]
    outcome = router.repair(nid("H"), nid("G"), nid("A"), travelled)
    return topo, router, outcome


def test_fig2_repair_splices_virtual_node():
    topo, router, outcome = _kill_and_repair(True)
    assert outcome.success and outcome.phase is Phase.RRPR
    assert topo.label(outcome.vn) == "I"
    assert _labels(topo, router.path_from(topo.node_id("A"))) == "A-B-H-I-F-E-D"
    assert outcome.messages <= 3


def test_fig2_full_rediscovery_costs_more():
    topo, router, flood = _kill_and_repair(False)
    assert flood.success and flood.phase is Phase.RREQ
    _, _, splice = _kill_and_repair(True)
    assert splice.messages < flood.messages
    # error back to A (2 hops), one rebroadcast per reachable relay, reply along the path
    kinds = [m.phase for m in router.messages]
    assert kinds.count(Phase.ERR) == 2
    assert flood.path[0] == topo.node_id("A") and flood.path[-1] == topo.sink


def test_rediscovery_without_route_fails():
    topo = deploy_positions([(0, 0), (200, 0), (400, 0)], sink=0)
    router = Router(topo, "sp", power_aware=False)
    topo.nodes[1].alive = False
    outcome = router.repair(2, 1, 2, [2])
    assert not outcome.success
