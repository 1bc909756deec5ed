"""One simulated sensor network: traffic sources, per-node schedulers, MAC and routing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, TextIO

from rtsim.config import ScenarioConfig
from rtsim.engine import Event, EventKind, Simulator, make_rng
from rtsim.mac import MacLayer, TxAttempt, TxStatus, priority_class
from rtsim.metrics import DropReason, MetricsRecord, Summary, summarize
from rtsim.routing import RouteFailure, Router
from rtsim.scheduling import (EtdEstimator, Metric, Packet, Policy, PolicyVariant,
                              ReleaseQueue, VelocityQueue)
from rtsim.topology import PowerZone, Topology, deploy_grid, deploy_random, fig2_topology
from rtsim.traffic import TrafficSource, generate_traffic, toggle_times


def build_topology(cfg: ScenarioConfig, seed: int) -> Topology:
    if cfg.deployment == "grid":
        return deploy_grid(cfg.node_count, cfg.area, cfg.sink_corner, cfg.radio_range,
                           cfg.energy)
    if cfg.deployment == "random":
        return deploy_random(cfg.node_count, cfg.area, make_rng(seed, "deploy"),
                             cfg.radio_range, cfg.energy)
    if cfg.deployment == "fig2":
        return fig2_topology(cfg.energy)
    raise ValueError(f"unknown deployment {cfg.deployment!r}")


@dataclass(frozen=True)
class RunKey:
    policy: PolicyVariant
    protocol: str
    alpha: float
    deadline: float
    seed: int


class Network:
    """Wires the event engine to nodes, schedulers, the MAC and routing for one run."""

    def __init__(self, cfg: ScenarioConfig, key: RunKey, trace: Optional[TextIO] = None,
                 keep_packets: bool = False, topology: Optional[Topology] = None):
        self.cfg = cfg
        self.key = key
        self.topology = topology or build_topology(cfg, key.seed)
        topo = self.topology
        n = len(topo)
        self.sink = topo.sink
        self.sim = Simulator(cfg.sim_time, trace, topo.label)
        self.router = Router(topo, key.protocol, cfg.power_aware, cfg.vn)
        if cfg.metric == "auto":
            self.metric = Metric.HOPS if key.protocol == "sp" else Metric.EUCLIDEAN
        else:
            self.metric = Metric(cfg.metric)
        self.ohd = cfg.one_hop_distance() if self.metric is Metric.EUCLIDEAN else 1.0
        self.policy = Policy(key.policy, key.alpha, self.ohd)
        self.mac_params = cfg.with_mac_radio()
        etd0 = self.mac_params.airtime + self.mac_params.mean_idle_backoff()
        self.etd = [EtdEstimator(cfg.etd_smoothing, etd0) for _ in range(n)]
        qcls = VelocityQueue if key.policy.velocity_based else ReleaseQueue
        self.queues = [qcls(cfg.queue_capacity) for _ in range(n)]
        self.wake_at = [math.inf] * n
        self.mac = MacLayer(self.sim, topo, self.mac_params,
                            [make_rng(key.seed, ("mac", i)) for i in range(n)],
                            self._mac_done, self._energy_changed)
        self.metrics = MetricsRecord()
        self.keep_packets = keep_packets
        self.delivered: list[Packet] = []
        self._packet_seq = 0
        self._traffic: dict[int, Iterator[float]] = {}
        self._at: dict[int, Packet] = {}

        sim = self.sim
        sim.on(EventKind.PUBLISH, self._publish)
        sim.on(EventKind.QUEUE_RELEASE, self._release)
        sim.on(EventKind.REPAIR_TIMER, self._repair)
        sim.on(EventKind.NODE_FAIL, self._fail)
        sim.on(EventKind.TRAFFIC_TOGGLE, self._toggle)
        sim.on(EventKind.ENERGY_CHECK, self._energy_check)
        sim.on(EventKind.SIM_END, lambda ev: None)
        self._setup_traffic()
        for directive in cfg.failures:
            sim.schedule(directive.time, EventKind.NODE_FAIL, topo.node_id(directive.node))
        sim.schedule(cfg.sim_time, EventKind.SIM_END)

    # --- setup -----------------------------------------------------------

    def source_nodes(self) -> list[int]:
        topo = self.topology
        if self.cfg.sources is not None:
            chosen = sorted({topo.node_id(s) for s in self.cfg.sources})
        else:
            chosen = range(len(topo))
        return [u for u in chosen if u != self.sink and self.router.reachable(u)]

    def _setup_traffic(self) -> None:
        cfg = self.cfg
        sources = self.source_nodes()
        for u in sources:
            src = TrafficSource(u, cfg.traffic, cfg.data_rate, cfg.burst_on, cfg.burst_off,
                                cfg.phase_spread)
            it = generate_traffic(src, make_rng(self.key.seed, ("traffic", u)), cfg.sim_time)
            self._traffic[u] = it
            self._next_publication(u)
        if cfg.traffic == "bursty" and sources:
            src = TrafficSource(sources[0], cfg.traffic, cfg.data_rate, cfg.burst_on,
                                cfg.burst_off)
            for t, state in toggle_times(src, cfg.sim_time):
                self.sim.schedule(t, EventKind.TRAFFIC_TOGGLE, data=state)

    def _next_publication(self, u: int) -> None:
        t = next(self._traffic[u], None)
        if t is not None:
            self.sim.schedule(t, EventKind.PUBLISH, u)

    # --- packet lifecycle ------------------------------------------------

    def _drop(self, pkt: Packet, reason: DropReason) -> None:
        pkt.done = True
        self.metrics.record_drop(pkt.id, reason)

    def _publish(self, ev: Event) -> Optional[str]:
        u = ev.node
        self._next_publication(u)
        if not self.topology.nodes[u].usable:
            return "source down"
        now = self.sim.now
        pkt = Packet(self._packet_seq, u, self.sink, now, self.key.deadline)
        self._packet_seq += 1
        self.metrics.publish(pkt.id)
        try:
            dist = self.router.remaining_distance(u, self.metric)
        except RouteFailure:
            pkt.log.append([u, now, None, None])
            self._drop(pkt, DropReason.ROUTE_FAILURE)
            return "no route"
        self.policy.stamp_source(pkt, dist, self.etd[u].etd)
        self._arrive(u, pkt)
        return f"packet {pkt.id}"

    def _arrive(self, u: int, pkt: Packet) -> None:
        now = self.sim.now
        pkt.log.append([u, now, None, None])
        if u == pkt.sink:
            pkt.done = True
            self.metrics.record_delivery(pkt.id, now - pkt.created_at, pkt.deadline)
            if self.keep_packets:
                self.delivered.append(pkt)
            return
        router = self.router
        if router.next_hop(u) is None:
            reason = DropReason.GF_VOID if router.protocol == "gf" else DropReason.ROUTE_FAILURE
            self._drop(pkt, reason)
            return
        try:
            rd = router.remaining_distance(u, self.metric)
        except RouteFailure:
            self._drop(pkt, DropReason.ROUTE_FAILURE)
            return
        policy = self.policy
        queue = self.queues[u]
        if policy.variant.velocity_based:
            victim = queue.push(pkt, policy.velocity(pkt, now, rd))
        else:
            td = policy.target_delay(pkt, now, self.etd[u].etd, rd)
            victim = queue.push(pkt, now + td)
        if victim is not None:
            self._drop(victim, DropReason.QUEUE_OVERFLOW)
        self._service(u)

    def _service(self, u: int) -> None:
        mac = self.mac
        if mac.busy(u) or not self.topology.nodes[u].usable:
            return
        queue = self.queues[u]
        now = self.sim.now
        while True:
            pkt = queue.pop_due(now)
            if pkt is None:
                t = queue.peek_time()
                if t is not None and (t < self.wake_at[u] or self.wake_at[u] < now):
                    self.wake_at[u] = t
                    self.sim.schedule(t, EventKind.QUEUE_RELEASE, u)
                return
            nh = self.router.next_hop(u)
            if nh is None:
                self._drop(pkt, DropReason.GF_VOID if self.router.protocol == "gf"
                           else DropReason.ROUTE_FAILURE)
                continue
            pkt.log[-1][2] = now
            pclass = None
            if self.policy.variant.velocity_based:
                # scaled by the deadline so the class mix does not shift with it
                pclass = priority_class(pkt.velocity * pkt.deadline / self.ohd,
                                        self.mac_params)
            mac.submit(TxAttempt(u, nh, pkt, pclass))
            return

    def _release(self, ev: Event) -> Optional[str]:
        u = ev.node
        if self.wake_at[u] == ev.time:
            self.wake_at[u] = math.inf
        self._service(u)
        return None

    def _mac_done(self, att: TxAttempt, status: TxStatus, delay: float) -> None:
        u = att.sender
        pkt: Packet = att.packet
        if status is TxStatus.DELIVERED:
            self.etd[u].update(delay)
            pkt.log[-1][3] = self.sim.now
            self._arrive(att.receiver, pkt)
            self._service(u)
        elif status is TxStatus.MAC_FAILURE:
            self._drop(pkt, DropReason.MAC_FAILURE)
            self._service(u)
        else:
            self.mac.pending[u] = att  # hold the MAC while the route is repaired
            self.sim.schedule(self.sim.now, EventKind.REPAIR_TIMER, u, pkt.id, att)

    # --- route maintenance and failures -------------------------------------

    def _repair(self, ev: Event) -> Optional[str]:
        att: TxAttempt = ev.data
        u = att.sender
        pkt: Packet = att.packet
        if pkt.done:
            return "stale"
        self.mac.pending[u] = None
        topo = self.topology
        if not topo.nodes[u].usable:
            self._drop(pkt, DropReason.ROUTE_FAILURE)
            return "holder down"
        failed = att.receiver
        outcome = self.router.repair(u, failed, pkt.source, pkt.path)
        self.metrics.control_messages = self.router.control_messages
        nh = self.router.next_hop(u)
        if not outcome.success or nh is None:
            reason = DropReason.GF_VOID if self.router.protocol == "gf" else DropReason.ROUTE_FAILURE
            self._drop(pkt, reason)
            self._service(u)
            return f"{outcome.phase.value} failed msgs={outcome.messages}"
        att.receiver = nh
        att.retries = 0
        self.mac.resubmit(att)
        full = pkt.path[:-1] + self.router.path_from(u)
        detail = (f"{outcome.phase.value} lost={topo.label(failed)} "
                  f"path={'-'.join(topo.label(v) for v in full)} msgs={outcome.messages}")
        if outcome.vn is not None:
            detail += f" vn={topo.label(outcome.vn)}"
        return detail

    def _fail(self, ev: Event) -> Optional[str]:
        u = ev.node
        node = self.topology.nodes[u]
        node.alive = False
        self._purge(u)
        return "node down"

    def _purge(self, u: int) -> None:
        att = self.mac.abort(u)
        if att is not None and not att.packet.done:
            self._drop(att.packet, DropReason.ROUTE_FAILURE)
        for pkt in self.queues[u].drain():
            self._drop(pkt, DropReason.ROUTE_FAILURE)

    def _energy_changed(self, u: int, zone: PowerZone) -> None:
        self.sim.schedule(self.sim.now, EventKind.ENERGY_CHECK, u, data=zone)

    def _energy_check(self, ev: Event) -> Optional[str]:
        u = ev.node
        node = self.topology.nodes[u]
        if node.energy.depleted:
            self._purge(u)
        self.router.topology_changed()
        return f"zone {node.zone.label}"

    def _toggle(self, ev: Event) -> Optional[str]:
        return "on" if ev.data else "off"

    # --- running -----------------------------------------------------------

    def run(self) -> Summary:
        self.sim.run(self.cfg.sim_time)
        return summarize(self.metrics)


def run_once(cfg: ScenarioConfig, key: RunKey, trace: Optional[TextIO] = None,
             keep_packets: bool = False) -> tuple[Summary, Network]:
    net = Network(cfg, key, trace, keep_packets)
    return net.run(), net
