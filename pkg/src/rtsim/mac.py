"""Abstract shared-medium contention model.

Carrier-sense multiple access with binary exponential backoff. A transmission
occupies the medium for ``overhead + payload`` seconds; two transmissions that
overlap in time collide when either sender lies within interference range of
the other's receiver. Carrier sense only sees a transmission once it has been
on the air for one slot, so senders that start within a slot of each other
collide.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from rtsim.engine import Event, EventKind, Simulator, make_rng
from rtsim.topology import Action, PowerZone, Topology, deploy_positions


class TxStatus(Enum):
    DELIVERED = "Delivered"
    COLLIDED = "Collided"
    MAC_FAILURE = "MacFailure"
    LINK_BROKEN = "LinkBroken"


@dataclass(frozen=True)
class MacParams:
    slot_us: float = 20.0
    w0: int = 32
    max_retries: int = 5
    interference_range_m: Optional[float] = None  # None: same as radio range
    overhead_us: float = 0.0
    bandwidth_bps: float = 2_000_000.0
    packet_bytes: int = 32
    # VMS only: lower bounds of the priority classes, most urgent first, on the
    # requested velocity scaled by the packet deadline (one-hop distances per
    # deadline); the last class takes everything else
    vms_class_bounds: tuple[float, ...] = (4.0, 3.0, 2.0)
    carrier_sense: bool = True

    def __post_init__(self):
        if self.slot_us <= 0 or self.w0 < 1 or self.max_retries < 0:
            raise ValueError("need slot_us > 0, w0 >= 1 and max_retries >= 0")
        if self.overhead_us < 0 or self.bandwidth_bps <= 0 or self.packet_bytes <= 0:
            raise ValueError("overhead, bandwidth and packet size must be positive")
        if list(self.vms_class_bounds) != sorted(self.vms_class_bounds, reverse=True):
            raise ValueError("vms_class_bounds must be in decreasing order")

    @property
    def slot(self) -> float:
        return self.slot_us * 1e-6

    @property
    def payload_time(self) -> float:
        return payload_time(self.packet_bytes, self.bandwidth_bps)

    @property
    def airtime(self) -> float:
        return self.overhead_us * 1e-6 + self.payload_time

    @property
    def n_classes(self) -> int:
        return len(self.vms_class_bounds) + 1

    def mean_idle_backoff(self) -> float:
        return (self.w0 - 1) / 2 * self.slot


def payload_time(packet_bytes: int, bandwidth_bps: float) -> float:
    return packet_bytes * 8 / bandwidth_bps


def measure_hop_delay(send_ready: float, ack_time: float) -> float:
    if ack_time < send_ready:
        raise ValueError("acknowledgement precedes send-ready time")
    return ack_time - send_ready


def priority_class(urgency: float, params: MacParams) -> int:
    """Class rank for a deadline-scaled velocity; 0 is the most urgent."""
    for rank, bound in enumerate(params.vms_class_bounds):
        if urgency >= bound:
            return rank
    return len(params.vms_class_bounds)


def backoff_window(retries: int, params: MacParams, pclass: Optional[int] = None) -> int:
    window = params.w0 * (1 << retries)
    if pclass is not None:
        window = window * (pclass + 1) / params.n_classes
    return max(1, int(round(window)))


@dataclass(eq=False)
class TxAttempt:
    sender: int
    receiver: int
    packet: object
    priority_class: Optional[int] = None
    retries: int = 0
    send_ready: float = 0.0
    deferrals: int = 0


@dataclass(eq=False)
class Transmission:
    sender: int
    receiver: int
    start: float
    end: float
    attempt: Optional[TxAttempt] = None
    collided: bool = False


class Channel:
    """Transmissions currently on the air and their pairwise interference."""

    def __init__(self, topology: Topology, interference_range: Optional[float] = None):
        rng_m = topology.radio_range if interference_range is None else interference_range
        n = len(topology)
        self.interference_range = rng_m
        if rng_m == topology.radio_range:
            self._within = [frozenset(nb) for nb in topology.neighbors]
        else:
            self._within = [frozenset(j for j in range(n)
                                      if j != i and topology.distance(i, j) <= rng_m)
                            for i in range(n)]
        self.active: list[Transmission] = []
        self.delivered_log: Optional[list[Transmission]] = None

    def interferes(self, sender: int, receiver: int) -> bool:
        return sender == receiver or receiver in self._within[sender]

    def begin(self, sender: int, receiver: int, start: float, end: float,
              attempt: Optional[TxAttempt] = None) -> Transmission:
        tx = Transmission(sender, receiver, start, end, attempt)
        within = self._within
        for other in self.active:
            if other.end <= start:
                continue
            if other.sender == receiver or receiver in within[other.sender]:
                tx.collided = True
            if sender == other.receiver or other.receiver in within[sender]:
                other.collided = True
        self.active.append(tx)
        return tx

    def end(self, tx: Transmission) -> None:
        self.active.remove(tx)
        if self.delivered_log is not None and not tx.collided:
            self.delivered_log.append(tx)

    def sensed_busy_until(self, node: int, now: float, sense_delay: float) -> float:
        """End of the latest audible transmission at ``node``, or ``now`` if idle."""
        within = self._within[node]
        horizon = now - sense_delay
        busy = now
        for tx in self.active:
            if tx.end > now and tx.start <= horizon and tx.sender in within:
                if tx.end > busy:
                    busy = tx.end
        return busy


CompletionHook = Callable[[TxAttempt, TxStatus, float], None]


class MacLayer:
    """Per-node CSMA/BEB state machine driven by the event engine.

    ``on_complete(attempt, status, delay)`` fires once per submitted attempt,
    with status Delivered, MacFailure or LinkBroken. A LinkBroken attempt may be
    resubmitted after the caller repairs its route.
    """

    def __init__(self, sim: Simulator, topology: Topology, params: MacParams,
                 rngs: Sequence[random.Random], on_complete: CompletionHook,
                 on_energy: Optional[Callable[[int, PowerZone], None]] = None):
        self.sim = sim
        self.topology = topology
        self.params = params
        self.rngs = rngs
        self.on_complete = on_complete
        self.on_energy = on_energy
        self.channel = Channel(topology, params.interference_range_m)
        self.pending: list[Optional[TxAttempt]] = [None] * len(topology)
        self._slot = params.slot
        self._airtime = params.airtime
        self._sense_delay = params.slot if params.carrier_sense else math.inf
        self.transmissions = 0
        self.collisions = 0
        sim.on(EventKind.TX_START, self._tx_start)
        sim.on(EventKind.TX_END, self._tx_end)

    def busy(self, node: int) -> bool:
        return self.pending[node] is not None

    def submit(self, attempt: TxAttempt) -> None:
        node = attempt.sender
        if self.pending[node] is not None:
            raise RuntimeError(f"node {node} already has a transmission pending")
        attempt.send_ready = self.sim.now
        self.pending[node] = attempt
        self._backoff(attempt, self.sim.now)

    def resubmit(self, attempt: TxAttempt) -> None:
        """Retry after a route repair; keeps the original send-ready time."""
        self.pending[attempt.sender] = attempt
        self._backoff(attempt, self.sim.now)

    def abort(self, node: int) -> Optional[TxAttempt]:
        att = self.pending[node]
        self.pending[node] = None
        return att

    def _backoff(self, att: TxAttempt, base: float) -> None:
        window = backoff_window(att.retries, self.params, att.priority_class)
        slots = self.rngs[att.sender].randrange(window)
        self.sim.schedule(base + slots * self._slot, EventKind.TX_START, att.sender,
                          _pid(att.packet), att)

    def _spend(self, node: int, action: Action) -> None:
        energy = self.topology.nodes[node].energy
        before = energy.zone
        self.topology.consume_energy(node, action)
        if self.on_energy is not None and (energy.zone is not before or energy.depleted):
            self.on_energy(node, energy.zone)

    def _tx_start(self, ev: Event) -> Optional[str]:
        att: TxAttempt = ev.data
        node = att.sender
        if self.pending[node] is not att:
            return "stale"
        now = self.sim.now
        if self._sense_delay != math.inf:
            busy_until = self.channel.sensed_busy_until(node, now, self._sense_delay)
            if busy_until > now:
                att.deferrals += 1
                self._backoff(att, busy_until)
                return "defer"
        topo = self.topology
        recv = att.receiver
        if not topo.nodes[recv].usable or not topo.is_neighbor(node, recv):
            self.pending[node] = None
            self.on_complete(att, TxStatus.LINK_BROKEN, now - att.send_ready)
            return f"link-broken to {topo.label(recv)}"
        tx = self.channel.begin(node, recv, now, now + self._airtime, att)
        self.transmissions += 1
        self._spend(node, Action.TRANSMIT)
        self.sim.schedule(tx.end, EventKind.TX_END, node, ev.packet, tx)
        return f"to {topo.label(recv)} try {att.retries}"

    def _tx_end(self, ev: Event) -> Optional[str]:
        tx: Transmission = ev.data
        self.channel.end(tx)
        att = tx.attempt
        node = tx.sender
        topo = self.topology
        if self.pending[node] is not att:
            return "stale"
        ok = not tx.collided and topo.nodes[tx.receiver].usable
        if ok:
            self.pending[node] = None
            self._spend(tx.receiver, Action.RECEIVE)
            self.on_complete(att, TxStatus.DELIVERED,
                             measure_hop_delay(att.send_ready, self.sim.now))
            return f"delivered to {topo.label(tx.receiver)}"
        self.collisions += 1
        att.retries += 1
        if att.retries > self.params.max_retries:
            self.pending[node] = None
            self.on_complete(att, TxStatus.MAC_FAILURE, self.sim.now - att.send_ready)
            return "mac-failure"
        self._backoff(att, self.sim.now)
        return "collided"


def _pid(packet: object) -> int:
    return getattr(packet, "id", -1)


def sample_contended_hop_delay(contenders: int, seed: int,
                               params: MacParams = MacParams()) -> float:
    """One-hop delay of a tagged sender while ``contenders`` others target the same receiver.

    Every sender holds one packet at t=0 and all nodes hear each other. The
    tagged sender's delay runs until delivery (or until it gives up).
    """
    radius = 50.0
    positions = [(500.0, 500.0)]
    total = contenders + 1
    for k in range(total):
        angle = 2 * math.pi * k / total
        positions.append((500.0 + radius * math.cos(angle), 500.0 + radius * math.sin(angle)))
    topo = deploy_positions(positions, sink=0)
    sim = Simulator(end=10.0)
    result: dict[int, float] = {}

    def done(att: TxAttempt, status: TxStatus, delay: float) -> None:
        result[att.sender] = delay

    rngs = [make_rng(seed, ("mac", i)) for i in range(len(positions))]
    mac = MacLayer(sim, topo, params, rngs, done)
    for sender in range(1, total + 1):
        mac.submit(TxAttempt(sender, 0, None))
    sim.run()
    return result[1]
