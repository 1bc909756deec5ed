"""Slack-allocating packet schedulers and the velocity-monotonic / FIFO baselines.

Distances are either hop counts (shortest-path routing) or meters (geographic
routing). In the Euclidean case the one-hop distance (OHD) converts meters to
a hop equivalent; for hop counts OHD is 1.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

MAX_EXPONENT = 60.0
DVM_EPSILON = 1e-3


class Metric(Enum):
    HOPS = "hops"
    EUCLIDEAN = "euclidean"


class PolicyVariant(Enum):
    SRTS = "SRTS"
    DRTS = "DRTS"
    NLRTS_STATIC = "NLRTS-static"
    NLRTS_DYNAMIC = "NLRTS-dynamic"
    SVM = "SVM"
    DVM = "DVM"
    FIFO = "FIFO"

    @property
    def delays(self) -> bool:
        return self in _RTS

    @property
    def velocity_based(self) -> bool:
        return self in (PolicyVariant.SVM, PolicyVariant.DVM)

    @classmethod
    def parse(cls, text: str) -> "PolicyVariant":
        key = text.strip().upper().replace("_", "-")
        aliases = {"NLRTS": "NLRTS-STATIC"}
        key = aliases.get(key, key)
        for v in cls:
            if v.value.upper() == key:
                return v
        raise ValueError(f"unknown policy {text!r}; choose from {[v.value for v in cls]}")


_RTS = frozenset({PolicyVariant.SRTS, PolicyVariant.DRTS, PolicyVariant.NLRTS_STATIC,
                  PolicyVariant.NLRTS_DYNAMIC})


class Packet:
    """A data packet. ``deadline`` is relative to ``created_at`` and rides in the header."""

    __slots__ = ("id", "source", "sink", "created_at", "deadline", "src_distance",
                 "target_delay_at_source", "velocity", "log", "done")

    def __init__(self, id: int, source: int, sink: int, created_at: float, deadline: float):
        self.id = id
        self.source = source
        self.sink = sink
        self.created_at = created_at
        self.deadline = deadline
        self.src_distance = 0.0
        self.target_delay_at_source = 0.0
        self.velocity = 0.0
        # one [node, arrive, release, sent] record per visited node
        self.log: list[list] = []
        self.done = False

    def elapsed(self, now: float) -> float:
        return now - self.created_at

    @property
    def hops_traversed(self) -> int:
        return max(0, len(self.log) - 1)

    @property
    def path(self) -> list[int]:
        return [rec[0] for rec in self.log]

    def __repr__(self) -> str:
        return (f"Packet(id={self.id}, {self.source}->{self.sink}, t0={self.created_at:.6f}, "
                f"deadline={self.deadline})")


class EtdEstimator:
    """Exponentially weighted one-hop delay estimate."""

    __slots__ = ("etd", "smoothing")

    def __init__(self, smoothing: float = 0.2, initial: Optional[float] = None):
        if not 0 < smoothing <= 1:
            raise ValueError("smoothing weight must lie in (0, 1]")
        self.smoothing = smoothing
        self.etd = initial

    @property
    def initialized(self) -> bool:
        return self.etd is not None

    def update(self, sample: float) -> float:
        if sample < 0:
            raise ValueError(f"negative delay sample {sample}")
        if self.etd is None:
            self.etd = sample
        else:
            self.etd = (1 - self.smoothing) * self.etd + self.smoothing * sample
        return self.etd


def update_etd(est: EtdEstimator, sample: float) -> EtdEstimator:
    est.update(sample)
    return est


def compute_eetd(etd: float, remaining_distance: float, ohd: float = 1.0) -> float:
    """End-to-end delay estimate: one-hop estimate scaled by remaining hops."""
    if ohd <= 0:
        raise ValueError("one-hop distance must be positive")
    return etd * remaining_distance / ohd


def hops_equivalent(distance: float, ohd: float = 1.0) -> int:
    """Whole hops needed to cover ``distance``; at least 1 away from the sink."""
    if distance <= 0:
        return 0
    return max(1, math.ceil(distance / ohd - 1e-9))


def hops_span(distance: float, ohd: float = 1.0) -> float:
    """Real-valued hop equivalent of a source distance, never below one hop."""
    if distance <= 0:
        return 0.0
    return max(1.0, distance / ohd)


def target_delay_static(deadline: float, eetd: float, distance_hops: float,
                        alpha: float) -> float:
    if distance_hops <= 0:
        return 0.0
    return max(0.0, deadline - eetd) / distance_hops * alpha


def target_delay_dynamic(deadline: float, elapsed: float, etd: float,
                         remaining_distance: float, ohd: float, alpha: float) -> float:
    hops = hops_equivalent(remaining_distance, ohd)
    if hops == 0:
        return 0.0
    slack = (deadline - elapsed) - compute_eetd(etd, remaining_distance, ohd)
    return max(0.0, slack) / hops * alpha


def target_delay_nonlinear(slack_basis: float, eetd: float, remaining_distance: float,
                           ohd: float, alpha: float) -> float:
    """Halve the share of slack for every hop still ahead of the packet."""
    exponent = remaining_distance / ohd
    if exponent > MAX_EXPONENT:
        return 0.0
    return max(0.0, slack_basis - eetd) / 2.0 ** exponent * alpha


def velocity_static(src_distance: float, deadline: float) -> float:
    return src_distance / deadline


def velocity_dynamic(remaining_distance: float, deadline: float, elapsed: float,
                     eps: float = DVM_EPSILON) -> float:
    return remaining_distance / max(eps, deadline - elapsed)


@dataclass(frozen=True)
class Policy:
    variant: PolicyVariant
    alpha: float = 0.7
    ohd: float = 1.0
    dvm_epsilon: float = DVM_EPSILON

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.ohd <= 0:
            raise ValueError("one-hop distance must be positive")

    def stamp_source(self, packet: Packet, src_distance: float, etd: float) -> None:
        """Fix the source-side quantities carried by the packet."""
        packet.src_distance = src_distance
        v = self.variant
        if v is PolicyVariant.SRTS:
            eetd = compute_eetd(etd, src_distance, self.ohd)
            packet.target_delay_at_source = target_delay_static(
                packet.deadline, eetd, hops_span(src_distance, self.ohd), self.alpha)
        elif v is PolicyVariant.SVM:
            packet.velocity = velocity_static(src_distance, packet.deadline)

    def target_delay(self, packet: Packet, now: float, etd: float,
                     remaining_distance: float) -> float:
        """Intentional queuing delay at the current node (0 for non-RTS variants)."""
        v = self.variant
        ohd = self.ohd
        if v is PolicyVariant.DRTS:
            return target_delay_dynamic(packet.deadline, packet.elapsed(now), etd,
                                        remaining_distance, ohd, self.alpha)
        if v is PolicyVariant.SRTS:
            # deadline and distance fixed at the source, ETD local to this hop
            eetd = compute_eetd(etd, packet.src_distance, ohd)
            return target_delay_static(packet.deadline, eetd,
                                       hops_span(packet.src_distance, ohd), self.alpha)
        if v is PolicyVariant.NLRTS_STATIC:
            eetd = compute_eetd(etd, packet.src_distance, ohd)
            return target_delay_nonlinear(packet.deadline, eetd, remaining_distance, ohd,
                                          self.alpha)
        if v is PolicyVariant.NLRTS_DYNAMIC:
            eetd = compute_eetd(etd, remaining_distance, ohd)
            return target_delay_nonlinear(packet.deadline - packet.elapsed(now), eetd,
                                          remaining_distance, ohd, self.alpha)
        return 0.0

    def velocity(self, packet: Packet, now: float, remaining_distance: float) -> float:
        if self.variant is PolicyVariant.DVM:
            packet.velocity = velocity_dynamic(remaining_distance, packet.deadline,
                                               packet.elapsed(now), self.dvm_epsilon)
        return packet.velocity


class ReleaseQueue:
    """Packets held until their release time; overflow evicts the latest release."""

    __slots__ = ("capacity", "_heap", "_seq")

    def __init__(self, capacity: int = 64):
        if capacity < 1:
            raise ValueError("queue capacity must be at least 1")
        self.capacity = capacity
        self._heap: list[tuple[float, int, Packet]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, packet: Packet, release_time: float) -> Optional[Packet]:
        """Insert; returns the evicted packet when the queue overflows."""
        heapq.heappush(self._heap, (release_time, self._seq, packet))
        self._seq += 1
        if len(self._heap) <= self.capacity:
            return None
        worst = max(range(len(self._heap)), key=lambda i: self._heap[i][:2])
        victim = self._heap[worst][2]
        self._heap[worst] = self._heap[-1]
        self._heap.pop()
        heapq.heapify(self._heap)
        return victim

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def pop_due(self, now: float) -> Optional[Packet]:
        if self._heap and self._heap[0][0] <= now:
            return heapq.heappop(self._heap)[2]
        return None

    def drain(self) -> list[Packet]:
        out = [entry[2] for entry in sorted(self._heap)]
        self._heap.clear()
        return out

    def release_times(self) -> list[float]:
        return sorted(entry[0] for entry in self._heap)


class VelocityQueue:
    """Highest requested velocity first; overflow evicts the newest arrival."""

    __slots__ = ("capacity", "_heap", "_seq")

    def __init__(self, capacity: int = 64):
        if capacity < 1:
            raise ValueError("queue capacity must be at least 1")
        self.capacity = capacity
        self._heap: list[tuple[float, int, Packet]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, packet: Packet, velocity: float) -> Optional[Packet]:
        heapq.heappush(self._heap, (-velocity, self._seq, packet))
        self._seq += 1
        if len(self._heap) <= self.capacity:
            return None
        newest = max(range(len(self._heap)), key=lambda i: self._heap[i][1])
        victim = self._heap[newest][2]
        self._heap[newest] = self._heap[-1]
        self._heap.pop()
        heapq.heapify(self._heap)
        return victim

    def peek_time(self) -> Optional[float]:
        return None

    def pop_due(self, now: float) -> Optional[Packet]:
        return heapq.heappop(self._heap)[2] if self._heap else None

    def drain(self) -> list[Packet]:
        out = [entry[2] for entry in sorted(self._heap)]
        self._heap.clear()
        return out


def enqueue_for_release(queue: ReleaseQueue, packet: Packet, target_delay: float,
                        now: float) -> Optional[Packet]:
    return queue.push(packet, now + target_delay)
