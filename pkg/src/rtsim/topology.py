"""Node deployment, neighbor graph and the battery / power-zone model."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Optional, Sequence


class PowerZone(IntEnum):
    # ordered best first so sorting by zone puts healthy nodes ahead
    ACTIVE = 0
    CRITICAL = 1
    DANGER = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


class Action(Enum):
    TRANSMIT = "Transmit"
    RECEIVE = "Receive"


def power_zone(remaining: float, capacity: float, active_threshold: float = 0.3,
               danger_threshold: float = 0.1) -> PowerZone:
    if capacity <= 0:
        raise ValueError(f"capacity must be positive, got {capacity}")
    ratio = remaining / capacity
    if ratio > active_threshold:
        return PowerZone.ACTIVE
    if ratio > danger_threshold:
        return PowerZone.CRITICAL
    return PowerZone.DANGER


@dataclass(frozen=True)
class EnergyParams:
    capacity: float = 1e6
    tx_cost: float = 1.0
    rx_cost: float = 0.5
    active_threshold: float = 0.3
    danger_threshold: float = 0.1

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("energy capacity must be positive")
        if not 0 <= self.danger_threshold <= self.active_threshold <= 1:
            raise ValueError("need 0 <= danger_threshold <= active_threshold <= 1")


class EnergyState:
    __slots__ = ("remaining", "capacity", "active_threshold", "danger_threshold", "zone",
                 "_next_boundary")

    def __init__(self, capacity: float, remaining: Optional[float] = None,
                 active_threshold: float = 0.3, danger_threshold: float = 0.1):
        self.capacity = float(capacity)
        self.remaining = self.capacity if remaining is None else float(remaining)
        if not 0 <= self.remaining <= self.capacity:
            raise ValueError("remaining energy must lie in [0, capacity]")
        self.active_threshold = active_threshold
        self.danger_threshold = danger_threshold
        self.zone = power_zone(self.remaining, self.capacity, active_threshold, danger_threshold)
        self._next_boundary = self._boundary()

    def _boundary(self) -> float:
        # energy level at or below which the zone may change next
        if self.zone is PowerZone.ACTIVE:
            return self.active_threshold * self.capacity
        if self.zone is PowerZone.CRITICAL:
            return self.danger_threshold * self.capacity
        return 0.0

    @property
    def depleted(self) -> bool:
        return self.remaining <= 0.0

    def consume(self, amount: float) -> bool:
        """Spend ``amount`` (clamped at zero). Returns True when the zone changed."""
        self.remaining = max(0.0, self.remaining - amount)
        if self.remaining > self._next_boundary:
            return False
        zone = power_zone(self.remaining, self.capacity, self.active_threshold,
                          self.danger_threshold)
        changed = zone is not self.zone
        self.zone = zone
        self._next_boundary = self._boundary()
        return changed

    def __repr__(self) -> str:
        return f"EnergyState({self.remaining:g}/{self.capacity:g}, {self.zone.label})"


@dataclass
class Node:
    id: int
    x: float
    y: float
    energy: EnergyState
    label: str = ""
    alive: bool = True

    def __post_init__(self):
        if not self.label:
            self.label = str(self.id)

    @property
    def zone(self) -> PowerZone:
        return self.energy.zone

    @property
    def usable(self) -> bool:
        """Live and carrying charge; a drained node neither sends nor forwards."""
        return self.alive and not self.energy.depleted


@dataclass
class Topology:
    nodes: list[Node]
    sink: int
    radio_range: float = 250.0
    area: float = 1000.0
    energy_params: EnergyParams = field(default_factory=EnergyParams)
    neighbors: list[tuple[int, ...]] = field(init=False)

    def __post_init__(self):
        if not 0 <= self.sink < len(self.nodes):
            raise ValueError(f"sink {self.sink} is not a node id")
        self.neighbors = neighbor_lists([(n.x, n.y) for n in self.nodes], self.radio_range)
        self._nbr_sets = [frozenset(nb) for nb in self.neighbors]
        self._by_label = {n.label: n.id for n in self.nodes}

    def __len__(self) -> int:
        return len(self.nodes)

    def distance(self, a: int, b: int) -> float:
        na, nb = self.nodes[a], self.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)

    def distance_to_point(self, a: int, x: float, y: float) -> float:
        n = self.nodes[a]
        return math.hypot(n.x - x, n.y - y)

    def is_neighbor(self, a: int, b: int) -> bool:
        return b in self._nbr_sets[a]

    def live_neighbors(self, a: int) -> list[int]:
        return [b for b in self.neighbors[a] if self.nodes[b].usable]

    def node_id(self, label: str | int) -> int:
        """Resolve a node label (``"G"``) or decimal id (``"7"`` / ``7``)."""
        if isinstance(label, int):
            if not 0 <= label < len(self.nodes):
                raise KeyError(f"no node {label}")
            return label
        if label in self._by_label:
            return self._by_label[label]
        if label.isdigit() and int(label) < len(self.nodes):
            return int(label)
        raise KeyError(f"no node labelled {label!r}")

    def label(self, node: int) -> str:
        return self.nodes[node].label

    def consume_energy(self, node: int, action: Action) -> EnergyState:
        p = self.energy_params
        cost = p.tx_cost if action is Action.TRANSMIT else p.rx_cost
        state = self.nodes[node].energy
        state.consume(cost)
        return state

    def dump(self) -> list[str]:
        """One ``id x y energy zone`` line per node."""
        return [f"{n.label} {n.x:.3f} {n.y:.3f} {n.energy.remaining:.3f} {n.zone.label}"
                for n in self.nodes]


def neighbor_lists(positions: Sequence[tuple[float, float]],
                   radio_range: float) -> list[tuple[int, ...]]:
    n = len(positions)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        xi, yi = positions[i]
        for j in range(i + 1, n):
            xj, yj = positions[j]
            if math.hypot(xi - xj, yi - yj) <= radio_range:
                nbrs[i].append(j)
                nbrs[j].append(i)
    return [tuple(sorted(nb)) for nb in nbrs]


def _make_nodes(positions: Iterable[tuple[float, float]], energy: EnergyParams,
                labels: Optional[Sequence[str]] = None) -> list[Node]:
    nodes = []
    for i, (x, y) in enumerate(positions):
        state = EnergyState(energy.capacity, None, energy.active_threshold,
                            energy.danger_threshold)
        nodes.append(Node(i, float(x), float(y), state, labels[i] if labels else ""))
    return nodes


_CORNERS = {"nw": (0, 1), "ne": (1, 1), "sw": (0, 0), "se": (1, 0)}


def deploy_grid(n: int, area: float = 1000.0, sink_corner: str = "nw",
                radio_range: float = 250.0,
                energy: EnergyParams = EnergyParams()) -> Topology:
    """One node at the center of each tile of a sqrt(n) x sqrt(n) grid.

    Ids run west to east, then south to north (y grows northward), so node 0
    sits at the south-west tile.
    """
    side = math.isqrt(n) if n > 0 else 0
    if n <= 0 or side * side != n:
        raise ValueError(f"grid deployment needs a perfect square node count, got {n}")
    corner = sink_corner.lower()
    if corner not in _CORNERS:
        raise ValueError(f"unknown corner {sink_corner!r}; use one of {sorted(_CORNERS)}")
    tile = area / side
    positions = [((col + 0.5) * tile, (row + 0.5) * tile)
                 for row in range(side) for col in range(side)]
    cx, cy = _CORNERS[corner]
    sink = (cy * (side - 1)) * side + cx * (side - 1)
    return Topology(_make_nodes(positions, energy), sink, radio_range, area, energy)


def nearest_to(positions: Sequence[tuple[float, float]], x: float, y: float) -> int:
    # ties resolve to the lowest id
    return min(range(len(positions)),
               key=lambda i: (math.hypot(positions[i][0] - x, positions[i][1] - y), i))


def deploy_random(n: int, area: float, rng: random.Random, radio_range: float = 250.0,
                  energy: EnergyParams = EnergyParams()) -> Topology:
    """Uniform placement; the sink is the node nearest the area center."""
    if n < 1:
        raise ValueError("random deployment needs at least one node")
    positions = [(rng.uniform(0.0, area), rng.uniform(0.0, area)) for _ in range(n)]
    sink = nearest_to(positions, area / 2, area / 2)
    return Topology(_make_nodes(positions, energy), sink, radio_range, area, energy)


def deploy_positions(positions: Sequence[tuple[float, float]], sink: Optional[int] = None,
                     area: float = 1000.0, radio_range: float = 250.0,
                     energy: EnergyParams = EnergyParams(),
                     labels: Optional[Sequence[str]] = None) -> Topology:
    """Explicit placement; without ``sink`` the node nearest the center is used."""
    if sink is None:
        sink = nearest_to(positions, area / 2, area / 2)
    return Topology(_make_nodes(positions, energy, labels), sink, radio_range, area, energy)


# Worked example: A is the source, D the sink. C sits in the danger zone so the
# power-aware route detours through H-G-F-E. I (critical battery) neighbors
# B, H, G and F; J neighbors F, E, D and K.
FIG2_LAYOUT = {
    "A": (0.0, 0.0),
    "B": (200.0, 0.0),
    "C": (400.0, 0.0),
    "D": (600.0, 0.0),
    "E": (600.0, -230.0),
    "F": (450.0, -420.0),
    "G": (300.0, -420.0),
    "H": (230.0, -200.0),
    "I": (325.0, -210.0),
    "J": (525.0, -210.0),
    "K": (720.0, -120.0),
}
FIG2_ENERGY_FRACTION = {"C": 0.05, "I": 0.2}


def fig2_topology(energy: EnergyParams = EnergyParams()) -> Topology:
    labels = sorted(FIG2_LAYOUT)
    # shift into the positive quadrant of the simulation area
    positions = [(FIG2_LAYOUT[k][0] + 100.0, FIG2_LAYOUT[k][1] + 600.0) for k in labels]
    topo = deploy_positions(positions, sink=labels.index("D"), area=1000.0,
                            radio_range=250.0, energy=energy, labels=labels)
    for label, fraction in FIG2_ENERGY_FRACTION.items():
        node = topo.nodes[topo.node_id(label)]
        node.energy = EnergyState(energy.capacity, energy.capacity * fraction,
                                  energy.active_threshold, energy.danger_threshold)
    return topo
