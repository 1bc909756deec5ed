"""Discrete-event simulator for real-time data dissemination in wireless sensor networks.

Implements slack-allocating packet schedulers (static, dynamic and non-linear RTS),
velocity-monotonic and FIFO baselines, shortest-path and greedy geographic
routing with virtual-node route repair, and an experiment harness.
"""

from rtsim.engine import Event, EventKind, SchedulingError, Simulator, make_rng
from rtsim.metrics import DropReason, MetricsRecord, summarize
from rtsim.scheduling import Packet, Policy, PolicyVariant

__version__ = "0.1.0"

__all__ = [
    "DropReason",
    "Event",
    "EventKind",
    "MetricsRecord",
    "Packet",
    "Policy",
    "PolicyVariant",
    "SchedulingError",
    "Simulator",
    "make_rng",
    "summarize",
]
