"""Periodic publication schedules, steady or gated by a network-wide on/off burst."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional


@dataclass(frozen=True)
class TrafficSource:
    node: int
    mode: str = "steady"
    rate: float = 2.0
    burst_on: float = 5.0
    burst_off: float = 5.0
    # width of the window the first publication is drawn from; None: one period
    phase_spread: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("steady", "bursty"):
            raise ValueError(f"unknown traffic mode {self.mode!r}")
        if self.rate <= 0:
            raise ValueError("data rate must be positive")
        if self.burst_on <= 0 or self.burst_off < 0:
            raise ValueError("burst on-period must be positive and off-period nonnegative")
        if self.phase_spread is not None and self.phase_spread < 0:
            raise ValueError("phase spread must be nonnegative")

    @property
    def period(self) -> float:
        return 1.0 / self.rate

    def is_on(self, t: float) -> bool:
        if self.mode == "steady":
            return True
        return t % (self.burst_on + self.burst_off) < self.burst_on


def generate_traffic(source: TrafficSource, rng: random.Random,
                     until: float) -> Iterator[float]:
    """Publication times in ``[0, until)``.

    The first publication falls at a uniform random offset within one period
    (or within ``phase_spread`` when that is narrower); bursty sources share
    the on/off square wave, which starts ON at t=0.
    """
    period = source.period
    spread = period if source.phase_spread is None else min(source.phase_spread, period)
    t = rng.uniform(0.0, spread)
    k = 0
    while True:
        t_k = t + k * period
        if t_k >= until:
            return
        if source.is_on(t_k):
            yield t_k
        k += 1


def toggle_times(source: TrafficSource, until: float) -> list[tuple[float, bool]]:
    """Instants where the burst gate flips, with the new state."""
    if source.mode == "steady":
        return []
    out = []
    t = 0.0
    cycle = source.burst_on + source.burst_off
    while t < until:
        out.append((t, True))
        if t + source.burst_on < until and source.burst_off > 0:
            out.append((t + source.burst_on, False))
        t += cycle
    return out
