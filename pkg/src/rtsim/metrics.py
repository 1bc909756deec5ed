"""Packet accounting and the figures of merit: miss ratio, drop ratio, delay, overhead."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

CSV_FIELDS = ("scenario", "policy", "routing", "deadline_s", "alpha", "seed", "published",
              "on_time", "late", "dropped", "in_flight", "miss_ratio", "drop_ratio",
              "mean_delay_s", "p95_delay_s", "control_msgs")


class DropReason(Enum):
    MAC_FAILURE = "MacFailure"
    QUEUE_OVERFLOW = "QueueOverflow"
    GF_VOID = "GfVoid"
    ROUTE_FAILURE = "RouteFailure"


class AccountingError(RuntimeError):
    """A packet was terminated twice or never published."""


@dataclass
class MetricsRecord:
    published: int = 0
    delivered_on_time: int = 0
    delivered_late: int = 0
    dropped: int = 0
    drop_reasons: dict[DropReason, int] = field(
        default_factory=lambda: {r: 0 for r in DropReason})
    delays: list[float] = field(default_factory=list)
    control_messages: int = 0
    _open: set[int] = field(default_factory=set, repr=False)

    def publish(self, packet_id: int) -> None:
        if packet_id in self._open:
            raise AccountingError(f"packet {packet_id} published twice")
        self._open.add(packet_id)
        self.published += 1

    def _close(self, packet_id: int) -> None:
        try:
            self._open.remove(packet_id)
        except KeyError:
            raise AccountingError(
                f"packet {packet_id} reached a second terminal state") from None

    def record_delivery(self, packet_id: int, delay: float, deadline: float) -> None:
        self._close(packet_id)
        self.delays.append(delay)
        if delay <= deadline:
            self.delivered_on_time += 1
        else:
            self.delivered_late += 1

    def record_drop(self, packet_id: int, reason: DropReason) -> None:
        self._close(packet_id)
        self.dropped += 1
        self.drop_reasons[reason] += 1

    @property
    def in_flight(self) -> int:
        return len(self._open)

    @property
    def miss_ratio(self) -> float:
        if not self.published:
            return 0.0
        return (self.delivered_late + self.dropped + self.in_flight) / self.published

    @property
    def drop_ratio(self) -> float:
        return self.dropped / self.published if self.published else 0.0

    def conserved(self) -> bool:
        return self.published == (self.delivered_on_time + self.delivered_late
                                  + self.dropped + self.in_flight)


@dataclass(frozen=True)
class Summary:
    published: int
    on_time: int
    late: int
    dropped: int
    in_flight: int
    miss_ratio: float
    drop_ratio: float
    mean_delay: float
    median_delay: float
    p95_delay: float
    control_messages: int
    drop_reasons: dict
    empty: bool = False


def _percentile(sorted_values: list[float], q: float) -> float:
    # linear interpolation between closest ranks
    if not sorted_values:
        return math.nan
    pos = (len(sorted_values) - 1) * q
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


def summarize(record: MetricsRecord) -> Summary:
    if not record.conserved():
        raise AccountingError("packet conservation violated")
    delays = sorted(record.delays)
    return Summary(
        published=record.published,
        on_time=record.delivered_on_time,
        late=record.delivered_late,
        dropped=record.dropped,
        in_flight=record.in_flight,
        miss_ratio=record.miss_ratio,
        drop_ratio=record.drop_ratio,
        mean_delay=math.fsum(delays) / len(delays) if delays else math.nan,
        median_delay=_percentile(delays, 0.5),
        p95_delay=_percentile(delays, 0.95),
        control_messages=record.control_messages,
        drop_reasons={r.value: n for r, n in record.drop_reasons.items()},
        empty=record.published == 0,
    )


def csv_row(summary: Summary, scenario: str, policy: str, routing: str, deadline: float,
            alpha: float, seed: int) -> list[str]:
    def num(x: float) -> str:
        return "nan" if math.isnan(x) else f"{x:.6f}"

    return [scenario, policy, routing, f"{deadline:g}", f"{alpha:g}", str(seed),
            str(summary.published), str(summary.on_time), str(summary.late),
            str(summary.dropped), str(summary.in_flight), f"{summary.miss_ratio:.6f}",
            f"{summary.drop_ratio:.6f}", num(summary.mean_delay), num(summary.p95_delay),
            str(summary.control_messages)]


def parse_csv_row(fields: list[str]) -> dict[str, object]:
    row: dict[str, object] = dict(zip(CSV_FIELDS, fields))
    for key in ("seed", "published", "on_time", "late", "dropped", "in_flight", "control_msgs"):
        row[key] = int(row[key])
    for key in ("deadline_s", "alpha", "miss_ratio", "drop_ratio", "mean_delay_s",
                "p95_delay_s"):
        row[key] = float(row[key])
    return row


def summary_warning(summary: Summary) -> Optional[str]:
    if summary.empty:
        return "no packets published; ratios reported as 0"
    return None
