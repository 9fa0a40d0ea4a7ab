"""Message statistics and the message-stats report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

# Row labels of the report, in print order.
TABLE_ROWS = (
    "sim_time",
    "created",
    "started",
    "relayed",
    "aborted",
    "dropped",
    "delivery_prob",
    "delay_prob",
    "hopcount_avg",
    "buffertime_avg",
)
COUNT_ROWS = ("created", "started", "relayed", "aborted", "dropped")


class AccountingError(AssertionError):
    """A finalized report violates the transfer/delivery bookkeeping."""


@dataclass(frozen=True)
class StatsReport:
    sim_time: float = 0.0
    created: int = 0
    started: int = 0
    relayed: int = 0
    aborted: int = 0
    dropped: int = 0
    delivery_prob: float = 0.0
    delay_prob: float = 0.0
    hopcount_avg: float = 0.0
    buffertime_avg: float = 0.0
    delivered: int = 0
    in_flight: int = 0
    latency_avg: float = 0.0
    # set when the ratio it qualifies had an empty denominator
    no_messages: bool = False
    no_deliveries: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StatsReport":
        return cls(**data)

    def check(self) -> None:
        if self.started != self.relayed + self.aborted + self.in_flight:
            raise AccountingError(
                f"started={self.started} != relayed={self.relayed} + "
                f"aborted={self.aborted} + in_flight={self.in_flight}")
        if self.delivered > self.created:
            raise AccountingError(f"delivered={self.delivered} > created={self.created}")
        for name in ("delivery_prob", "delay_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise AccountingError(f"{name}={value} outside [0, 1]")


@dataclass
class Delivery:
    msg_id: int
    at: float
    latency: float
    hops: int
    ttl: float


@dataclass
class StatsCollector:
    """Accumulates simulation events; :meth:`finalize` builds the report."""

    created_at: dict[int, float] = field(default_factory=dict)
    started: int = 0
    relayed: int = 0
    aborted: int = 0
    dropped: int = 0
    deliveries: dict[int, Delivery] = field(default_factory=dict)
    buffer_times: list[float] = field(default_factory=list)

    def record_created(self, msg_id: int, now: float) -> None:
        self.created_at[msg_id] = now

    def record_started(self) -> None:
        self.started += 1

    def record_relayed(self) -> None:
        self.relayed += 1

    def record_aborted(self) -> None:
        self.aborted += 1

    def record_dropped(self, n: int = 1) -> None:
        self.dropped += n

    def record_delivered(self, msg_id: int, now: float, latency: float, hops: int,
                         ttl: float) -> bool:
        """Register a copy reaching its destination; True on first delivery."""
        if msg_id in self.deliveries:
            return False
        self.deliveries[msg_id] = Delivery(msg_id, now, latency, hops, ttl)
        return True

    def record_buffered(self, duration: float) -> None:
        self.buffer_times.append(duration)

    def finalize(self, now: float, in_flight: int = 0,
                 open_buffer_times: tuple[float, ...] = ()) -> StatsReport:
        created = len(self.created_at)
        delivered = len(self.deliveries)
        deliveries = sorted(self.deliveries.values(), key=lambda d: d.msg_id)
        times = sorted(self.buffer_times + list(open_buffer_times))
        report = StatsReport(
            sim_time=float(now),
            created=created,
            started=self.started,
            relayed=self.relayed,
            aborted=self.aborted,
            dropped=self.dropped,
            delivery_prob=delivered / created if created else 0.0,
            delay_prob=_mean([d.latency / d.ttl for d in deliveries]),
            hopcount_avg=_mean([float(d.hops) for d in deliveries]),
            buffertime_avg=_mean(times),
            delivered=delivered,
            in_flight=in_flight,
            latency_avg=_mean([d.latency for d in deliveries]),
            no_messages=created == 0,
            no_deliveries=delivered == 0,
        )
        report.check()
        return report

    def timeseries(self, interval: float, end: float) -> list[dict]:
        """Cumulative delivery ratio and delay sampled every ``interval`` s."""
        rows = []
        created = sorted(self.created_at.values())
        deliveries = sorted(self.deliveries.values(), key=lambda d: d.at)
        t = interval
        ci = di = 0
        lat_sum = ratio_sum = 0.0
        while t <= end + 1e-9:
            while ci < len(created) and created[ci] <= t:
                ci += 1
            while di < len(deliveries) and deliveries[di].at <= t:
                lat_sum += deliveries[di].latency
                ratio_sum += deliveries[di].latency / deliveries[di].ttl
                di += 1
            rows.append({
                "time": t,
                "created": ci,
                "delivered": di,
                "delivery_prob": di / ci if ci else 0.0,
                "delay_prob": ratio_sum / di if di else 0.0,
                "latency_avg": lat_sum / di if di else 0.0,
            })
            t += interval
        return rows


def _mean(values: list[float]) -> float:
    # fsum keeps the result independent of summation order
    return math.fsum(values) / len(values) if values else 0.0


def average_reports(reports: list[StatsReport]) -> StatsReport:
    """Field-wise mean of several reports (counts become real-valued)."""
    if not reports:
        raise ValueError("no reports to average")
    n = len(reports)
    data = {}
    for name in StatsReport.__dataclass_fields__:
        values = [getattr(r, name) for r in reports]
        if isinstance(values[0], bool):
            data[name] = all(values)
        else:
            data[name] = sum(values) / n
    return StatsReport(**data)
