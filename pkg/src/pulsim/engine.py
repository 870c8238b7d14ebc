"""Discrete-event core.

The clock is an integer count of picoseconds.  Memory latencies are given in
whole nanoseconds and PE cycles are rounded to the nearest picosecond, so
150 MHz and 350 MHz cores interleave with ns-denominated memory events
without floating-point drift.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import EventLimitExceeded, SchedulingInPast

PS_PER_NS = 1000
DEFAULT_EVENT_LIMIT = 10**9


def ns_to_ps(ns: float) -> int:
    return int(round(ns * PS_PER_NS))


def ps_to_ns(ps: int) -> float:
    return ps / PS_PER_NS


def cycle_ps(freq_mhz: float) -> int:
    """Length of one clock cycle, e.g. 150 MHz -> 6667 ps."""
    if freq_mhz <= 0:
        raise ValueError("frequency must be positive")
    return int(round(10**6 / freq_mhz))


def cycles_between(start_ps: int, end_ps: int, cyc_ps: int) -> int:
    """Whole cycles needed to get from ``start_ps`` to at least ``end_ps``."""
    if end_ps <= start_ps:
        return 0
    return -(-(end_ps - start_ps) // cyc_ps)


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int = -1
    target: str = field(default="", compare=False)
    kind: str = field(default="", compare=False)
    payload: Any = field(default=None, compare=False)


@dataclass
class EventHandle:
    seq: int
    event: Event
    cancelled: bool = False


class EventEngine:
    """Ordered dispatch of events by ``(fire_at, seq)``.

    Handlers are registered per target name and receive the fired
    :class:`Event`.  ``seq`` is assigned on scheduling, so events sharing a
    timestamp fire in insertion order.
    """

    def __init__(self, event_limit: int = DEFAULT_EVENT_LIMIT, record_trace: bool = False):
        self.now = 0
        self.event_limit = event_limit
        self.dispatched = 0
        self._seq = 0
        self._queue: list[tuple[int, int, EventHandle]] = []
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self.trace: list[tuple[int, int, str, str]] | None = [] if record_trace else None

    def register(self, target: str, handler: Callable[[Event], None]) -> None:
        self._handlers[target] = handler

    def schedule(self, event: Event) -> EventHandle:
        if event.fire_at < self.now:
            raise SchedulingInPast(
                f"event for {event.target!r} at {event.fire_at} ps is before now={self.now} ps"
            )
        self._seq += 1
        event.seq = self._seq
        handle = EventHandle(self._seq, event)
        heapq.heappush(self._queue, (event.fire_at, event.seq, handle))
        return handle

    def at(self, fire_at: int, target: str, kind: str = "", payload: Any = None) -> EventHandle:
        return self.schedule(Event(fire_at, -1, target, kind, payload))

    def cancel(self, handle: EventHandle) -> None:
        handle.cancelled = True

    @property
    def depth(self) -> int:
        return sum(1 for _, _, h in self._queue if not h.cancelled)

    def run_until_idle(self) -> int:
        queue = self._queue
        handlers = self._handlers
        trace = self.trace
        while queue:
            fire_at, seq, handle = heapq.heappop(queue)
            if handle.cancelled:
                continue
            self.dispatched += 1
            if self.dispatched > self.event_limit:
                raise EventLimitExceeded(
                    f"more than {self.event_limit} events dispatched; model is livelocked"
                )
            self.now = fire_at
            ev = handle.event
            if trace is not None:
                trace.append((fire_at, seq, ev.target, ev.kind))
            handler = handlers.get(ev.target)
            if handler is not None:
                handler(ev)
        return self.now

    def trace_lines(self) -> list[str]:
        """Event trace as ``time_ns,seq,target,kind`` records."""
        if self.trace is None:
            return []
        return [f"{t / PS_PER_NS:.3f},{seq},{target},{kind}" for t, seq, target, kind in self.trace]
