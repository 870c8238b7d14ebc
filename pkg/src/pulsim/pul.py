"""The pre-/un-loading DMA engine attached to each PE.

Two bounded FIFOs (preload, unload) accept requests without blocking the
PE; a transfer-size register is only rewritten when its value changes; a
status register reports how many requests of each queue are still pending.
Requests complete in arrival order, which lets software wait for "the first
k requests" by polling pending counts.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .engine import cycles_between
from .errors import InvalidTransferSize
from .memory import MemorySystem, TransferTicket
from .scratchpad import WORD_BYTES, Scratchpad

PRELOAD = "preload"
UNLOAD = "unload"
DIRECTIONS = (PRELOAD, UNLOAD)

DEFAULT_FIFO_DEPTH = 64
DEFAULT_TRANSFER_SIZE = 64
# two address-register writes plus two dispatch cycles; unloads add a size write
ISSUE_PRELOAD_CYCLES = 4
ISSUE_UNLOAD_CYCLES = 6


@dataclass
class DmaRequest:
    direction: str
    main_addr: int
    pad_offset: int
    size_bytes: int
    enqueued_at: int = 0


@dataclass
class EnqueueResult:
    request: DmaRequest
    ticket: TransferTicket
    stall_cycles: int
    issue_cycles: int
    depth: int


@dataclass
class StatusReading:
    preloads_pending: int
    unloads_pending: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.preloads_pending, self.unloads_pending)


@dataclass
class _Queue:
    completions: list[int] = field(default_factory=list)
    observed: int = 0  # completions the PE has seen through the status register

    def pending_at(self, t: int) -> int:
        return len(self.completions) - bisect_right(self.completions, t)

    def done_at(self, t: int) -> int:
        return bisect_right(self.completions, t)


class PulEngine:
    """DMA engine state for one PE (shared by all tasklets on PIM)."""

    def __init__(self, memory: MemorySystem, pad: Scratchpad, cycle_ps: int,
                 fifo_depth: int = DEFAULT_FIFO_DEPTH,
                 issue_preload: int = ISSUE_PRELOAD_CYCLES,
                 issue_unload: int = ISSUE_UNLOAD_CYCLES):
        self.memory = memory
        self.pad = pad
        self.cycle_ps = cycle_ps
        self.fifo_depth = fifo_depth
        self.issue_cycles = {PRELOAD: issue_preload, UNLOAD: issue_unload}
        self.size_register = DEFAULT_TRANSFER_SIZE
        self.register_write_count = 0
        self._size_written = False
        self.queues = {PRELOAD: _Queue(), UNLOAD: _Queue()}
        self.bytes_moved = {PRELOAD: 0, UNLOAD: 0}
        self.max_depth_seen = {PRELOAD: 0, UNLOAD: 0}

    # registers
    def set_transfer_size(self, nbytes: int, now: int = 0) -> int:
        """Write the size register; returns PE cycles charged (0 when unchanged)."""
        if nbytes < WORD_BYTES or nbytes % WORD_BYTES or nbytes > self.pad.capacity:
            raise InvalidTransferSize(
                f"transfer size {nbytes} must be a multiple of {WORD_BYTES} in "
                f"[{WORD_BYTES}, {self.pad.capacity}]"
            )
        if self._size_written and nbytes == self.size_register:
            return 0
        self.size_register = nbytes
        self._size_written = True
        self.register_write_count += 1
        return 1

    # queue state
    def issued(self, direction: str) -> int:
        return len(self.queues[direction].completions)

    def pending(self, direction: str, now: int) -> int:
        return self.queues[direction].pending_at(now)

    def completed(self, direction: str, now: int) -> int:
        return self.queues[direction].done_at(now)

    def known_complete(self, direction: str) -> int:
        return self.queues[direction].observed

    def completion_of(self, direction: str, index: int) -> int:
        return self.queues[direction].completions[index]

    def backpressure_cycles(self, direction: str, now: int) -> int:
        """Cycles the PE must stall before the FIFO accepts another request."""
        q = self.queues[direction]
        if q.pending_at(now) < self.fifo_depth:
            return 0
        oldest_blocking = q.completions[len(q.completions) - self.fifo_depth]
        return cycles_between(now, oldest_blocking, self.cycle_ps)

    # enqueue
    def dispatch(self, request: DmaRequest, at: int) -> TransferTicket:
        """Hand ``request`` to memory at time ``at`` (end of the issue cycles)."""
        q = self.queues[request.direction]
        if q.pending_at(at) >= self.fifo_depth:
            raise RuntimeError("dispatch into a full FIFO; caller skipped back-pressure")
        if request.direction == UNLOAD and self.pad.value_mode:
            self.memory.write_bytes(
                request.main_addr,
                bytes(self.pad.content[request.pad_offset:request.pad_offset + request.size_bytes]),
            )
        ticket = self.memory.submit(request, at)
        if request.direction == PRELOAD and self.pad.value_mode:
            self.pad.fill(request.pad_offset,
                          self.memory.read_bytes(request.main_addr, request.size_bytes))
        q.completions.append(ticket.completion_time)
        self.pad.begin(request.direction, request.pad_offset, request.size_bytes, ticket)
        self.bytes_moved[request.direction] += request.size_bytes
        depth = q.pending_at(at)
        if depth > self.max_depth_seen[request.direction]:
            self.max_depth_seen[request.direction] = depth
        return ticket

    def _enqueue(self, request: DmaRequest, now: int) -> EnqueueResult:
        self.memory.check_range(request.main_addr, request.size_bytes)
        stall = self.backpressure_cycles(request.direction, now)
        issue = self.issue_cycles[request.direction]
        at = now + (stall + issue) * self.cycle_ps
        request.enqueued_at = at
        ticket = self.dispatch(request, at)
        return EnqueueResult(request, ticket, stall, issue,
                             self.queues[request.direction].pending_at(at))

    def preload(self, main_addr: int, pad_offset: int, now: int = 0) -> EnqueueResult:
        req = DmaRequest(PRELOAD, main_addr, pad_offset, self.size_register)
        return self._enqueue(req, now)

    def unload(self, pad_offset: int, main_addr: int, size_bytes: int, now: int = 0) -> EnqueueResult:
        req = DmaRequest(UNLOAD, main_addr, pad_offset, size_bytes)
        return self._enqueue(req, now)

    # status / synchronisation
    def observe(self, at: int) -> StatusReading:
        """Read the status register at ``at``; retires observed pad regions."""
        counts = []
        for d in DIRECTIONS:
            q = self.queues[d]
            done = q.done_at(at)
            if done > q.observed:
                self.pad.retire(d, done - q.observed)
                q.observed = done
            counts.append(len(q.completions) - done)
        return StatusReading(*counts)

    def status(self, now: int = 0) -> StatusReading:
        """One status poll starting at ``now``; costs one PE cycle."""
        return self.observe(now + self.cycle_ps)

    def poll_cycles_until(self, ready_at: int, now: int) -> int:
        """Status polls (one cycle each) until a poll ends at or after ``ready_at``."""
        return max(1, cycles_between(now, ready_at, self.cycle_ps))

    def wait(self, kind: str = "all", now: int = 0) -> int:
        """Poll until the selected queue(s) drain; returns the stall cycles.

        The final, successful poll costs one more cycle on top of the stall.
        """
        kinds = DIRECTIONS if kind == "all" else (kind,)
        ready_at = now
        for d in kinds:
            comps = self.queues[d].completions
            if comps and comps[-1] > ready_at:
                ready_at = comps[-1]
        polls = self.poll_cycles_until(ready_at, now)
        self.observe(now + polls * self.cycle_ps)
        return polls - 1

    def sync(self, direction: str, count: int, now: int = 0) -> int | None:
        """Make sure the first ``count`` requests of ``direction`` are observed done.

        Returns ``None`` when an earlier status read already proved it (no
        poll needed), otherwise the stall cycles as for :meth:`wait`.
        """
        q = self.queues[direction]
        if q.observed >= count:
            return None
        if count > len(q.completions):
            raise ValueError(f"sync on {count} {direction}s but only {len(q.completions)} issued")
        polls = self.poll_cycles_until(q.completions[count - 1], now)
        self.observe(now + polls * self.cycle_ps)
        return polls - 1
