"""PE-local scratchpad with explicit in-flight region tracking."""

from __future__ import annotations

import bisect
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Any

from .errors import (
    OutOfBounds,
    ReadDuringPendingPreload,
    ScratchpadOverflow,
    WriteDuringPendingUnload,
)

WORD_BYTES = 8
DEFAULT_CAPACITY = 64 * 1024
MAX_CAPACITY = 64 * 1024


def words(nbytes: int) -> int:
    """Access cycles for ``nbytes``: one per 64-bit word touched."""
    return -(-nbytes // WORD_BYTES)


@dataclass
class InFlightRegion:
    offset: int
    length: int
    direction: str
    ticket: Any = None
    seq: int = 0


class Scratchpad:
    """Explicitly managed SRAM buffer.

    Regions targeted by an outstanding preload may not be read, regions
    feeding an outstanding unload may not be written.  A region stays in
    flight until the owning PE *observes* the completion through the status
    register (see :meth:`retire`), not when the transfer physically ends.
    """

    def __init__(self, capacity_bytes: int = DEFAULT_CAPACITY, value_mode: bool = False,
                 max_capacity: int = MAX_CAPACITY):
        if capacity_bytes <= 0 or capacity_bytes > max_capacity:
            raise ScratchpadOverflow(
                f"scratchpad capacity {capacity_bytes} outside (0, {max_capacity}]"
            )
        if capacity_bytes % WORD_BYTES:
            raise ValueError("capacity must be a multiple of the word size")
        self.capacity = capacity_bytes
        self.value_mode = value_mode
        self.content = bytearray(capacity_bytes) if value_mode else None
        self._regions: dict[str, deque[InFlightRegion]] = {"preload": deque(), "unload": deque()}
        # per direction: in-flight (offset, seq, end) sorted by offset, plus the
        # longest region ever begun, which bounds how far back an overlap can start
        self._index: dict[str, list[tuple[int, int, int]]] = {"preload": [], "unload": []}
        self._longest = {"preload": 0, "unload": 0}
        self._seq = itertools.count()

    def _bounds(self, offset: int, length: int) -> None:
        if offset < 0 or length < 0 or offset + length > self.capacity:
            raise OutOfBounds(
                f"[{offset}, {offset + length}) outside scratchpad of {self.capacity} bytes"
            )

    def _overlaps(self, direction: str, offset: int, length: int) -> bool:
        if length == 0:
            return False
        index = self._index[direction]
        end = offset + length
        i = bisect.bisect_right(index, (offset - self._longest[direction], -1, 0))
        while i < len(index) and index[i][0] < end:
            if index[i][2] > offset:
                return True
            i += 1
        return False

    # in-flight bookkeeping
    def begin(self, direction: str, offset: int, length: int, ticket: Any = None) -> InFlightRegion:
        self._bounds(offset, length)
        region = InFlightRegion(offset, length, direction, ticket, next(self._seq))
        if length:
            bisect.insort(self._index[direction], (offset, region.seq, offset + length))
            self._longest[direction] = max(self._longest[direction], length)
        self._regions[direction].append(region)
        return region

    def retire(self, direction: str, count: int) -> None:
        """Drop the ``count`` oldest in-flight regions of ``direction``."""
        regions = self._regions[direction]
        index = self._index[direction]
        for _ in range(min(count, len(regions))):
            r = regions.popleft()
            if r.length:
                key = (r.offset, r.seq, r.offset + r.length)
                del index[bisect.bisect_left(index, key)]

    def in_flight(self, direction: str) -> int:
        return len(self._regions[direction])

    # data access
    def check_read(self, offset: int, length: int) -> None:
        self._bounds(offset, length)
        if self._overlaps("preload", offset, length):
            raise ReadDuringPendingPreload(
                f"read of [{offset}, {offset + length}) before its preload was observed complete"
            )

    def check_write(self, offset: int, length: int) -> None:
        self._bounds(offset, length)
        if self._overlaps("unload", offset, length):
            raise WriteDuringPendingUnload(
                f"write to [{offset}, {offset + length}) while an unload from it is pending"
            )

    def read(self, offset: int, length: int, now: int = 0) -> bytes:
        self.check_read(offset, length)
        if self.content is None:
            return bytes(length)
        return bytes(self.content[offset:offset + length])

    def write(self, offset: int, data: bytes, now: int = 0) -> int:
        """Store ``data``; returns the PE cycles the store costs."""
        if not data:
            return 0
        self.check_write(offset, len(data))
        if self.content is not None:
            self.content[offset:offset + len(data)] = data
        return words(len(data))

    def fill(self, offset: int, data: bytes) -> None:
        """DMA-side store, bypassing PE hazard checks."""
        if self.content is not None:
            self.content[offset:offset + len(data)] = data
