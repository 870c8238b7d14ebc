"""Main-memory devices behind one shared channel.

Every request first spends the device latency (these phases overlap freely
between outstanding requests), then occupies the channel for
``size / bandwidth``.  Channel time is claimed in arrival order, so a
request submitted at ``now`` finishes at::

    max(now + latency, channel_free_at) + size / bandwidth

NVM is the same device with different latencies, the way a latency
injector emulates it over DRAM.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .engine import PS_PER_NS, ns_to_ps
from .errors import AddressOutOfRange, EmptyWindow, ZeroSizeTransfer

if TYPE_CHECKING:
    from .pul import DmaRequest

GIB = 1 << 30
WORD_BYTES = 8
DEFAULT_MEMORY_BYTES = 1 << 34


@dataclass(frozen=True)
class DeviceProfile:
    label: str
    read_latency_ns: int
    write_latency_ns: int

    def __post_init__(self):
        if self.read_latency_ns <= 0 or self.write_latency_ns <= 0:
            raise ValueError(f"device {self.label!r}: latencies must be > 0")

    def latency_ns(self, direction: str) -> int:
        return self.read_latency_ns if direction == "preload" else self.write_latency_ns


@dataclass(frozen=True)
class ChannelProfile:
    label: str
    bandwidth_bytes_per_sec: int

    def __post_init__(self):
        if self.bandwidth_bytes_per_sec <= 0:
            raise ValueError(f"channel {self.label!r}: bandwidth must be > 0")

    def transfer_ps(self, size: int) -> int:
        # rounded up so a saturated channel never reports more than its bandwidth
        return -(-size * 10**12 // self.bandwidth_bytes_per_sec)


# NVM timings from the emulated-NVM setup; DRAM is 350 ns / 3.5
NVM = DeviceProfile("nvm", 350, 170)
DRAM = DeviceProfile("dram", 100, 100)
NDP_CHANNEL = ChannelProfile("ndp_8gib", 8 * GIB)

DEVICES = {"nvm": NVM, "dram": DRAM}
CHANNELS = {"ndp_8gib": NDP_CHANNEL}


def word_value(addr: int) -> int:
    """Initial content of the 64-bit word at ``addr`` (value-check mode)."""
    return ((addr >> 3) * 2654435761) % (1 << 32)


@dataclass
class TransferTicket:
    request: "DmaRequest"
    issue_time: int
    transfer_start: int
    completion_time: int
    queued_channel_wait_ns: float

    @property
    def latency_ps(self) -> int:
        return self.completion_time - self.issue_time


@dataclass
class MemorySystem:
    device: DeviceProfile = NVM
    channel: ChannelProfile = NDP_CHANNEL
    size_bytes: int = DEFAULT_MEMORY_BYTES
    value_mode: bool = False
    channel_free_at: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    _starts: list = field(default_factory=list, repr=False)
    _ends: list = field(default_factory=list, repr=False)
    _sizes: list = field(default_factory=list, repr=False)
    _written: dict = field(default_factory=dict, repr=False)

    def check_range(self, addr: int, size: int) -> None:
        if size <= 0:
            raise ZeroSizeTransfer(f"transfer of {size} bytes at {addr:#x}")
        if addr < 0 or addr + size > self.size_bytes:
            raise AddressOutOfRange(
                f"[{addr:#x}, {addr + size:#x}) outside main memory of {self.size_bytes} bytes"
            )

    def submit(self, request: "DmaRequest", now: int) -> TransferTicket:
        size = request.size_bytes
        self.check_range(request.main_addr, size)
        ready = now + ns_to_ps(self.device.latency_ns(request.direction))
        start = ready if ready > self.channel_free_at else self.channel_free_at
        done = start + self.channel.transfer_ps(size)
        self.channel_free_at = done
        self._starts.append(start)
        self._ends.append(done)
        self._sizes.append(size)
        if request.direction == "preload":
            self.bytes_read += size
        else:
            self.bytes_written += size
        return TransferTicket(request, now, start, done, (start - ready) / PS_PER_NS)

    @property
    def transfer_count(self) -> int:
        return len(self._sizes)

    def busy_ps(self) -> int:
        return sum(e - s for s, e in zip(self._starts, self._ends))

    def observed_throughput(self, start_ps: int, end_ps: int) -> float:
        """Bytes per second moved over the channel inside ``[start_ps, end_ps)``.

        Transfers straddling a window edge contribute pro rata to the part of
        their transfer phase inside the window.
        """
        if end_ps <= start_ps:
            raise EmptyWindow(f"window [{start_ps}, {end_ps}) is empty")
        moved = 0.0
        # transfer phases are disjoint and sorted, so ends are sorted too
        i = bisect_left(self._ends, start_ps + 1)
        while i < len(self._starts) and self._starts[i] < end_ps:
            s, e, size = self._starts[i], self._ends[i], self._sizes[i]
            overlap = min(e, end_ps) - max(s, start_ps)
            if overlap > 0:
                moved += size * overlap / (e - s)
            i += 1
        return moved * 10**12 / (end_ps - start_ps)

    # value-check mode content
    def read_bytes(self, addr: int, size: int) -> bytes:
        out = bytearray()
        for a in range(addr - addr % WORD_BYTES, addr + size, WORD_BYTES):
            word = self._written.get(a)
            if word is None:
                word = word_value(a).to_bytes(WORD_BYTES, "little")
            out += word
        skip = addr % WORD_BYTES
        return bytes(out[skip:skip + size])

    def write_bytes(self, addr: int, data: bytes) -> None:
        if addr % WORD_BYTES or len(data) % WORD_BYTES:
            raise ValueError("value-mode writes must be word aligned")
        for k in range(0, len(data), WORD_BYTES):
            self._written[addr + k] = bytes(data[k:k + WORD_BYTES])
