"""Figures of merit computed from finished runs.

Operational intensity is measured in compute instructions per preloaded
byte, and attained performance in compute instructions per second.  DMA
issue and address bookkeeping instructions are overhead and do not count
as useful work on the roofline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import NotSaturable, WorkMismatch
from .memory import ChannelProfile, DeviceProfile
from .pe import PeProfile
from .system import SimResult

SATURATION_FRACTION = 0.95
PLATEAU_TOLERANCE = 0.01


@dataclass
class MetricsReport:
    exec_time_ns: float
    bytes_preloaded: int
    bytes_unloaded: int
    throughput_bytes_per_sec: float
    ipc: float
    pe_utilization: float
    stall_breakdown: dict
    compute_instructions: int
    issue_instructions: int
    transfer_count: int
    register_writes: int
    peak_instr_per_sec: float
    bandwidth_bytes_per_sec: float
    pe_count: int = 1
    value_sum: int = 0
    per_pe: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def intensity(self) -> float:
        """Compute instructions per preloaded byte."""
        if self.bytes_preloaded == 0:
            return math.inf if self.compute_instructions else 0.0
        return self.compute_instructions / self.bytes_preloaded

    @property
    def attained_instr_per_sec(self) -> float:
        if self.exec_time_ns <= 0:
            return 0.0
        return self.compute_instructions / (self.exec_time_ns * 1e-9)

    def roofline(self) -> "RooflinePoint":
        roof, bound = roofline_bound(self.intensity, self.peak_instr_per_sec, self.bandwidth_bytes_per_sec)
        return RooflinePoint(self.intensity, self.attained_instr_per_sec, roof, bound)


@dataclass(frozen=True)
class RooflinePoint:
    intensity_instr_per_byte: float
    attained_instr_per_sec: float
    roof_instr_per_sec: float
    bound: str

    def under_roof(self, slack: float = 0.02) -> bool:
        return self.attained_instr_per_sec <= self.roof_instr_per_sec * (1 + slack)


def report_from_result(result: SimResult, profile: PeProfile, channel: ChannelProfile,
                       config: Mapping | None = None) -> MetricsReport:
    stats = result.pe_stats
    mem = result.memory
    exec_ps = result.exec_time_ps
    total = sum(s.total_cycles for s in stats)
    instr = sum(s.instructions_retired for s in stats)
    compute = sum(s.compute_cycles for s in stats)
    breakdown = {
        "compute": compute,
        "issue": sum(s.issue_cycles for s in stats),
        "stall": sum(s.stall_cycles for s in stats),
        "idle": sum(s.idle_cycles for s in stats),
        "total": total,
    }
    throughput = mem.observed_throughput(0, exec_ps) if exec_ps > 0 else 0.0
    return MetricsReport(
        exec_time_ns=exec_ps / 1000,
        bytes_preloaded=mem.bytes_read,
        bytes_unloaded=mem.bytes_written,
        throughput_bytes_per_sec=throughput,
        ipc=instr / total if total else 0.0,
        pe_utilization=compute / total if total else 0.0,
        stall_breakdown=breakdown,
        compute_instructions=sum(s.compute_instructions for s in stats),
        issue_instructions=sum(s.issue_instructions for s in stats),
        transfer_count=mem.transfer_count,
        register_writes=sum(e.register_write_count for e in result.engines),
        peak_instr_per_sec=profile.peak_instr_per_sec * len(stats),
        bandwidth_bytes_per_sec=channel.bandwidth_bytes_per_sec,
        pe_count=len(stats),
        value_sum=result.value_sum,
        per_pe=[{
            "total_cycles": s.total_cycles, "compute_cycles": s.compute_cycles,
            "issue_cycles": s.issue_cycles, "stall_cycles": s.stall_cycles,
            "idle_cycles": s.idle_cycles, "ipc": s.ipc, "tasklets": s.per_tasklet,
        } for s in stats],
        config=dict(config or {}),
    )


# roofline
def roofline_bound(intensity: float, peak_instr_per_sec: float, bandwidth: float) -> tuple[float, str]:
    """``(min(peak, I * BW), bound)``; ties count as compute-bound."""
    if intensity < 0 or peak_instr_per_sec < 0 or bandwidth < 0:
        raise ValueError("roofline inputs must be >= 0")
    mem_roof = math.inf if math.isinf(intensity) and bandwidth > 0 else intensity * bandwidth
    if peak_instr_per_sec <= mem_roof:
        return float(peak_instr_per_sec), "compute"
    return float(mem_roof), "bandwidth"


def roofline_attainable(intensity: float, peak_instr_per_sec: float, bandwidth: float) -> float:
    return roofline_bound(intensity, peak_instr_per_sec, bandwidth)[0]


# comparisons
def speedup(baseline: MetricsReport, variant: MetricsReport) -> float:
    if (baseline.compute_instructions != variant.compute_instructions
            or baseline.bytes_preloaded != variant.bytes_preloaded):
        raise WorkMismatch(
            f"baseline does {baseline.compute_instructions} instr / {baseline.bytes_preloaded} B, "
            f"variant {variant.compute_instructions} instr / {variant.bytes_preloaded} B"
        )
    if baseline.exec_time_ns == variant.exec_time_ns:
        return 1.0
    return baseline.exec_time_ns / variant.exec_time_ns


# latency hiding
def request_latency_cycles(profile: PeProfile, device: DeviceProfile, channel: ChannelProfile,
                           transfer_size: int) -> float:
    """Unloaded round trip of one preload (device latency plus transfer), in PE cycles."""
    ps = device.read_latency_ns * 1000 + channel.transfer_ps(transfer_size)
    return ps / profile.cycle_ps


def per_element_cycles(kernel, issue_preload: int) -> int:
    """PE cycles one batch-strategy element costs when nothing stalls."""
    return kernel.addr_instr + issue_preload + kernel.compute_per_element


def saturation_distance(profile: PeProfile, kernel, device: DeviceProfile, channel: ChannelProfile,
                        issue_preload: int = 4) -> int:
    """Smallest batch distance that hides the request latency.

    The last request of a batch is dispatched, then the PE spends one sync
    poll, consumes the previous batch and issues the next one before polling
    for it.  Hiding needs ``d * (addr + issue + c) >= L - 2`` cycles.
    """
    lat = request_latency_cycles(profile, device, channel, kernel.transfer_size)
    per = per_element_cycles(kernel, issue_preload)
    return max(1, math.ceil((lat - 2) / per))


def measured_plateau(times: Mapping[int, float], tolerance: float = PLATEAU_TOLERANCE,
                     reference: int | None = None) -> int:
    """First distance whose time is within ``tolerance`` of the reference (largest) distance."""
    if not times:
        raise ValueError("no distances given")
    ref_d = max(times) if reference is None else reference
    ref = times[ref_d]
    for d in sorted(times):
        if times[d] <= ref * (1 + tolerance):
            return d
    return ref_d


def interleave_factor(instr_per_record: int, profile: PeProfile, device: DeviceProfile,
                      channel: ChannelProfile, transfer_size: int = 64) -> float:
    """How many times an operation fits into one request's latency."""
    return request_latency_cycles(profile, device, channel, transfer_size) / instr_per_record


def transfer_break_even(profile: PeProfile, kernel, channel: ChannelProfile,
                        issue_preload: int = 4) -> float:
    """Largest transfer size one PE can move per element without becoming bandwidth-bound.

    Below it, the channel time of a transfer hides under the PE work of one
    element (issue plus compute plus the amortised batch poll).
    """
    per = per_element_cycles(kernel, issue_preload) + 1 / max(1, kernel.distance)
    return per * profile.cycle_ps * 1e-12 * channel.bandwidth_bytes_per_sec


# bandwidth saturation
def pes_to_saturation(run: Callable[[int], MetricsReport], max_pes: int = 14,
                      fraction: float = SATURATION_FRACTION) -> int:
    """Smallest PE count whose run reaches ``fraction`` of the channel bandwidth.

    ``run(n)`` must return the report of the configuration with ``n`` PEs.
    """
    for n in range(1, max_pes + 1):
        rep = run(n)
        if rep.throughput_bytes_per_sec >= fraction * rep.bandwidth_bytes_per_sec:
            return n
    raise NotSaturable(f"bandwidth not saturated with up to {max_pes} PEs")


def saturation_from_rows(rows: Iterable[tuple[int, float]], bandwidth: float,
                         fraction: float = SATURATION_FRACTION) -> int | None:
    """Smallest swept PE count reaching ``fraction`` of bandwidth, ``None`` if none does."""
    hits = [n for n, tp in rows if tp >= fraction * bandwidth]
    return min(hits) if hits else None
