"""One fully specified simulation point and its execution."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .analysis import MetricsReport, report_from_result
from .memory import NDP_CHANNEL, NVM, ChannelProfile, DeviceProfile
from .pe import PROFILES, PeProfile
from .pul import DEFAULT_FIFO_DEPTH, ISSUE_PRELOAD_CYCLES, ISSUE_UNLOAD_CYCLES
from .scratchpad import DEFAULT_CAPACITY
from .system import SystemConfig, simulate
from .workloads import KernelSpec, build_programs, expected_sum


@dataclass(frozen=True)
class RunPoint:
    pe: str = "ndp"
    pe_count: int = 1
    tasklets: int = 1
    pipeline_depth: int | None = None
    device: DeviceProfile = NVM
    channel: ChannelProfile = NDP_CHANNEL
    kernel: KernelSpec = field(default_factory=KernelSpec)
    fifo_depth: int = DEFAULT_FIFO_DEPTH
    issue_preload: int = ISSUE_PRELOAD_CYCLES
    issue_unload: int = ISSUE_UNLOAD_CYCLES
    pad_capacity: int = DEFAULT_CAPACITY
    value_mode: bool = False
    record_trace: bool = False

    @property
    def profile(self) -> PeProfile:
        base = PROFILES[self.pe]
        if self.pipeline_depth is not None and self.pipeline_depth != base.pipeline_depth:
            return replace(base, pipeline_depth=self.pipeline_depth)
        return base

    def with_(self, **changes) -> "RunPoint":
        return replace(self, **changes)

    def with_kernel(self, **changes) -> "RunPoint":
        return replace(self, kernel=replace(self.kernel, **changes))

    def echo(self) -> dict:
        k = self.kernel.fitted(self.pad_capacity)
        return {
            "pe": self.pe, "pe_count": self.pe_count, "tasklets": self.tasklets,
            "device": self.device.label, "channel": self.channel.label,
            "kind": k.kind, "strategy": k.strategy, "distance": k.distance,
            "transfer_size": k.transfer_size, "intensity": k.intensity,
            "attribute_count": k.attribute_count, "selectivity": k.selectivity,
            "materialization": k.materialization, "flush_method": k.flush_method,
            "flush_threshold": k.flush_threshold, "element_count": k.element_count,
            "seed": k.seed,
        }


@dataclass
class RunOutput:
    report: MetricsReport
    trace: list[str]
    value_ok: bool | None = None


def execute(point: RunPoint) -> RunOutput:
    profile = point.profile
    programs = build_programs(point.kernel, profile, point.pe_count, point.tasklets, point.pad_capacity)
    cfg = SystemConfig(
        profile=profile, device=point.device, channel=point.channel,
        fifo_depth=point.fifo_depth, issue_preload=point.issue_preload,
        issue_unload=point.issue_unload, pad_capacity=point.pad_capacity,
        value_mode=point.value_mode, record_trace=point.record_trace,
    )
    result = simulate(programs, cfg)
    report = report_from_result(result, profile, point.channel, point.echo())
    value_ok = None
    if point.value_mode and point.kernel.kind == "sum":
        value_ok = result.value_sum == expected_sum(point.kernel, point.pe_count)
    return RunOutput(report, result.trace, value_ok)


def run_report(point: RunPoint) -> MetricsReport:
    return execute(point).report
