"""Multi-PE system assembly and the event-driven run loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .engine import DEFAULT_EVENT_LIMIT, Event, EventEngine
from .memory import NDP_CHANNEL, NVM, ChannelProfile, DeviceProfile, MemorySystem
from .pe import NDP, NdpCore, PeProfile, PeStats, PimDpu
from .pul import DEFAULT_FIFO_DEPTH, ISSUE_PRELOAD_CYCLES, ISSUE_UNLOAD_CYCLES, PulEngine
from .scratchpad import DEFAULT_CAPACITY, Scratchpad


@dataclass
class SystemConfig:
    profile: PeProfile = NDP
    device: DeviceProfile = NVM
    channel: ChannelProfile = NDP_CHANNEL
    fifo_depth: int = DEFAULT_FIFO_DEPTH
    issue_preload: int = ISSUE_PRELOAD_CYCLES
    issue_unload: int = ISSUE_UNLOAD_CYCLES
    pad_capacity: int = DEFAULT_CAPACITY
    value_mode: bool = False
    event_limit: int = DEFAULT_EVENT_LIMIT
    record_trace: bool = False


@dataclass
class SimResult:
    exec_time_ps: int
    pe_stats: list[PeStats]
    memory: MemorySystem
    engines: list[PulEngine]
    pads: list[Scratchpad]
    trace: list[str] = field(default_factory=list)
    events: int = 0

    @property
    def value_sum(self) -> int:
        return sum(s.value_sum for s in self.pe_stats) & ((1 << 64) - 1)


def simulate(programs: Sequence, config: SystemConfig | None = None) -> SimResult:
    """Run one program per PE to completion.

    For NDP profiles each program is an action list; for PIM profiles it is
    a list of per-tasklet action lists.  All PEs share one memory channel.
    """
    cfg = config or SystemConfig()
    memory = MemorySystem(cfg.device, cfg.channel, value_mode=cfg.value_mode)
    ev = EventEngine(cfg.event_limit, cfg.record_trace)
    cyc = cfg.profile.cycle_ps
    pes = []
    engines = []
    pads = []
    for k, prog in enumerate(programs):
        pad = Scratchpad(cfg.pad_capacity, cfg.value_mode)
        eng = PulEngine(memory, pad, cyc, cfg.fifo_depth, cfg.issue_preload, cfg.issue_unload)
        name = f"pe{k}"
        if cfg.profile.is_pim:
            pe = PimDpu(name, cfg.profile, eng, pad, prog)
        else:
            pe = NdpCore(name, cfg.profile, eng, pad, prog)
        pes.append(pe)
        engines.append(eng)
        pads.append(pad)

    def make_handler(name: str, gen):
        def handler(_event: Event) -> None:
            t = next(gen, None)
            if t is not None:
                ev.at(t, name, "dma")
        return handler

    for pe in pes:
        ev.register(pe.name, make_handler(pe.name, pe.process()))
        ev.at(0, pe.name, "start")
    ev.run_until_idle()

    stats = [pe.stats for pe in pes]
    exec_time = max((s.finish_ps for s in stats), default=0)
    return SimResult(exec_time, stats, memory, engines, pads, ev.trace_lines(), ev.dispatched)
