"""In-order processing elements.

Two profiles:

* ``ndp`` - a 150 MHz soft core, one hardware thread, depth-1 pipeline.  DMA
  calls return immediately; only status polls (``wait``/``sync``) and full
  FIFOs stall the core.
* ``pim`` - a 350 MHz DPU with up to 24 tasklets.  One instruction issues per
  cycle, picked among ready tasklets (longest-ready first, ties to the lower
  tasklet id), and a tasklet can issue at most once every ``pipeline_depth``
  cycles.  DMA calls block the calling tasklet only.

Programs are lists of action tuples::

    ("size", nbytes)                    # NDP: write the transfer-size register
    ("preload", main_addr, pad_off)     # NDP: size comes from the register
    ("preload", main_addr, pad_off, n)  # PIM: explicit size
    ("unload", pad_off, main_addr, n)
    ("sync", direction, count)          # NDP: first `count` requests observed done
    ("wait", "preload"|"unload"|"all")  # NDP: poll until the queue(s) drain
    ("status",)                         # NDP: one status read
    ("read", pad_off, nbytes)           # one cycle per 8-byte word
    ("write", pad_off, nbytes)
    ("compute", n_instructions)
    ("addr", n)                         # address bookkeeping for the next request

``addr`` instructions are charged to the issue bucket alongside the DMA
register writes, so compute counts only cover the kernel's own work.

Each PE's ``process()`` is a generator that yields the absolute time (ps) of
its next memory submission; the caller resumes it once the global clock has
reached that time, which keeps channel arbitration in true arrival order
across PEs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Generator, Sequence

from .engine import cycle_ps as _cycle_ps
from .errors import UnknownTasklet
from .pul import PRELOAD, UNLOAD, DmaRequest, PulEngine
from .scratchpad import WORD_BYTES, Scratchpad, words

MASK64 = (1 << 64) - 1
INF = float("inf")


@dataclass(frozen=True)
class PeProfile:
    name: str
    freq_mhz: float
    pipeline_depth: int = 1
    max_tasklets: int = 1

    def __post_init__(self):
        if self.pipeline_depth < 1:
            raise ValueError("pipeline_depth must be >= 1")
        if self.max_tasklets < 1:
            raise ValueError("max_tasklets must be >= 1")

    @property
    def cycle_ps(self) -> int:
        return _cycle_ps(self.freq_mhz)

    @property
    def is_pim(self) -> bool:
        return self.max_tasklets > 1 or self.pipeline_depth > 1

    @property
    def peak_instr_per_sec(self) -> float:
        return self.freq_mhz * 1e6


NDP = PeProfile("ndp", 150, pipeline_depth=1, max_tasklets=1)
PIM = PeProfile("pim", 350, pipeline_depth=11, max_tasklets=24)
PROFILES = {"ndp": NDP, "pim": PIM}


@dataclass
class PeStats:
    total_cycles: int = 0
    compute_cycles: int = 0
    issue_cycles: int = 0
    stall_cycles: int = 0
    idle_cycles: int = 0
    compute_instructions: int = 0
    issue_instructions: int = 0
    finish_ps: int = 0
    value_sum: int = 0
    per_tasklet: list = field(default_factory=list)

    @property
    def instructions_retired(self) -> int:
        return self.compute_instructions + self.issue_instructions

    @property
    def ipc(self) -> float:
        return self.instructions_retired / self.total_cycles if self.total_cycles else 0.0

    @property
    def utilization(self) -> float:
        return self.compute_cycles / self.total_cycles if self.total_cycles else 0.0

    def check_closed(self) -> None:
        parts = self.compute_cycles + self.issue_cycles + self.stall_cycles + self.idle_cycles
        if parts != self.total_cycles:
            raise AssertionError(f"cycle buckets sum to {parts}, total is {self.total_cycles}")


def _word_sum(data: bytes) -> int:
    return sum(int.from_bytes(data[k:k + WORD_BYTES], "little")
               for k in range(0, len(data), WORD_BYTES))


class NdpCore:
    """Single-threaded soft core driving its own PUL engine."""

    def __init__(self, name: str, profile: PeProfile, engine: PulEngine, pad: Scratchpad,
                 program: Sequence[tuple]):
        self.name = name
        self.profile = profile
        self.engine = engine
        self.pad = pad
        self.program = program
        self.stats = PeStats()
        self._write_counter = 0

    def process(self) -> Generator[int, None, None]:
        cyc = self.profile.cycle_ps
        eng = self.engine
        pad = self.pad
        st = self.stats
        value_mode = pad.value_mode
        t = 0
        compute = issue = stall = 0
        for act in self.program:
            op = act[0]
            if op == "compute":
                n = act[1]
                t += n * cyc
                compute += n
            elif op == "read":
                pad.check_read(act[1], act[2])
                n = words(act[2])
                t += n * cyc
                compute += n
                if value_mode:
                    st.value_sum = (st.value_sum + _word_sum(pad.content[act[1]:act[1] + act[2]])) & MASK64
            elif op == "preload" or op == "unload":
                if op == "preload":
                    req = DmaRequest(PRELOAD, act[1], act[2], eng.size_register)
                else:
                    req = DmaRequest(UNLOAD, act[2], act[1], act[3])
                eng.memory.check_range(req.main_addr, req.size_bytes)
                s = eng.backpressure_cycles(req.direction, t)
                o = eng.issue_cycles[req.direction]
                stall += s
                issue += o
                t += (s + o) * cyc
                req.enqueued_at = t
                yield t
                eng.dispatch(req, t)
            elif op == "sync":
                s = eng.sync(act[1], act[2], t)
                if s is not None:
                    stall += s
                    issue += 1
                    t += (s + 1) * cyc
            elif op == "wait":
                s = eng.wait(act[1], t)
                stall += s
                issue += 1
                t += (s + 1) * cyc
            elif op == "write":
                nbytes = act[2]
                if nbytes:
                    if value_mode:
                        data = b"".join(
                            (self._write_counter + k).to_bytes(WORD_BYTES, "little")
                            for k in range(words(nbytes))
                        )[:nbytes]
                        self._write_counter += words(nbytes)
                    else:
                        data = bytes(nbytes)
                    n = pad.write(act[1], data, t)
                    t += n * cyc
                    compute += n
            elif op == "addr":
                issue += act[1]
                t += act[1] * cyc
            elif op == "size":
                c = eng.set_transfer_size(act[1], t)
                issue += c
                t += c * cyc
            elif op == "status":
                eng.status(t)
                issue += 1
                t += cyc
            else:
                raise ValueError(f"unknown action {op!r}")
        st.compute_cycles = st.compute_instructions = compute
        st.issue_cycles = st.issue_instructions = issue
        st.stall_cycles = stall
        st.idle_cycles = 0
        st.total_cycles = compute + issue + stall
        st.finish_ps = t
        st.per_tasklet = [{"instructions": compute + issue}]


class PimDpu:
    """Multi-tasklet DPU; each tasklet runs its own action list."""

    def __init__(self, name: str, profile: PeProfile, engine: PulEngine, pad: Scratchpad,
                 tasklet_programs: Sequence[Sequence[tuple]]):
        if not 1 <= len(tasklet_programs) <= profile.max_tasklets:
            raise UnknownTasklet(
                f"{len(tasklet_programs)} tasklets requested, profile allows 1..{profile.max_tasklets}"
            )
        self.name = name
        self.profile = profile
        self.engine = engine
        self.pad = pad
        self.programs = tasklet_programs
        self.stats = PeStats()

    def process(self) -> Generator[int, None, None]:
        cyc = self.profile.cycle_ps
        depth = self.profile.pipeline_depth
        eng = self.engine
        pad = self.pad
        st = self.stats
        value_mode = pad.value_mode
        n = len(self.programs)

        pc = [0] * n            # index of the current action
        left = [0] * n          # micro-ops left in the current action
        finish = [0] * n
        resumed = [False] * n   # first issue after a DMA block
        blocked_until: dict[int, float] = {}
        instr = [0] * n
        dma_count = [0] * n

        ready: list[tuple[int, int]] = []   # (ready_cycle, tasklet)
        subs: list[tuple[int, int, DmaRequest]] = []  # (submit_cycle, tasklet, request)

        def load_action(i: int) -> bool:
            """Prime tasklet ``i`` with its next action; False when the program is done."""
            prog = self.programs[i]
            while pc[i] < len(prog):
                act = prog[pc[i]]
                op = act[0]
                if op == "compute" or op == "addr":
                    left[i] = act[1]
                elif op == "read" or op == "write":
                    left[i] = words(act[2])
                elif op == "preload" or op == "unload":
                    left[i] = eng.issue_cycles[op]
                else:
                    raise ValueError(f"action {op!r} is not available on a PIM tasklet")
                if left[i] > 0:
                    return True
                pc[i] += 1
            return False

        for i in range(n):
            if load_action(i):
                heapq.heappush(ready, (0, i))

        compute = issue = stall = idle = 0
        cur = 0  # first cycle not yet accounted

        def account_gap(a: int, b: int) -> None:
            nonlocal stall, idle
            if b <= a:
                return
            horizon = a
            for until in blocked_until.values():
                if until > horizon:
                    horizon = until
            s = min(b, horizon) - a
            stall += s
            idle += (b - a) - s

        while ready or subs:
            next_issue = max(cur, ready[0][0]) if ready else INF
            next_sub = subs[0][0] if subs else INF
            if next_sub <= next_issue:
                c, i, req = heapq.heappop(subs)
                account_gap(cur, c)
                if c > cur:
                    cur = c
                yield c * cyc
                ticket = eng.dispatch(req, c * cyc)
                back = -(-ticket.completion_time // cyc)
                blocked_until[i] = back
                finish[i] = back
                pc[i] += 1
                if load_action(i):
                    resumed[i] = True
                    heapq.heappush(ready, (back, i))
                continue

            c, i = heapq.heappop(ready)
            c = next_issue
            account_gap(cur, c)
            cur = c + 1
            if resumed[i]:
                resumed[i] = False
                blocked_until.pop(i, None)
                eng.observe(c * cyc)
            elif i in blocked_until and blocked_until[i] <= c:
                del blocked_until[i]
            act = self.programs[i][pc[i]]
            op = act[0]
            instr[i] += 1
            left[i] -= 1
            if op == "addr":
                issue += 1
                if left[i] == 0:
                    pc[i] += 1
                    if not load_action(i):
                        continue
                heapq.heappush(ready, (c + depth, i))
                continue
            if op == "preload" or op == "unload":
                issue += 1
                if left[i] == 0:
                    if op == "preload":
                        req = DmaRequest(PRELOAD, act[1], act[2], act[3])
                    else:
                        req = DmaRequest(UNLOAD, act[2], act[1], act[3])
                    eng.memory.check_range(req.main_addr, req.size_bytes)
                    req.enqueued_at = (c + depth) * cyc
                    dma_count[i] += 1
                    blocked_until[i] = INF
                    heapq.heappush(subs, (c + depth, i, req))
                    continue
                heapq.heappush(ready, (c + depth, i))
                continue
            compute += 1
            if op == "read" and left[i] == words(act[2]) - 1:
                pad.check_read(act[1], act[2])
                if value_mode:
                    st.value_sum = (st.value_sum + _word_sum(pad.content[act[1]:act[1] + act[2]])) & MASK64
            elif op == "write" and left[i] == words(act[2]) - 1:
                pad.check_write(act[1], act[2])
            finish[i] = c + depth
            if left[i] == 0:
                pc[i] += 1
                if not load_action(i):
                    continue
            heapq.heappush(ready, (c + depth, i))

        total = max(finish) if finish else 0
        account_gap(cur, total)
        st.compute_cycles = st.compute_instructions = compute
        st.issue_cycles = st.issue_instructions = issue
        st.stall_cycles = stall
        st.idle_cycles = idle
        st.total_cycles = total
        st.finish_ps = total * cyc
        st.per_tasklet = [{"instructions": instr[i], "dma_requests": dma_count[i]}
                          for i in range(n)]


def exec_compute(profile: PeProfile, instructions: Sequence[int] | int, tasklet_id: int | None = None) -> int:
    """Cycles to retire pure compute work.

    ``instructions`` is either a single count (for ``tasklet_id``, default 0,
    running alone) or one count per tasklet.
    """
    if isinstance(instructions, int):
        if instructions < 0:
            raise ValueError("instruction count must be >= 0")
        tid = 0 if tasklet_id is None else tasklet_id
        if not 0 <= tid < profile.max_tasklets:
            raise UnknownTasklet(f"tasklet {tid} not in 0..{profile.max_tasklets - 1}")
        counts = [instructions]
    else:
        counts = list(instructions)
    if not profile.is_pim:
        return sum(counts)
    from .memory import MemorySystem
    pad = Scratchpad()
    eng = PulEngine(MemorySystem(), pad, profile.cycle_ps)
    dpu = PimDpu("pe", profile, eng, pad, [[("compute", k)] if k else [] for k in counts])
    for _ in dpu.process():
        raise AssertionError("pure compute never touches memory")
    return dpu.stats.total_cycles
