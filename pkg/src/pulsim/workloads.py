"""Kernel schedule builders.

Every builder turns a :class:`KernelSpec` into PE action lists (see
:mod:`pulsim.pe` for the action vocabulary).  Builders are pure: the same
kernel description and seed always give the same schedule.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError, InvalidRegion, RowTooLarge, ScratchpadOverflow
from .pe import PeProfile
from .scratchpad import DEFAULT_CAPACITY, WORD_BYTES

KINDS = ("sum", "aggregate_n", "filter", "flush", "memcpy_baseline")
STRATEGIES = ("phased", "sequential", "batch")
MATERIALIZATIONS = ("full", "bitvector")
FLUSH_METHODS = ("pul", "blocking", "memcpy")
CACHE_LINE = 64
BITVECTOR_BLOCK = 64  # bytes of bit-vector per unload


@dataclass(frozen=True)
class TraceSpec:
    element_count: int
    region_bytes: int
    seed: int = 0
    alignment: int = 64


def generate_trace(spec: TraceSpec) -> list[int]:
    """Uniformly random, ``alignment``-aligned addresses in ``[0, region_bytes)``."""
    a = spec.alignment
    if a <= 0 or a & (a - 1):
        raise InvalidRegion(f"alignment {a} is not a power of two")
    if spec.region_bytes < a:
        raise InvalidRegion(f"region of {spec.region_bytes} bytes is smaller than alignment {a}")
    if spec.element_count < 0:
        raise InvalidRegion("element_count must be >= 0")
    rng = random.Random(spec.seed)
    slots = spec.region_bytes // a
    return [rng.randrange(slots) * a for _ in range(spec.element_count)]


@dataclass(frozen=True)
class DbOpProfile:
    name: str
    instr_per_record: int

    def __post_init__(self):
        if self.instr_per_record <= 0:
            raise ValueError(f"profile {self.name!r}: instr_per_record must be > 0")


# placeholder costs; override from the run config
DB_OPS = {
    "sum": DbOpProfile("sum", 4),
    "filter": DbOpProfile("filter", 2),
    "aggregation": DbOpProfile("aggregation", 6),
    "mvcc_visibility_check": DbOpProfile("mvcc_visibility_check", 12),
    "hash_probe": DbOpProfile("hash_probe", 20),
}


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "sum"
    element_count: int = 1024
    intensity: int = 4            # instructions per element (SUM cost c)
    strategy: str = "batch"
    distance: int = 64
    transfer_size: int = 64
    addr_instr: int = 1           # loading the next trace address before a preload
    attribute_count: int = 1
    attr_cost: int = 4            # instructions per aggregated attribute
    selectivity: float = 0.0
    materialization: str = "full"
    key_instr: int = 2
    bitvector_instr: int = 3
    flush_threshold: int = 2048
    flush_method: str = "pul"
    update_instr: int = 4
    writeback: bool = False
    fit_distance: bool = False    # shrink distance until the double buffer fits
    region_bytes: int = 1 << 26
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.strategy != "phased" and self.distance < 1:
            raise ConfigError(f"{self.strategy} strategy needs distance >= 1")
        if self.element_count < 0:
            raise ConfigError("element_count must be >= 0")
        if not 0.0 <= self.selectivity <= 1.0:
            raise ConfigError(f"selectivity {self.selectivity} outside [0, 1]")
        if self.materialization not in MATERIALIZATIONS:
            raise ConfigError(f"unknown materialization {self.materialization!r}")
        if self.flush_method not in FLUSH_METHODS:
            raise ConfigError(f"unknown flush method {self.flush_method!r}")
        if self.intensity < 1 or self.attr_cost < 1 or self.update_instr < 1:
            raise ConfigError("per-element instruction costs must be >= 1")
        if self.attribute_count < 1:
            raise ConfigError("attribute_count must be >= 1")
        if self.transfer_size < WORD_BYTES or self.transfer_size % WORD_BYTES:
            raise ConfigError(f"transfer_size {self.transfer_size} must be a positive multiple of 8")
        if self.writeback and self.strategy != "batch":
            raise ConfigError("writeback is only defined for the batch strategy")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "KernelSpec":
        return replace(self, **changes)

    def fitted(self, pad_capacity: int) -> "KernelSpec":
        """Distance clamped to what a ``2 * d * T`` double buffer allows, when enabled."""
        if not self.fit_distance or self.strategy == "phased":
            return self
        d = max(1, min(self.distance, pad_capacity // (2 * self.transfer_size)))
        return replace(self, distance=d) if d != self.distance else self

    @property
    def compute_per_element(self) -> int:
        if self.kind == "aggregate_n":
            return self.attribute_count * self.attr_cost
        if self.kind == "filter":
            extra = self.bitvector_instr if self.materialization == "bitvector" else 0
            return self.key_instr + extra
        if self.kind == "flush":
            return self.update_instr
        return self.intensity


def _trace_for(spec: KernelSpec, pe_index: int) -> list[int]:
    return generate_trace(TraceSpec(spec.element_count, spec.region_bytes,
                                    spec.seed * 1_000_003 + pe_index, spec.transfer_size))


def _consume(spec: KernelSpec, off: int) -> list[tuple]:
    """Scratchpad work for one preloaded element at pad offset ``off``."""
    if spec.kind == "aggregate_n":
        row = spec.attribute_count * WORD_BYTES
        acts: list[tuple] = [("read", off, row)]
        extra = spec.attribute_count * (spec.attr_cost - 1)
    else:
        acts = [("read", off, WORD_BYTES)]
        extra = spec.intensity - 1
    if extra:
        acts.append(("compute", extra))
    return acts


def _check_row(spec: KernelSpec) -> None:
    if spec.kind == "aggregate_n" and spec.attribute_count * WORD_BYTES > spec.transfer_size:
        raise RowTooLarge(
            f"{spec.attribute_count} attributes ({spec.attribute_count * WORD_BYTES} B) "
            f"exceed the {spec.transfer_size} B transfer"
        )


def working_set(spec: KernelSpec) -> int:
    if spec.kind in ("sum", "aggregate_n"):
        if spec.strategy == "phased":
            return spec.transfer_size
        return 2 * spec.distance * spec.transfer_size
    if spec.kind == "memcpy_baseline":
        return spec.transfer_size
    if spec.kind == "flush":
        return 2 * spec.flush_threshold
    return spec.transfer_size


def build_sum_kernel(spec: KernelSpec, addrs: list[int] | None = None,
                     pad_capacity: int = DEFAULT_CAPACITY, out_base: int | None = None) -> list[tuple]:
    """NDP action list for a SUM (or row aggregation) over a random trace.

    * phased: preload, wait, consume - no overlap;
    * sequential: keep ``distance`` requests ahead, one new request per element;
    * batch: issue batch ``k+1`` (``distance`` requests), then consume batch ``k``.

    Batch and sequential use a double buffer of ``2 * distance`` slots.
    """
    spec.validate()
    _check_row(spec)
    if addrs is None:
        addrs = _trace_for(spec, 0)
    n = len(addrs)
    T = spec.transfer_size
    need = working_set(spec)
    if need > pad_capacity:
        raise ScratchpadOverflow(f"working set of {need} B exceeds the {pad_capacity} B scratchpad")
    if out_base is None:
        out_base = spec.region_bytes
    prog: list[tuple] = [("size", T)]
    if n == 0:
        return prog
    slots = 1 if spec.strategy == "phased" else 2 * spec.distance

    def issue(i: int) -> None:
        if spec.addr_instr:
            prog.append(("addr", spec.addr_instr))
        prog.append(("preload", addrs[i], (i % slots) * T))

    def use(i: int) -> None:
        prog.extend(_consume(spec, (i % slots) * T))

    if spec.strategy == "phased":
        for i in range(n):
            issue(i)
            prog.append(("wait", "preload"))
            use(i)
    elif spec.strategy == "sequential":
        d = spec.distance
        for i in range(min(d, n)):
            issue(i)
        for i in range(n):
            if i + d < n:
                issue(i + d)
            prog.append(("sync", "preload", i + 1))
            use(i)
    else:
        d = spec.distance
        nb = -(-n // d)
        for i in range(min(d, n)):
            issue(i)
        for k in range(nb):
            if spec.writeback and k >= 1:
                # batch k+1 reuses the buffer whose writeback was issued last iteration
                prog.append(("sync", "unload", k))
            for i in range((k + 1) * d, min((k + 2) * d, n)):
                issue(i)
            prog.append(("sync", "preload", min((k + 1) * d, n)))
            lo, hi = k * d, min((k + 1) * d, n)
            for i in range(lo, hi):
                use(i)
            if spec.writeback:
                prog.append(("unload", (lo % slots) * T, out_base + lo * T, (hi - lo) * T))
    prog.append(("wait", "all"))
    return prog


def build_memcpy_kernel(spec: KernelSpec, addrs: list[int] | None = None,
                        pad_capacity: int = DEFAULT_CAPACITY) -> list[tuple]:
    """Blocking, cache-line sized copies of each element, then the same consume step."""
    spec.validate()
    if addrs is None:
        addrs = _trace_for(spec, 0)
    T = spec.transfer_size
    if T > pad_capacity:
        raise ScratchpadOverflow(f"element of {T} B exceeds the {pad_capacity} B scratchpad")
    chunk = min(CACHE_LINE, T)
    prog: list[tuple] = [("size", chunk)]
    for a in addrs:
        if spec.addr_instr:
            prog.append(("addr", spec.addr_instr))
        for off in range(0, T, chunk):
            prog.append(("preload", a + off, off))
            prog.append(("wait", "preload"))
        prog.extend(_consume(spec, 0))
    prog.append(("wait", "all"))
    return prog


def build_flush_kernel(spec: KernelSpec, updates: int | None = None, out_base: int = 0,
                       pad_capacity: int = DEFAULT_CAPACITY) -> list[tuple]:
    """Scratchpad update loop that flushes every ``flush_threshold`` bytes.

    * pul: one asynchronous unload per flush, double-buffered;
    * blocking: one unload per flush followed by a wait;
    * memcpy: blocking 64 B unloads until the buffer is drained.
    """
    spec.validate()
    thr = spec.flush_threshold
    if thr < WORD_BYTES or thr % WORD_BYTES:
        raise ConfigError(f"flush threshold {thr} must be a positive multiple of 8")
    if 2 * thr > pad_capacity:
        raise ScratchpadOverflow(f"flush threshold {thr} B exceeds half of the {pad_capacity} B scratchpad")
    n = spec.element_count if updates is None else updates
    prog: list[tuple] = []
    buf = 0
    fill = 0
    flushes = 0
    out = out_base

    def flush(nbytes: int) -> None:
        nonlocal buf, fill, flushes, out
        base = buf * thr
        if spec.flush_method == "memcpy":
            for off in range(0, nbytes, CACHE_LINE):
                size = min(CACHE_LINE, nbytes - off)
                prog.append(("unload", base + off, out + off, size))
                prog.append(("wait", "unload"))
        else:
            prog.append(("unload", base, out, nbytes))
            if spec.flush_method == "blocking":
                prog.append(("wait", "unload"))
        flushes += 1
        out += nbytes
        buf ^= 1
        fill = 0
        if spec.flush_method == "pul" and flushes >= 2:
            # the buffer we switch to was flushed one round earlier
            prog.append(("sync", "unload", flushes - 1))

    for _ in range(n):
        if spec.update_instr > 1:
            prog.append(("compute", spec.update_instr - 1))
        prog.append(("write", buf * thr + fill, WORD_BYTES))
        fill += WORD_BYTES
        if fill == thr:
            flush(thr)
    if fill:
        flush(fill)
    if prog:
        prog.append(("wait", "all"))
    return prog


def _passes(spec: KernelSpec, count: int, pe_index: int) -> list[bool]:
    rng = random.Random(spec.seed * 7919 + pe_index)
    s = spec.selectivity
    return [rng.random() < s for _ in range(count)]


def build_pim_stream(spec: KernelSpec, tasklets: int, pe_index: int = 0,
                     pad_capacity: int = DEFAULT_CAPACITY) -> list[list[tuple]]:
    """Per-tasklet action lists for SUM / aggregation / filter on a PIM PE.

    Elements are dealt round-robin to tasklets.  DMA is tasklet-blocking, so
    each tasklet owns one transfer slot; interleaving comes from the other
    tasklets.
    """
    spec.validate()
    _check_row(spec)
    T = spec.transfer_size
    bv_base = tasklets * T
    need = bv_base + (tasklets * BITVECTOR_BLOCK if spec.kind == "filter" else 0)
    if need > pad_capacity:
        raise ScratchpadOverflow(f"{tasklets} tasklet buffers need {need} B, scratchpad has {pad_capacity} B")
    n = spec.element_count
    if spec.kind == "filter":
        # sequential table scan; every PE owns a contiguous slice
        addrs = [(pe_index * n + i) * T for i in range(n)]
        passes = _passes(spec, n, pe_index)
    else:
        addrs = _trace_for(spec, pe_index)
        passes = []
    out_base = spec.region_bytes + pe_index * max(n, 1) * T
    progs: list[list[tuple]] = [[] for _ in range(tasklets)]
    bits = [0] * tasklets
    out_ptr = [out_base + j * ((n // tasklets + 1) * T) for j in range(tasklets)]
    records_per_block = BITVECTOR_BLOCK * 8
    for i, a in enumerate(addrs):
        j = i % tasklets
        prog = progs[j]
        slot = j * T
        if spec.addr_instr:
            prog.append(("addr", spec.addr_instr))
        prog.append(("preload", a, slot, T))
        if spec.kind == "filter":
            prog.append(("read", slot, WORD_BYTES))
            if spec.key_instr > 1:
                prog.append(("compute", spec.key_instr - 1))
            if spec.materialization == "full":
                if passes[i]:
                    prog.append(("unload", slot, out_ptr[j], T))
                    out_ptr[j] += T
            else:
                prog.append(("compute", spec.bitvector_instr))
                bits[j] += 1
                if bits[j] == records_per_block:
                    prog.append(("unload", bv_base + j * BITVECTOR_BLOCK, out_ptr[j], BITVECTOR_BLOCK))
                    out_ptr[j] += BITVECTOR_BLOCK
                    bits[j] = 0
        else:
            prog.extend(_consume(spec, slot))
    if spec.kind == "filter" and spec.materialization == "bitvector":
        for j in range(tasklets):
            if bits[j]:
                size = -(-bits[j] // 64) * WORD_BYTES
                progs[j].append(("unload", bv_base + j * BITVECTOR_BLOCK, out_ptr[j], size))
    return progs


def build_programs(spec: KernelSpec, profile: PeProfile, pe_count: int = 1, tasklets: int = 1,
                   pad_capacity: int = DEFAULT_CAPACITY) -> list:
    """Programs for ``pe_count`` PEs; each PE gets its own trace slice/seed."""
    spec = spec.fitted(pad_capacity)
    spec.validate()
    if pe_count < 1:
        raise ConfigError("pe_count must be >= 1")
    if profile.is_pim:
        if spec.kind in ("flush", "memcpy_baseline"):
            raise ConfigError(f"kernel {spec.kind!r} is only defined for the NDP profile")
        if not 1 <= tasklets <= profile.max_tasklets:
            raise ConfigError(f"tasklets {tasklets} outside 1..{profile.max_tasklets}")
        return [build_pim_stream(spec, tasklets, p, pad_capacity) for p in range(pe_count)]
    if tasklets != 1:
        raise ConfigError("the NDP profile runs a single hardware thread (tasklets = 1)")
    if spec.kind == "filter":
        raise ConfigError("the filter kernel is only defined for the PIM profile")
    progs = []
    for p in range(pe_count):
        if spec.kind == "flush":
            progs.append(build_flush_kernel(spec, out_base=p * (spec.element_count * WORD_BYTES + 4096),
                                            pad_capacity=pad_capacity))
        elif spec.kind == "memcpy_baseline":
            progs.append(build_memcpy_kernel(spec, _trace_for(spec, p), pad_capacity))
        else:
            out = spec.region_bytes + p * max(spec.element_count, 1) * spec.transfer_size
            progs.append(build_sum_kernel(spec, _trace_for(spec, p), pad_capacity, out))
    return progs


def expected_sum(spec: KernelSpec, pe_count: int = 1) -> int:
    """Ground truth for value-check mode: first word of every traced element."""
    from .memory import word_value
    total = 0
    for p in range(pe_count):
        for a in _trace_for(spec, p):
            total += word_value(a)
    return total & ((1 << 64) - 1)
