import math

import pytest
from hypothesis import given, settings, strategies as st

from pulsim.analysis import speedup
from pulsim.errors import ConfigError, InvalidRegion, RowTooLarge, ScratchpadOverflow
from pulsim.memory import NDP_CHANNEL, NVM
from pulsim.pe import NDP, PIM
from pulsim.runner import RunPoint, execute, run_report
from pulsim.system import SystemConfig, simulate
from pulsim.workloads import (
    DB_OPS, DbOpProfile, KernelSpec, TraceSpec, build_flush_kernel, build_programs,
    build_sum_kernel, generate_trace,
)


# traces
def test_empty_trace():
    assert generate_trace(TraceSpec(0, 1 << 20)) == []


def test_trace_deterministic_and_aligned():
    a = generate_trace(TraceSpec(500, 1 << 20, seed=3, alignment=128))
    assert a == generate_trace(TraceSpec(500, 1 << 20, seed=3, alignment=128))
    assert a != generate_trace(TraceSpec(500, 1 << 20, seed=4, alignment=128))
    assert all(0 <= x < 1 << 20 and x % 128 == 0 for x in a)


def test_trace_uniformity():
    region = 1 << 26
    addrs = generate_trace(TraceSpec(100_000, region, seed=11))
    buckets = [0] * 16
    for x in addrs:
        buckets[x * 16 // region] += 1
    assert all(abs(b - 6250) <= 0.05 * 6250 for b in buckets)


def test_trace_invalid_region():
    with pytest.raises(InvalidRegion):
        generate_trace(TraceSpec(10, 32, alignment=64))
    with pytest.raises(InvalidRegion):
        generate_trace(TraceSpec(10, 1 << 20, alignment=48))


# SUM schedules
def test_distance_four_prefix_shape():
    spec = KernelSpec(element_count=12, distance=4, writeback=True, addr_instr=0)
    prog = build_sum_kernel(spec)
    assert prog[0] == ("size", 64)
    assert [a[0] for a in prog[1:5]] == ["preload"] * 4
    # steady state: next four preloads, then elements 0..3, then one 256 B unload
    body = prog[5:]
    assert [a[0] for a in body[:4]] == ["preload"] * 4
    assert [a[2] for a in body[:4]] == [4 * 64, 5 * 64, 6 * 64, 7 * 64]
    assert body[4] == ("sync", "preload", 4)
    reads = [a for a in body[5:] if a[0] == "read"][:4]
    assert [r[1] for r in reads] == [0, 64, 128, 192]
    unload = next(a for a in body if a[0] == "unload")
    assert unload[1] == 0 and unload[3] == 256


def test_batch_distance_one_overlaps_two_requests():
    # the next element is in flight while the current one is awaited, so a
    # latency-bound loop runs about twice as fast as the phased one
    base = KernelSpec(element_count=256, intensity=4)
    phased = run_report(RunPoint(kernel=base.with_(strategy="phased")))
    batch = run_report(RunPoint(kernel=base.with_(strategy="batch", distance=1)))
    assert speedup(phased, batch) == pytest.approx(2.0, rel=0.05)


def test_batch_d16_speedup_matches_closed_form():
    c, n = 8, 1024
    spec = KernelSpec(element_count=n, intensity=c)
    phased = run_report(RunPoint(kernel=spec.with_(strategy="phased")))
    batch = run_report(RunPoint(kernel=spec.with_(strategy="batch", distance=16)))
    cyc = NDP.cycle_ps
    lat = math.ceil((NVM.read_latency_ns * 1000 + NDP_CHANNEL.transfer_ps(64)) / cyc)
    issue = spec.addr_instr + 4
    # phased: issue + polls for the full round trip + compute; batch: issue + compute
    predicted = (issue + lat + c) / (issue + c)
    assert speedup(phased, batch) == pytest.approx(predicted, rel=0.03)


def test_scratchpad_overflow():
    with pytest.raises(ScratchpadOverflow):
        build_sum_kernel(KernelSpec(distance=64, transfer_size=1024))
    assert build_sum_kernel(KernelSpec(distance=64, transfer_size=1024, fit_distance=True).fitted(65536))


def test_spec_validation():
    with pytest.raises(ConfigError):
        KernelSpec(strategy="batch", distance=0).validate()
    with pytest.raises(ConfigError):
        KernelSpec(selectivity=1.5).validate()
    with pytest.raises(ConfigError):
        KernelSpec(kind="join").validate()


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 120), st.integers(1, 12), st.integers(1, 20), st.integers(0, 5))
def test_work_conservation_across_strategies(n, c, d, seed):
    base = KernelSpec(element_count=n, intensity=c, distance=d, seed=seed)
    reps = [run_report(RunPoint(kernel=base.with_(strategy=s))) for s in ("phased", "sequential", "batch")]
    assert len({r.compute_instructions for r in reps}) == 1
    assert len({r.bytes_preloaded for r in reps}) == 1
    assert reps[0].compute_instructions == n * c


@pytest.mark.parametrize("strategy", ["phased", "sequential", "batch"])
def test_sum_values_match_ground_truth(strategy):
    spec = KernelSpec(element_count=300, strategy=strategy, distance=7, seed=5)
    out = execute(RunPoint(kernel=spec, pe_count=3, value_mode=True))
    assert out.value_ok is True


def test_value_mode_writeback_lands_in_memory():
    spec = KernelSpec(element_count=16, distance=4, writeback=True, seed=1)
    progs = build_programs(spec, NDP)
    res = simulate(progs, SystemConfig(value_mode=True))
    unl = [a for a in progs[0] if a[0] == "unload"][0]
    pre = [a for a in progs[0] if a[0] == "preload"][0]
    assert res.memory.read_bytes(unl[2], 64) == res.memory.read_bytes(pre[1], 64)


# aggregation
def test_aggregate_scales_compute_only():
    one = run_report(RunPoint(pe="pim", tasklets=4, kernel=KernelSpec(kind="aggregate_n", element_count=64)))
    four = run_report(RunPoint(pe="pim", tasklets=4,
                               kernel=KernelSpec(kind="aggregate_n", attribute_count=4, element_count=64)))
    assert four.compute_instructions == 4 * one.compute_instructions
    assert four.transfer_count == one.transfer_count
    assert one.compute_instructions == 64 * KernelSpec().attr_cost


def test_row_too_large():
    with pytest.raises(RowTooLarge):
        build_programs(KernelSpec(kind="aggregate_n", attribute_count=9, transfer_size=64), PIM, tasklets=2)


# filter
def _filter(mat, s, n=1024, tasklets=1):
    return run_report(RunPoint(pe="pim", tasklets=tasklets, kernel=KernelSpec(
        kind="filter", materialization=mat, selectivity=s, element_count=n)))


def test_filter_full_bounds():
    assert _filter("full", 0.0).bytes_unloaded == 0
    r = _filter("full", 1.0)
    assert r.bytes_unloaded == r.bytes_preloaded


def test_filter_bitvector_output_ratio():
    for s in (0.0, 0.5, 1.0):
        r = _filter("bitvector", s)
        assert r.bytes_unloaded * 512 == r.bytes_preloaded


def test_filter_rejected_on_ndp():
    with pytest.raises(ConfigError):
        build_programs(KernelSpec(kind="filter"), NDP)


# flush
def test_memcpy_flush_transfer_count():
    prog = build_flush_kernel(KernelSpec(kind="flush", flush_method="memcpy", flush_threshold=2048),
                              updates=256)
    unloads = [a for a in prog if a[0] == "unload"]
    assert len(unloads) == 32 and all(a[3] == 64 for a in unloads)
    assert sum(1 for a in prog if a == ("wait", "unload")) == 32


def test_flush_threshold_64_pul_vs_memcpy():
    base = KernelSpec(kind="flush", element_count=512, flush_threshold=64)
    pul = run_report(RunPoint(kernel=base.with_(flush_method="pul")))
    mc = run_report(RunPoint(kernel=base.with_(flush_method="memcpy")))
    assert pul.transfer_count == mc.transfer_count
    assert pul.exec_time_ns < mc.exec_time_ns


def test_zero_updates_zero_flushes():
    assert build_flush_kernel(KernelSpec(kind="flush"), updates=0) == []


def test_flush_threshold_limit():
    with pytest.raises(ScratchpadOverflow):
        build_flush_kernel(KernelSpec(kind="flush", flush_threshold=40000), updates=1)


def test_db_op_profiles():
    assert all(p.instr_per_record > 0 for p in DB_OPS.values())
    with pytest.raises(ValueError):
        DbOpProfile("bad", 0)
