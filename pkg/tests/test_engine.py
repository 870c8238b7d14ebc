import pytest
from hypothesis import given, strategies as st

from pulsim.engine import (
    Event, EventEngine, cycle_ps, cycles_between, ns_to_ps, ps_to_ns,
)
from pulsim.errors import EventLimitExceeded, SchedulingInPast


def test_cycle_lengths():
    assert cycle_ps(150) == 6667
    assert cycle_ps(350) == 2857
    assert ps_to_ns(cycle_ps(150)) == pytest.approx(6.667)
    with pytest.raises(ValueError):
        cycle_ps(0)


def test_cycles_between_rounds_up():
    assert cycles_between(0, 0, 10) == 0
    assert cycles_between(5, 3, 10) == 0
    assert cycles_between(0, 1, 10) == 1
    assert cycles_between(0, 10, 10) == 1
    assert cycles_between(0, 11, 10) == 2


def test_first_schedule_gets_handle_one():
    eng = EventEngine()
    h = eng.at(0, "x")
    assert h.seq == 1
    assert eng.depth == 1


def test_same_time_dispatches_in_insertion_order():
    eng = EventEngine()
    seen = []
    eng.register("a", lambda e: seen.append(("a", e.seq)))
    eng.register("b", lambda e: seen.append(("b", e.seq)))
    eng.at(7, "b")
    eng.at(7, "a")
    eng.at(7, "b")
    eng.run_until_idle()
    assert seen == [("b", 1), ("a", 2), ("b", 3)]


def test_single_event_sets_clock():
    eng = EventEngine()
    eng.at(ns_to_ps(5), "x")
    assert eng.run_until_idle() == ns_to_ps(5)


def test_empty_queue_returns_zero():
    assert EventEngine().run_until_idle() == 0


def test_chain_of_three():
    eng = EventEngine()
    step = ns_to_ps(10)

    def handler(ev):
        if ev.payload < 3:
            eng.at(ev.fire_at + step, "c", payload=ev.payload + 1)

    eng.register("c", handler)
    eng.at(step, "c", payload=1)
    assert eng.run_until_idle() == ns_to_ps(30)


def test_self_rescheduling_hits_limit():
    eng = EventEngine(event_limit=1000)
    eng.register("loop", lambda ev: eng.at(ev.fire_at + 1, "loop"))
    eng.at(0, "loop")
    with pytest.raises(EventLimitExceeded):
        eng.run_until_idle()


def test_scheduling_in_past_rejected():
    eng = EventEngine()
    eng.register("x", lambda ev: eng.at(ev.fire_at - 1, "x"))
    eng.at(10, "x")
    with pytest.raises(SchedulingInPast):
        eng.run_until_idle()


def test_cancelled_events_are_skipped():
    eng = EventEngine()
    seen = []
    eng.register("x", lambda ev: seen.append(ev.payload))
    eng.at(1, "x", payload="keep")
    h = eng.at(2, "x", payload="drop")
    eng.cancel(h)
    assert eng.depth == 1
    eng.run_until_idle()
    assert seen == ["keep"]


def test_trace_format():
    eng = EventEngine(record_trace=True)
    eng.at(ns_to_ps(1.5), "pe0", "dma")
    eng.run_until_idle()
    assert eng.trace_lines() == ["1.500,1,pe0,dma"]


@given(st.lists(st.integers(min_value=0, max_value=10**6), max_size=60))
def test_clock_monotone_and_order_total(times):
    eng = EventEngine(record_trace=True)
    for t in times:
        eng.schedule(Event(t, target="x"))
    eng.run_until_idle()
    trace = eng.trace
    assert [(t, s) for t, s, _, _ in trace] == sorted((t, s) for t, s, _, _ in trace)
    assert len({s for _, s, _, _ in trace}) == len(times)
