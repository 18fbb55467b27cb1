import random

import pytest

from vidnetsim.core.engine import Simulator
from vidnetsim.core.simtime import SimTime
from vidnetsim.errors import EngineBusy, SchedulingInPast


def test_empty_queue_advances_clock(sim):
    assert sim.run_until(SimTime.from_seconds(1)) == 0
    assert sim.now == SimTime.from_seconds(1)


def test_run_until_processes_events_up_to_horizon(sim):
    fired = []
    for ms in (1, 2, 3):
        sim.schedule(SimTime.from_ms(ms), fired.append, ms)
    assert sim.run_until(SimTime.from_ms(2)) == 2
    assert fired == [1, 2]
    assert sim.now == SimTime.from_ms(2)
    assert sim.run_until(SimTime.from_ms(5)) == 1
    assert fired == [1, 2, 3]


def test_schedule_at_now_fires_before_later_events(sim):
    order = []
    sim.schedule(SimTime.from_ms(1), order.append, "later")
    sim.schedule(sim.now, order.append, "now")
    sim.run_until(SimTime.from_ms(1))
    assert order == ["now", "later"]


def test_scheduling_in_the_past_is_rejected(sim):
    sim.run_until(SimTime.from_ms(1))
    with pytest.raises(SchedulingInPast):
        sim.schedule(SimTime(sim.now.ticks - 1), print)
    with pytest.raises(SchedulingInPast):
        sim.run_until(SimTime(0))


def test_order_is_stable_sort_of_fire_time_and_seq():
    sim = Simulator()
    rnd = random.Random(5)
    fired = []
    expected = []
    for seq in range(10_000):
        ticks = rnd.randrange(1000)
        sim.schedule(SimTime(ticks), fired.append, (ticks, seq))
        expected.append((ticks, seq))
    sim.run_until(SimTime(1000))
    assert fired == sorted(expected)


def test_cancelled_events_do_not_fire(sim):
    fired = []
    handle = sim.schedule(SimTime.from_ms(1), fired.append, "x")
    sim.cancel(handle)
    assert sim.pending == 0
    assert sim.run_until(SimTime.from_ms(2)) == 0
    assert fired == []


def test_reentrant_run_raises(sim):
    errors = []

    def reenter():
        try:
            sim.run_until(SimTime.from_ms(5))
        except EngineBusy as exc:
            errors.append(exc)

    sim.schedule(SimTime.from_ms(1), reenter)
    sim.run_until(SimTime.from_ms(2))
    assert len(errors) == 1


def test_now_is_nondecreasing_during_a_run(sim):
    seen = []

    def tick(step):
        seen.append(sim.now.ticks)
        if step < 50:
            sim.schedule_in(SimTime(step % 3), tick, step + 1)

    sim.schedule(SimTime(0), tick, 0)
    sim.run_until(SimTime.from_ms(1))
    assert seen == sorted(seen)


def _traced_run(seed):
    sim = Simulator(seed=seed, trace=True)
    stream = sim.rng("arrivals")

    def arrival(n):
        if n < 200:
            sim.schedule_in(SimTime(int(stream.uniform() * 1e6)), arrival, n + 1)

    sim.schedule(SimTime(0), arrival, 0)
    sim.run_until(SimTime.from_seconds(1))
    return sim


def test_identical_seed_gives_identical_trace():
    first, second = _traced_run(3), _traced_run(3)
    assert first.trace_text() == second.trace_text()
    assert first.trace_digest() == second.trace_digest()
    assert _traced_run(4).trace_digest() != first.trace_digest()


def test_trace_line_format():
    sim = _traced_run(3)
    fields = sim.trace_text().splitlines()[0].split("\t")
    assert fields == ["0", "0", "_traced_run.<locals>.arrival"]


def test_events_at_the_horizon_are_processed(sim):
    fired = []
    sim.schedule(SimTime.from_ms(2), fired.append, "edge")
    assert sim.run_until(SimTime.from_ms(2)) == 1
    assert fired == ["edge"]
    assert sim.pending == 0


def test_process_resumes_on_engine_timeouts():
    sim = Simulator(trace=True)
    seen = []

    def ticker():
        for _ in range(3):
            yield sim.timeout(SimTime.from_ms(4), label="tick")
            seen.append(sim.now.ms)

    sim.process(ticker())
    sim.schedule(SimTime.from_ms(5), seen.append, "action")
    assert sim.run_until(SimTime.from_ms(10)) == 3
    assert seen == [4.0, "action", 8.0]
    labels = [line.split("\t")[2] for line in sim.trace_text().splitlines()]
    assert labels == ["tick", "list.append", "tick"]
    sim.run_until(SimTime.from_ms(20))
    assert seen[-1] == 12.0
