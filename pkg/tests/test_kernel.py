from collections import Counter

import pytest
from hypothesis import given, strategies as st

from cdetsim.kernel import SeededRng, SimulationError, Simulator, uniform_int


def test_events_fire_in_time_order():
    sim = Simulator()
    seen = []
    for t in (30, 10, 20):
        sim.at(t, 0, "x", seen.append, t)
    sim.run_until(100)
    assert seen == [10, 20, 30]
    assert sim.now == 100


def test_same_tick_is_fifo():
    sim = Simulator()
    seen = []
    for label in "abcde":
        sim.at(5, 0, "x", seen.append, label)
    sim.run_until(5)
    assert seen == list("abcde")


def test_events_scheduled_during_dispatch_at_same_tick_run_after():
    sim = Simulator()
    seen = []

    def first():
        seen.append("first")
        sim.after(0, 0, "x", seen.append, "nested")

    sim.at(7, 0, "x", first)
    sim.at(7, 0, "x", seen.append, "second")
    sim.run_until(7)
    assert seen == ["first", "second", "nested"]


def test_cancelled_events_do_not_run_or_count():
    sim = Simulator()
    seen = []
    ev = sim.at(3, 0, "x", seen.append, 1)
    sim.at(4, 0, "x", seen.append, 2)
    Simulator.cancel(ev)
    Simulator.cancel(None)
    assert sim.run_until(10) == 1
    assert seen == [2]


def test_run_until_leaves_later_events_queued():
    sim = Simulator()
    seen = []
    sim.at(10, 0, "x", seen.append, 10)
    sim.at(11, 0, "x", seen.append, 11)
    sim.run_until(10)
    assert seen == [10] and len(sim) == 1
    assert sim.peek_time() == 11
    sim.run_until(20)
    assert seen == [10, 11]


def test_scheduling_in_the_past_is_an_error():
    sim = Simulator()
    sim.run_until(50)
    with pytest.raises(SimulationError):
        sim.at(49, 0, "x", None)
    with pytest.raises(SimulationError):
        sim.run_until(10)


def test_dispatch_hook_sees_every_live_event():
    sim = Simulator()
    kinds = []
    sim.on_dispatch = lambda ev: kinds.append(ev.kind)
    sim.at(1, 0, "a", None)
    Simulator.cancel(sim.at(2, 0, "b", None))
    sim.at(3, 0, "c", None)
    sim.run_until(5)
    assert kinds == ["a", "c"]
    assert sim.dispatched == 2


def test_rng_is_reproducible_and_streams_are_independent():
    r1, r2 = SeededRng(7, "mac"), SeededRng(7, "mac")
    assert [r1.uniform_int(0, 1000) for _ in range(50)] == [r2.uniform_int(0, 1000) for _ in range(50)]
    other = SeededRng(7, "channel")
    assert [other.uniform_int(0, 1000) for _ in range(50)] != [SeededRng(7, "mac").uniform_int(0, 1000) for _ in range(50)]


def test_rng_sequence_is_frozen():
    # guards golden traces against silent changes in how draws are built
    rng = SeededRng(1, "mac")
    assert [rng.uniform_int(0, 31) for _ in range(8)] == [27, 16, 11, 31, 15, 24, 30, 18]


@given(st.integers(-10**6, 10**6), st.integers(0, 5000), st.integers(0, 2**32))
def test_uniform_int_stays_in_range(lo, span, seed):
    rng = SeededRng(seed, "t")
    for _ in range(20):
        v = uniform_int(rng, lo, lo + span)
        assert lo <= v <= lo + span


def test_uniform_int_empty_range_is_an_error():
    with pytest.raises(SimulationError):
        SeededRng(1).uniform_int(5, 4)
    assert SeededRng(1).uniform_int(4, 4) == 4


def test_uniform_int_is_roughly_uniform():
    rng = SeededRng(3, "u")
    n = 16000
    counts = Counter(rng.uniform_int(0, 15) for _ in range(n))
    expected = n / 16
    chi2 = sum((counts[k] - expected) ** 2 / expected for k in range(16))
    # 15 degrees of freedom; 99.9th percentile is about 37.7
    assert chi2 < 37.7


def test_bernoulli_edges():
    rng = SeededRng(2)
    assert not any(rng.bernoulli(0.0) for _ in range(100))
    assert all(rng.bernoulli(1.0) for _ in range(100))
