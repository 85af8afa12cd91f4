import math

import pytest
from hypothesis import given, strategies as st

from cdetsim.channel import (Audibility, CaptureConfig, Captured, Channel, ChannelError,
                             CollisionNoCapture, Success, TransmissionRecord, classify_reception,
                             db_sum, merged_energy_interval)
from cdetsim.kernel import SeededRng, SimulationError, Simulator


def rec(source, start, dur, power=0.0):
    return TransmissionRecord(source, start, dur, power, None)


@st.composite
def chained_records(draw):
    """Records where each one starts no later than the running union ends."""
    start = draw(st.integers(0, 1000))
    out = [rec(1, start, draw(st.integers(1, 500)))]
    reach = out[0].end
    for i in range(draw(st.integers(0, 5))):
        s = draw(st.integers(start, reach))
        r = rec(i + 2, s, draw(st.integers(1, 500)))
        out.append(r)
        reach = max(reach, r.end)
    return draw(st.permutations(out))


@given(chained_records())
def test_merged_energy_matches_tick_union(records):
    union = set()
    for r in records:
        union |= set(range(r.start, r.end))
    iv = merged_energy_interval(records)
    assert union == set(range(iv.est_global, iv.end))
    assert iv.edt == len(union)


def test_merged_energy_touching_records_merge_and_gaps_fail():
    assert merged_energy_interval([rec(1, 0, 10), rec(2, 10, 5)]).edt == 15
    with pytest.raises(ValueError):
        merged_energy_interval([rec(1, 0, 10), rec(2, 11, 5)])
    with pytest.raises(ValueError):
        merged_energy_interval([])


def test_record_needs_positive_duration():
    with pytest.raises(SimulationError):
        rec(1, 0, 0)


def test_db_sum():
    assert db_sum([0.0, 0.0]) == pytest.approx(10 * math.log10(2))
    assert db_sum([10.0]) == pytest.approx(10.0)


class TestClassifyReception:
    rng = SeededRng(1, "channel")

    def test_single_frame(self):
        r = rec(1, 0, 10)
        assert classify_reception([r], CaptureConfig(), 0.0, self.rng) == Success(r)
        assert classify_reception([r], CaptureConfig(), 1.0, self.rng) == ChannelError(r)

    def test_collision_without_capture(self):
        a, b = rec(1, 0, 10, 30.0), rec(2, 0, 10, 0.0)
        out = classify_reception([a, b], CaptureConfig(enabled=False), 0.0, self.rng)
        assert isinstance(out, CollisionNoCapture) and out.sources == (1, 2)

    def test_capture_threshold_is_inclusive(self):
        a, b = rec(1, 0, 10, 6.0), rec(2, 0, 10, 0.0)
        out = classify_reception([a, b], CaptureConfig(True, 6.0), 0.0, self.rng)
        assert isinstance(out, Captured) and out.winner is a and out.losers == (b,)
        out = classify_reception([a, b], CaptureConfig(True, 6.01), 0.0, self.rng)
        assert isinstance(out, CollisionNoCapture)

    def test_capture_compares_against_interference_sum(self):
        # 10 dB over each of two equal interferers is only 6.99 dB over their sum
        recs = [rec(1, 0, 10, 10.0), rec(2, 0, 10, 0.0), rec(3, 0, 10, 0.0)]
        assert isinstance(classify_reception(recs, CaptureConfig(True, 6.98), 0.0, self.rng), Captured)
        assert isinstance(classify_reception(recs, CaptureConfig(True, 7.0), 0.0, self.rng),
                          CollisionNoCapture)

    def test_captured_frame_can_still_be_lost(self):
        a, b = rec(1, 0, 10, 20.0), rec(2, 0, 10, 0.0)
        out = classify_reception([a, b], CaptureConfig(True, 6.0), 1.0, self.rng)
        assert isinstance(out, CollisionNoCapture)

    def test_empty_is_an_error(self):
        with pytest.raises(ValueError):
            classify_reception([], CaptureConfig(), 0.0, self.rng)


def test_audibility_defaults_and_hidden_pairs():
    aud = Audibility(4, hidden_pairs=[(1, 2)])
    assert aud.hearers(0) == [1, 2, 3]
    assert aud.hearers(1) == [0, 3]
    assert not aud.hears[2][1]
    with pytest.raises(ValueError):
        Audibility(3, hidden_pairs=[(0, 1)])


class FakeNode:
    def __init__(self, nid, log):
        self.id = nid
        self.log = log
        self.transmitting = False

    def on_medium_busy(self, now):
        self.log.append((now, self.id, "busy"))

    def on_medium_idle(self, now):
        self.log.append((now, self.id, "idle"))

    def on_receive(self, frame, r):
        self.log.append((r.end, self.id, "rx"))

    def on_tx_end(self, r):
        self.transmitting = False

    def on_energy_end(self, records, interval, ap_overlap):
        self.log.append((interval.end, self.id, "energy", interval.est_global, interval.edt,
                         tuple(sorted(r.source for r in records)), ap_overlap))


def make_channel(n_stations=2, hidden=()):
    sim = Simulator()
    log = []
    nodes = [FakeNode(i, log) for i in range(n_stations + 1)]
    ch = Channel(sim, nodes, Audibility(n_stations + 1, hidden), p_e=0.0,
                 error_rng=SeededRng(1, "c"))
    return sim, ch, nodes, log


def start(sim, ch, nodes, src, at, dur):
    def go():
        nodes[src].transmitting = True
        ch.begin_transmission(rec(src, sim.now, dur))
    sim.at(at, src, "go", go)


def test_overlapping_station_frames_form_one_energy():
    sim, ch, nodes, log = make_channel()
    start(sim, ch, nodes, 1, 100, 50)
    start(sim, ch, nodes, 2, 120, 100)
    sim.run_until(1000)
    energies = [e for e in log if e[2] == "energy"]
    assert energies == [(220, 0, "energy", 100, 120, (1, 2), False)]


def test_back_to_back_frames_chain_into_one_energy():
    sim, ch, nodes, log = make_channel()
    start(sim, ch, nodes, 1, 100, 50)
    start(sim, ch, nodes, 2, 150, 50)
    sim.run_until(1000)
    energies = [e for e in log if e[2] == "energy"]
    assert energies == [(200, 0, "energy", 100, 100, (1, 2), False)]


def test_overlap_corrupts_both_frames_at_the_ap():
    sim, ch, nodes, log = make_channel()
    recs = {}

    def go(src, dur):
        nodes[src].transmitting = True
        recs[src] = rec(src, sim.now, dur)
        ch.begin_transmission(recs[src])

    sim.at(0, 1, "go", go, 1, 50)
    sim.at(10, 2, "go", go, 2, 50)
    sim.run_until(100)
    assert 0 in recs[1].corrupted and 0 in recs[2].corrupted


def test_busy_and_idle_notifications():
    sim, ch, nodes, log = make_channel()
    start(sim, ch, nodes, 1, 100, 50)
    sim.run_until(1000)
    assert (100, 2, "busy") in log and (150, 2, "idle") in log
    assert (100, 0, "busy") in log
    assert not any(e[1] == 1 and e[2] in ("busy", "idle") for e in log)


def test_hidden_station_does_not_sense_busy():
    sim, ch, nodes, log = make_channel(hidden=[(1, 2)])
    start(sim, ch, nodes, 1, 100, 50)
    sim.run_until(1000)
    assert not any(e[1] == 2 for e in log)


def test_ap_frames_are_delivered_to_stations():
    sim, ch, nodes, log = make_channel()
    start(sim, ch, nodes, 0, 10, 30)
    sim.run_until(100)
    assert (40, 1, "rx") in log and (40, 2, "rx") in log
    assert not any(e[2] == "energy" for e in log)


def test_second_transmission_from_same_node_is_an_error():
    sim, ch, nodes, log = make_channel()
    start(sim, ch, nodes, 1, 0, 50)
    start(sim, ch, nodes, 1, 10, 50)
    with pytest.raises(SimulationError):
        sim.run_until(100)
