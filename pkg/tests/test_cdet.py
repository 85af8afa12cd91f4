import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cdetsim import cdet
from cdetsim.cdet import ET, TT, FailureCause, ReceiveQueue
from cdetsim.kernel import SeededRng, SimulationError
from cdetsim.mac import Frame, FrameKind, MacParams, frame_duration


def ticks(start, dur):
    return set(range(start, start + dur))


def oracle_overlap(a_s, a_d, b_s, b_d):
    # a shared tick, or the same start
    return bool(ticks(a_s, a_d) & ticks(b_s, b_d)) or a_s == b_s


def grid(lo=0, hi=8):
    for a_s, a_e, b_s, b_e in itertools.product(range(lo, hi + 1), repeat=4):
        if a_e > a_s and b_e > b_s:
            yield a_s, a_e - a_s, b_s, b_e - b_s


def test_amended_predicate_matches_tick_oracle_exhaustively():
    n = 0
    for a_s, a_d, b_s, b_d in grid():
        assert cdet.overlap(a_s, a_d, b_s, b_d) == oracle_overlap(a_s, a_d, b_s, b_d)
        n += 1
    assert n == 36 * 36


def test_literal_predicate_differs_only_on_simultaneous_starts():
    diverging = [
        (a_s, a_d, b_s, b_d) for a_s, a_d, b_s, b_d in grid()
        if cdet.overlap(a_s, a_d, b_s, b_d) != cdet.overlap(a_s, a_d, b_s, b_d, literal=True)
    ]
    assert diverging
    assert all(a_s == b_s for a_s, _, b_s, _ in diverging)
    # and every simultaneous-start pair diverges
    same_start = [p for p in grid() if p[0] == p[2]]
    assert len(diverging) == len(same_start)


def test_overlap_is_symmetric():
    for a_s, a_d, b_s, b_d in grid(0, 6):
        for literal in (False, True):
            assert cdet.overlap(a_s, a_d, b_s, b_d, literal) == cdet.overlap(b_s, b_d, a_s, a_d, literal)


@pytest.mark.parametrize("et, tt, amended, literal", [
    ((100, 50), (120, 100), True, True),
    ((100, 50), (150, 30), False, False),
    ((100, 50), (100, 50), True, False),
])
def test_overlap_examples(et, tt, amended, literal):
    assert cdet.overlap(*et, *tt) is amended
    assert cdet.overlap(*et, *tt, literal=True) is literal


def test_overlap_rejects_empty_intervals():
    with pytest.raises(ValueError):
        cdet.overlap(0, 0, 0, 5)


def test_tt_and_et_validate_duration():
    with pytest.raises(ValueError):
        TT(5, 0)
    with pytest.raises(ValueError):
        ET(5, -1)
    assert TT(5, 10).end == 15 and ET(1, 2).end == 3


def test_wire_est_and_recovery():
    assert cdet.make_wire_est(300, 10, 40) == 350
    assert cdet.recover_start(1357, 350) == 1007
    with pytest.raises(ValueError):
        cdet.make_wire_est(0, 10, 40)


def test_wire_est_full_timeline():
    # energy at global 1000 for 300us, ET sent SIFS later and lasting 40us
    est_global, edt, sifs, t_et, offset = 1000, 300, 10, 40, 7
    et_start = est_global + edt + sifs
    assert et_start == 1310
    wire = cdet.make_wire_est(edt, sifs, t_et)
    local_end = et_start + t_et + offset
    assert cdet.recover_start(local_end, wire) == 1007


@given(st.integers(0, 10**9), st.integers(1, 10**5), st.integers(1, 100), st.integers(1, 5000),
       st.integers(-10**6, 10**6))
def test_wire_est_recovers_start_on_any_clock(est, edt, sifs, t_et, offset):
    wire = cdet.make_wire_est(edt, sifs, t_et)
    local_end = est + edt + sifs + t_et + offset
    assert cdet.recover_start(local_end, wire) == est + offset


def test_wire_st_examples():
    assert cdet.make_wire_st(5000, 2000, 300, 10, 50) == 3360
    with pytest.raises(ValueError):
        cdet.make_wire_st(1999, 2000, 300, 10, 50)


def test_wire_st_full_timeline():
    # A (offset +7) and B (offset -3) collided starting at global 1993
    a_off, b_off = 7, -3
    st_a = 1993 + a_off
    assert st_a == 2000
    t2_global = 4993
    t_data_cn, sifs, t_ack_cn = 300, 10, 50
    wire = cdet.make_wire_st(t2_global + a_off, st_a, t_data_cn, sifs, t_ack_cn)
    assert wire == 3360
    ack_end_global = t2_global + t_data_cn + sifs + t_ack_cn
    assert cdet.recover_start(ack_end_global + b_off, wire) == 1990


@given(st.integers(0, 10**8), st.integers(0, 10**6), st.integers(-10**6, 10**6),
       st.integers(-10**6, 10**6))
def test_wire_st_is_offset_free(st_global, gap, off1, off2):
    w1 = cdet.make_wire_st(st_global + gap + off1, st_global + off1, 300, 10, 50)
    w2 = cdet.make_wire_st(st_global + gap + off2, st_global + off2, 300, 10, 50)
    assert w1 == w2


def test_wire_fn_st():
    assert cdet.make_wire_fn_st(900, 100, 200) == 1000
    with pytest.raises(ValueError):
        cdet.make_wire_fn_st(99, 100, 200)


def test_first_phase_examples():
    et = ET(1000, 340)
    hit = cdet.first_phase_check(et, [TT(1000, 300)])
    assert hit == (TT(1000, 300), True)
    assert cdet.first_phase_check(et, [TT(1000, 340)]) == (TT(1000, 340), False)
    assert cdet.first_phase_check(et, []) is None
    assert cdet.first_phase_check(et, [TT(2000, 100), TT(10, 5)]) is None


def test_first_phase_two_overlapping_entries_is_fatal():
    with pytest.raises(SimulationError):
        cdet.first_phase_check(ET(0, 1000), [TT(0, 100), TT(500, 100)])


def test_first_phase_literal_misses_simultaneous_start():
    assert cdet.first_phase_check(ET(1000, 340), [TT(1000, 300)], literal=True) is None


def test_second_phase_examples():
    assert cdet.second_phase_check(TT(1990, 300), [TT(1990, 340)]) == [TT(1990, 340)]
    assert cdet.second_phase_check(TT(1990, 300), [TT(5000, 340)]) == []
    assert cdet.second_phase_check(TT(1990, 300), []) == []


def test_purge_overlapping():
    from collections import deque
    q = deque([TT(0, 10), TT(100, 10), TT(105, 3)])
    assert cdet.purge_overlapping(q, TT(100, 10)) == 2
    assert list(q) == [TT(0, 10)]
    assert cdet.purge_overlapping(q, TT(50, 10)) == 0


def test_first_phase_delay_bound():
    assert cdet.first_phase_delay_bound([TT(0, 100), TT(5, 120)], 10, 40) == 175
    assert cdet.first_phase_delay_bound([TT(0, 100)], 10, 40) == 150
    with pytest.raises(ValueError):
        cdet.first_phase_delay_bound([], 10, 40)


def test_rbp_ranges():
    rng = SeededRng(5, "rbp")
    normal = {cdet.rbp_pad_units(rng, 16, False) for _ in range(2000)}
    cn = {cdet.rbp_pad_units(rng, 16, True) for _ in range(2000)}
    assert normal == set(range(16))
    assert cn == set(range(16, 32))
    assert {cdet.rbp_pad_units(rng, 1, False) for _ in range(20)} == {0}
    with pytest.raises(ValueError):
        cdet.rbp_pad_units(rng, 0, False)


@pytest.mark.parametrize("rw", [1, 2, 3, 4, 8, 16])
def test_equal_padding_probability_by_enumeration(rw):
    pairs = list(itertools.product(range(rw), repeat=2))
    equal = sum(a == b for a, b in pairs)
    assert Fraction(equal, len(pairs)) == Fraction(1, rw)
    if rw == 16:
        assert len(pairs) == 256


@given(st.integers(1, 64), st.integers(0, 4000))
def test_cn_frame_always_outlasts_plain_frame(rw, payload):
    p = MacParams()
    rate = 11.0
    unit = cdet.pad_unit_bits(1, rate)
    longest_plain = frame_duration(
        Frame(FrameKind.DATA, 1, 0, payload, (rw - 1) * unit), rate, p)
    shortest_cn = frame_duration(
        Frame(FrameKind.DATA_CN, 1, 0, payload, rw * unit), rate, p)
    assert shortest_cn > longest_plain


@pytest.mark.parametrize("t_g, rate, bits", [(1, 1, 1), (1, 11, 11), (1, 5.5, 6), (2, 5.5, 11),
                                              (1, 2.0, 2), (3, Fraction(1, 3), 1)])
def test_pad_unit_bits(t_g, rate, bits):
    assert cdet.pad_unit_bits(t_g, rate) == bits


def test_pad_unit_bits_rejects_bad_input():
    with pytest.raises(ValueError):
        cdet.pad_unit_bits(0, 1)
    with pytest.raises(ValueError):
        cdet.pad_unit_bits(1, 0)


@given(st.integers(1, 20), st.sampled_from([1.0, 2.0, 5.5, 11.0, 6.0, 54.0]),
       st.integers(0, 12000), st.integers(0, 40))
def test_each_pad_unit_adds_at_least_t_g(t_g, rate, payload, units):
    p = MacParams()
    unit = cdet.pad_unit_bits(t_g, rate)
    d0 = frame_duration(Frame(FrameKind.DATA, 1, 0, payload, units * unit), rate, p)
    d1 = frame_duration(Frame(FrameKind.DATA, 1, 0, payload, (units + 1) * unit), rate, p)
    assert d1 - d0 >= t_g


def test_classify_failure():
    assert cdet.classify_failure(first_phase=True) is FailureCause.COLLISION
    assert cdet.classify_failure(second_phase=True) is FailureCause.COLLISION
    assert cdet.classify_failure(fn_match=True) is FailureCause.COLLISION
    assert cdet.classify_failure() is FailureCause.CHANNEL_ERROR
    assert str(FailureCause.COLLISION) == "collision"


def test_receive_queue_evicts_by_horizon():
    rq = ReceiveQueue(horizon=100)
    rq.append(1, TT(0, 10))
    rq.append(2, TT(50, 10))
    rq.append(3, TT(120, 10))
    rq.evict(now_local=130)
    assert [e.source for e in rq] == [2, 3]
    rq.evict(now_local=1000)
    assert len(rq) == 0


def test_ap_fn_lookup():
    rq = ReceiveQueue(horizon=10**6)
    rq.append(1, TT(1000, 300))
    rq.append(2, TT(5000, 300))
    assert cdet.ap_on_fn(TT(1000, 200), rq) == TT(1000, 300)
    assert cdet.ap_on_fn(TT(3000, 200), rq) is None
    # a station's own frame in RQ means only the ACK was lost
    assert cdet.ap_on_fn(TT(1000, 300), rq, exclude_source=1) is None
    assert cdet.ap_on_fn(TT(5100, 50), rq, exclude_source=1) == TT(5000, 300)


@st.composite
def own_attempts(draw):
    """Non-overlapping attempts in start order, like one station's TQ."""
    t = draw(st.integers(0, 100))
    out = []
    for _ in range(draw(st.integers(0, 30))):
        t += draw(st.integers(0, 40))
        dur = draw(st.integers(1, 50))
        out.append(TT(t, dur))
        t += dur
    return out


@given(own_attempts(), st.integers(0, 1500), st.integers(1, 200), st.booleans())
def test_transmission_log_lookup_never_misses(tts, start, dur, literal):
    log = cdet.TransmissionLog(horizon=10**6)
    for tt in tts:
        log.append(tt, tt.st)
    brute = [tt for tt in tts if cdet.overlap(start, dur, tt.st, tt.dt, literal)]
    near = log.near(start, dur)
    assert [tt for tt in near if cdet.overlap(start, dur, tt.st, tt.dt, literal)] == brute


def test_transmission_log_forgets_after_horizon():
    log = cdet.TransmissionLog(horizon=100)
    for st_ in range(0, 5000, 10):
        log.append(TT(st_, 5), st_)
    assert len(log) == 11
    assert [tt.st for tt in log][0] == 4890
    assert log.near(0, 50) == []
    with pytest.raises(SimulationError):
        log.append(TT(10, 5), 5000)
