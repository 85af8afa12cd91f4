"""Collision detection from RF energy duration (CD-ET).

The access point reports every energy interval it could not decode as an
(EST, EDT) pair. Stations keep the (ST, DT) of their own attempts and compare:
an energy that overlaps one of our attempts but lasted longer than it means
somebody else was on the air too. Stations that sent the longest frame learn
about the collision second-hand through collision notices (CN) relayed by the
AP, and stations whose frame was lost to capture ask the AP through failure
notices (FN).

Start times never travel in absolute form. Every start is sent relative to the
end of the frame that carries it, so each receiver rebuilds it on its own clock
by subtracting from the local time at which that frame ends.
"""

import bisect
import enum
import functools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from cdetsim.kernel import SimulationError


class FailureCause(enum.Enum):
    COLLISION = "collision"
    CHANNEL_ERROR = "channel_error"

    def __str__(self):
        return self.value


@dataclass(frozen=True, slots=True)
class TT:
    """Start and duration of one transmission attempt, on some node's clock."""

    st: int
    dt: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("TT duration must be positive, got %r" % (self.dt,))

    @property
    def end(self):
        return self.st + self.dt


@dataclass(frozen=True, slots=True)
class ET:
    """Start and duration of a merged energy interval seen by the AP."""

    est: int
    edt: int

    def __post_init__(self):
        if self.edt <= 0:
            raise ValueError("ET duration must be positive, got %r" % (self.edt,))

    @property
    def end(self):
        return self.est + self.edt


@dataclass(frozen=True, slots=True)
class WireNotice:
    """Notice as carried in a frame: start relative to the carrier's end, plus duration."""

    rel: int
    dur: int


def overlap(a_start, a_dur, b_start, b_dur, literal=False):
    """Do two (start, duration) intervals overlap?

    The default predicate is ``max(starts) < min(ends)``: a common stretch of
    positive length, which includes two attempts that start together. With
    ``literal=True`` the strict two-sided test is used instead::

        (a_start < b_start < a_end) or (b_start < a_start < b_end)

    which rejects simultaneous starts.
    """
    if a_dur <= 0 or b_dur <= 0:
        raise ValueError("interval durations must be positive")
    a_end = a_start + a_dur
    b_end = b_start + b_dur
    if literal:
        return (a_start < b_start < a_end) or (b_start < a_start < b_end)
    return max(a_start, b_start) < min(a_end, b_end)


def tt_overlap(a, b, literal=False):
    return overlap(a.st, a.dt, b.st, b.dt, literal)


def make_wire_est(edt, sifs, t_et_frame):
    """Relative energy start put in the ET frame: energy start to ET frame end."""
    if edt <= 0 or sifs <= 0 or t_et_frame <= 0:
        raise ValueError("make_wire_est arguments must be positive")
    return edt + sifs + t_et_frame


def recover_start(local_end, wire_rel):
    """Start time on the receiver's clock, given the local time the carrier ended."""
    return local_end - wire_rel


def make_wire_st(t2_local, st_local, t_data_cn, sifs, t_ack_cn):
    """Relative start of a collided frame, as sent in a Data+CN frame.

    ``t2_local`` is when the Data+CN transmission starts. The value is
    referenced to the end of the AP's Ack+CN reply, which follows the data
    frame after one SIFS.
    """
    if t2_local < st_local:
        raise ValueError("Data+CN cannot start before the collided frame (%d < %d)"
                         % (t2_local, st_local))
    return (t2_local - st_local) + t_data_cn + sifs + t_ack_cn


def make_wire_fn_st(t2_local, st_local, t_data_fn):
    """Relative start of a failed frame, as sent in a Data+FN frame (referenced to its end)."""
    if t2_local < st_local:
        raise ValueError("Data+FN cannot start before the failed frame")
    return (t2_local - st_local) + t_data_fn


def first_phase_check(et, tq, literal=False):
    """Compare an ET (already on the local clock) against our transmission log.

    ``tq`` yields objects with a ``tt`` attribute (or bare TTs). Returns
    ``(entry, detected)`` for the overlapping entry, or ``None`` when no
    entry overlaps. ``detected`` is true when the energy outlasted the entry.
    """
    found = None
    for entry in tq:
        tt = getattr(entry, "tt", entry)
        if overlap(et.est, et.edt, tt.st, tt.dt, literal):
            if found is not None:
                raise SimulationError("two logged transmissions overlap one energy: %r, %r"
                                      % (found, entry))
            found = entry
    if found is None:
        return None
    tt = getattr(found, "tt", found)
    return found, et.edt > tt.dt


def second_phase_check(cn, tq, literal=False):
    """Return the logged entries whose TT overlaps the (local-clock) CN."""
    return [e for e in tq if tt_overlap(cn, getattr(e, "tt", e), literal)]


def purge_overlapping(queue, tt, literal=False):
    """Drop entries of a CN/FN deque that overlap ``tt``; return how many were removed."""
    keep = [e for e in queue if not tt_overlap(getattr(e, "tt", e), tt, literal)]
    removed = len(queue) - len(keep)
    if removed:
        queue.clear()
        queue.extend(keep)
    return removed


def first_phase_delay_bound(tts, sifs, t_et):
    """Worst-case time from the earliest colliding start to ET reception."""
    tts = list(tts)
    if not tts:
        raise ValueError("first_phase_delay_bound needs at least one TT")
    latest_end = max(tt.st + tt.dt for tt in tts)
    earliest = min(tt.st for tt in tts)
    return latest_end - earliest + sifs + t_et


def rbp_pad_units(rng, rw, carries_cn):
    """Random bit padding draw, in pad units.

    Ordinary frames draw from ``[0, rw-1]``; frames carrying a CN draw from
    ``[rw, 2rw-1]`` so they come out longer than any ordinary frame of the same
    base length.
    """
    if rw < 1:
        raise ValueError("RBP window must be >= 1, got %r" % (rw,))
    if carries_cn:
        return rng.uniform_int(rw, 2 * rw - 1)
    return rng.uniform_int(0, rw - 1)


@functools.lru_cache(maxsize=64)
def as_fraction(x):
    """Exact value of a rate; floats are read as their shortest decimal (5.5 -> 11/2)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@functools.lru_cache(maxsize=256)
def pad_unit_bits(t_g, rate):
    """Bits in one pad unit: ``ceil(t_g * rate)``, so one unit adds at least t_g of airtime."""
    if t_g < 1:
        raise ValueError("time granularity must be at least one tick")
    rate = as_fraction(rate)
    if rate <= 0:
        raise ValueError("rate must be positive")
    return math.ceil(t_g * rate)


def classify_failure(first_phase=False, second_phase=False, fn_match=False):
    if first_phase or second_phase or fn_match:
        return FailureCause.COLLISION
    return FailureCause.CHANNEL_ERROR


class TransmissionLog:
    """A station's TQ: its own attempts in start order, kept for ``horizon`` ticks.

    A station sends one frame at a time, so entries never overlap each other
    and a lookup only needs the entries around the queried interval.
    """

    def __init__(self, horizon):
        self.horizon = horizon
        self._starts = []
        self._entries = []
        self._head = 0

    def __len__(self):
        return len(self._entries) - self._head

    def __iter__(self):
        return iter(self._entries[self._head:])

    def append(self, entry, now_local):
        st = getattr(entry, "tt", entry).st
        if self._starts and st < self._starts[-1]:
            raise SimulationError("TQ entries must arrive in start order")
        self._starts.append(st)
        self._entries.append(entry)
        self.prune(now_local)

    def prune(self, now_local):
        cut = bisect.bisect_left(self._starts, now_local - self.horizon, self._head)
        self._head = cut
        if cut > 1024 and cut * 2 > len(self._starts):
            del self._starts[:cut]
            del self._entries[:cut]
            self._head = 0

    def near(self, start, dur):
        """Entries that could overlap ``[start, start + dur)`` under either predicate."""
        lo = max(self._head, bisect.bisect_left(self._starts, start, self._head) - 1)
        hi = bisect.bisect_right(self._starts, start + dur, self._head)
        return self._entries[lo:hi]


@dataclass(slots=True)
class RqEntry:
    source: int
    tt: TT


class ReceiveQueue:
    """AP-side FIFO of TTs of frames that were received (AP clock)."""

    def __init__(self, horizon, maxlen=256):
        self.horizon = horizon
        self._q = deque(maxlen=maxlen)

    def __len__(self):
        return len(self._q)

    def __iter__(self):
        return iter(self._q)

    def append(self, source, tt):
        self._q.append(RqEntry(source, tt))

    def evict(self, now_local):
        q = self._q
        while q and q[0].tt.st < now_local - self.horizon:
            q.popleft()


def ap_on_fn(fn, rq, now_local=None, exclude_source=None, literal=False):
    """Look up a failure notice in the receive queue.

    Returns the TT of the first received frame that overlaps the failed one,
    or ``None``. Entries from ``exclude_source`` are skipped: a station's own
    frame sitting in RQ means the data got through and only the ACK was lost.
    """
    if now_local is not None:
        rq.evict(now_local)
    for entry in rq:
        if exclude_source is not None and entry.source == exclude_source:
            continue
        if tt_overlap(fn, entry.tt, literal):
            return entry.tt
    return None
