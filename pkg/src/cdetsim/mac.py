"""802.11 DCF station with CD-ET bookkeeping.

A station keeps three FIFOs: TQ (its own recent attempts), CQ (collision
notices it still has to deliver) and FQ (failure notices for attempts that got
neither an ACK nor an ET). Local clocks are ``global + offset``; nothing a
station does depends on the offset except the numbers it writes in its logs.
"""

import enum
from collections import deque
from dataclasses import dataclass

from cdetsim import cdet
from cdetsim.cdet import TT, ET, FailureCause, WireNotice
from cdetsim.channel import TransmissionRecord
from cdetsim.kernel import SimulationError


@dataclass(frozen=True)
class MacParams:
    """Timing and framing constants. Defaults are 802.11b DSSS, long preamble."""

    slot: int = 20
    sifs: int = 10
    difs: int = 50
    cw_min: int = 31
    cw_max: int = 1023
    phy_preamble: int = 192
    rates: tuple = (1.0, 2.0, 5.5, 11.0)
    control_rate: float = 2.0
    retry_limit: int = 7
    ack_timeout: int = None
    data_header_bits: int = 272
    ack_bits: int = 112
    # beacon-sized management frame plus 2 x 32-bit fields
    et_bits: int = 512
    notice_bits: int = 64

    def __post_init__(self):
        for name in ("slot", "sifs", "difs", "phy_preamble"):
            if getattr(self, name) <= 0:
                raise ValueError("%s must be positive" % name)
        if self.difs != self.sifs + 2 * self.slot:
            raise ValueError("difs must equal sifs + 2*slot (%d != %d)"
                             % (self.difs, self.sifs + 2 * self.slot))
        if not 0 < self.cw_min <= self.cw_max:
            raise ValueError("need 0 < cw_min <= cw_max")
        if not self.rates or min(self.rates) <= 0 or self.control_rate <= 0:
            raise ValueError("rates must be positive")
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be >= 1")
        if self.ack_timeout is None:
            t_ack = frame_duration(Frame(FrameKind.ACK, 0, 0), self.control_rate, self)
            object.__setattr__(self, "ack_timeout", self.sifs + t_ack + 2 * self.slot)
        elif self.ack_timeout <= self.sifs:
            raise ValueError("ack_timeout must exceed sifs")


class FrameKind(enum.Enum):
    DATA = "Data"
    ACK = "Ack"
    ET = "EtBroadcast"
    DATA_CN = "DataWithCn"
    ACK_CN = "AckWithCn"
    DATA_FN = "DataWithFn"

    @property
    def is_data(self):
        return self in (FrameKind.DATA, FrameKind.DATA_CN, FrameKind.DATA_FN)

    @property
    def carries_notice(self):
        return self in (FrameKind.DATA_CN, FrameKind.ACK_CN, FrameKind.DATA_FN, FrameKind.ET)


BROADCAST = -1


@dataclass(slots=True, eq=False)
class Frame:
    kind: FrameKind
    src: int
    dst: int
    payload_bits: int = 0
    pad_bits: int = 0
    # WireNotice for CN/FN/ET frames
    notice: WireNotice = None
    seqno: int = None
    # simulator-side link back to the attempt that produced it (never on air)
    attempt: object = None

    def __post_init__(self):
        if self.pad_bits < 0 or self.payload_bits < 0:
            raise ValueError("negative frame length")


def frame_bits(frame, params):
    kind = frame.kind
    if kind.is_data:
        bits = params.data_header_bits + frame.payload_bits + frame.pad_bits
    elif kind is FrameKind.ET:
        return params.et_bits
    else:
        bits = params.ack_bits
    if kind in (FrameKind.DATA_CN, FrameKind.DATA_FN, FrameKind.ACK_CN):
        bits += params.notice_bits
    return bits


def airtime(bits, rate, preamble):
    rate = cdet.as_fraction(rate)
    if rate <= 0:
        raise ValueError("rate must be positive")
    # exact ceil(bits / rate)
    return preamble - (-bits * rate.denominator // rate.numerator)


def frame_duration(frame, rate, params):
    """Preamble plus ceil(bits / rate), in microseconds (rate in bit/us)."""
    return airtime(frame_bits(frame, params), rate, params.phy_preamble)


def control_durations(params):
    """Airtimes of the AP's reply frames at the control rate."""
    r = params.control_rate
    return {
        FrameKind.ACK: frame_duration(Frame(FrameKind.ACK, 0, 0), r, params),
        FrameKind.ACK_CN: frame_duration(Frame(FrameKind.ACK_CN, 0, 0), r, params),
        FrameKind.ET: frame_duration(Frame(FrameKind.ET, 0, 0), r, params),
    }


@dataclass(slots=True, eq=False)
class Attempt:
    """One transmission attempt, with the ground truth the simulator knows."""

    station: int
    index: int
    tt: TT
    start: int
    kind: FrameKind
    rate: float
    cw: int
    pad_units: int
    seqno: int
    status: str = "pending"
    cause: FailureCause = None
    # "first", "second" or "fn" once detected
    path: str = None
    detect_time: int = None
    revised: bool = False
    stepped_rate: bool = False
    no_response: bool = False
    # the CQ/FQ entry this attempt carried, if any
    carried: object = None
    pad_bits: int = 0
    bits: int = 0
    # set by the AP at the end of the energy this attempt belonged to
    truth: str = None
    energy_start: int = None
    energy_bound: int = None
    energy_id: int = None


@dataclass(slots=True, eq=False)
class Notice:
    """A CN or FN waiting in CQ/FQ: the TT it reports, on this station's clock."""

    tt: TT
    attempt: Attempt = None


@dataclass(slots=True, eq=False)
class Packet:
    seqno: int
    payload_bits: int
    arrival: int
    head_since: int = None


class State(enum.Enum):
    IDLE = 0
    CONTEND = 1
    TX = 2
    WAIT = 3


@dataclass
class CdetConfig:
    enabled: bool = True
    rw: int = 16
    t_g: int = 1
    literal_overlap: bool = False
    rq_horizon: int = None
    tq_horizon: int = None


@dataclass
class Traffic:
    saturated: bool = True
    arrival_rate: float = 0.0
    payload_bits: int = 8000
    payload_range: tuple = None


class Station:
    def __init__(self, node_id, sim, params, cdet_cfg, offset, backoff_policy, rate_policy,
                 traffic, rng, rx_power_db=0.0, hooks=None):
        self.id = node_id
        self.sim = sim
        self.p = params
        self.cd = cdet_cfg
        self.offset = offset
        self.backoff_policy = backoff_policy
        self.rate_policy = rate_policy
        self.traffic = traffic
        self.rng = rng
        self.rx_power_db = rx_power_db
        self.hooks = hooks
        self.channel = None

        self.transmitting = False
        self.state = State.IDLE
        self.idle_since = 0
        self.cw = params.cw_min
        self.backoff = None
        self.retries = 0
        self.count_from = 0
        self.access_ev = None
        self.timeout_ev = None
        self.timeout_deferred = False

        self.tq = cdet.TransmissionLog(cdet_cfg.tq_horizon or 10**7)
        self.cq = deque()
        self.fq = deque()
        self.packets = deque()
        self.current = None
        self.attempt = None
        self.attempts = []
        self._seqno = 0
        self._ctl = control_durations(params)

    # ----- clocks and helpers

    def local(self, t=None):
        return (self.sim.now if t is None else t) + self.offset

    @property
    def rate(self):
        return self.rate_policy.rate

    def _emit(self, kind, detail=""):
        if self.hooks is not None:
            self.hooks.trace(self.id, kind, detail)

    # ----- traffic

    def start(self):
        if self.traffic.saturated:
            self._new_packet()
            self._next_packet()
        elif self.traffic.arrival_rate > 0:
            self._schedule_arrival()

    def _new_packet(self):
        tr = self.traffic
        if tr.payload_range is not None:
            bits = self.rng.uniform_int(tr.payload_range[0], tr.payload_range[1])
        else:
            bits = tr.payload_bits
        self._seqno += 1
        self.packets.append(Packet(self._seqno, bits, self.sim.now))

    def _schedule_arrival(self):
        gap = self.rng.expovariate(self.traffic.arrival_rate / 1e6)
        self.sim.after(max(1, int(round(gap))), self.id, "arrival", self._on_arrival)

    def _on_arrival(self):
        self._new_packet()
        if self.current is None and self.state is State.IDLE:
            self._next_packet()
        self._schedule_arrival()

    def _next_packet(self):
        if not self.packets and self.traffic.saturated:
            self._new_packet()
        if not self.packets:
            self.current = None
            self.state = State.IDLE
            return
        self.current = self.packets.popleft()
        self.current.head_since = self.sim.now
        self._enter_contention()

    # ----- DCF

    def _enter_contention(self):
        self.state = State.CONTEND
        if self.backoff is None:
            self.backoff = self.rng.uniform_int(0, self.cw)
        if self.channel.busy[self.id] == 0:
            self._arm_access()

    def _arm_access(self):
        if self.access_ev is not None:
            self.access_ev.cancelled = True
        now = self.sim.now
        self.count_from = max(now, self.idle_since + self.p.difs)
        self.access_ev = self.sim.at(self.count_from + self.backoff * self.p.slot, self.id,
                                     "access", self._on_access)

    def on_medium_busy(self, now):
        ev = self.access_ev
        if self.state is State.CONTEND and ev is not None:
            if ev.fire_at == now:
                # already committed to this slot
                return
            ev.cancelled = True
            self.access_ev = None
            if now > self.count_from:
                done = (now - self.count_from) // self.p.slot
                self.backoff = max(0, self.backoff - done)

    def on_medium_idle(self, now):
        self.idle_since = now
        if self.state is State.CONTEND:
            self._arm_access()
        elif self.state is State.WAIT and self.timeout_deferred:
            self.timeout_deferred = False
            self.timeout_ev = self.sim.after(self.p.sifs + self.p.slot, self.id, "timeout",
                                             self._on_timeout)

    def _on_access(self):
        self.access_ev = None
        now = self.sim.now
        p = self.p
        pkt = self.current
        rate = self.rate
        kind = FrameKind.DATA
        notice_src = None
        if self.cd.enabled:
            if self.cq:
                kind = FrameKind.DATA_CN
                notice_src = self.cq[0]
            elif self.fq:
                kind = FrameKind.DATA_FN
                notice_src = self.fq[0]
        frame = Frame(kind, self.id, 0, payload_bits=pkt.payload_bits, seqno=pkt.seqno)
        units = 0
        if self.cd.enabled:
            units = cdet.rbp_pad_units(self.rng, self.cd.rw, kind is FrameKind.DATA_CN)
            frame.pad_bits = units * cdet.pad_unit_bits(self.cd.t_g, rate)
        dur = frame_duration(frame, rate, p)
        t2 = self.local(now)
        if kind is FrameKind.DATA_CN:
            rel = cdet.make_wire_st(t2, notice_src.tt.st, dur, p.sifs, self._ctl[FrameKind.ACK_CN])
            frame.notice = WireNotice(rel, notice_src.tt.dt)
        elif kind is FrameKind.DATA_FN:
            rel = cdet.make_wire_fn_st(t2, notice_src.tt.st, dur)
            frame.notice = WireNotice(rel, notice_src.tt.dt)
        if notice_src is not None and self.hooks is not None:
            self.hooks.on_wire(self.id, "st" if kind is FrameKind.DATA_CN else "fn_st", rel)
        att = Attempt(self.id, len(self.attempts), TT(t2, dur), now, kind, rate, self.cw, units,
                      pkt.seqno, carried=notice_src, pad_bits=frame.pad_bits,
                      bits=frame_bits(frame, p))
        frame.attempt = att
        self.attempts.append(att)
        self.tq.append(att, t2)
        self.backoff = None
        self.state = State.TX
        self.transmitting = True
        if self.hooks is not None:
            self.hooks.on_attempt(self, att, frame)
        self.channel.begin_transmission(
            TransmissionRecord(self.id, now, dur, self.rx_power_db, frame))

    def on_tx_end(self, rec):
        self.transmitting = False
        self.state = State.WAIT
        if self.channel.busy[self.id] == 0:
            self.idle_since = self.sim.now
        self.timeout_deferred = False
        self.timeout_ev = self.sim.after(self.p.ack_timeout, self.id, "timeout", self._on_timeout)

    def _on_timeout(self):
        self.timeout_ev = None
        if self.state is not State.WAIT:
            return
        if self.channel.busy[self.id]:
            # something is still on the air; the reply may be behind it
            self.timeout_deferred = True
            return
        att = self.attempt_in_flight
        att.no_response = True
        if self.cd.enabled:
            self.fq.append(Notice(att.tt, att))
        self._fail(att, FailureCause.CHANNEL_ERROR)

    @property
    def attempt_in_flight(self):
        return self.attempts[-1] if self.attempts else None

    # ----- outcomes

    def _succeed(self, att):
        if self.timeout_ev is not None:
            self.timeout_ev.cancelled = True
            self.timeout_ev = None
        self.timeout_deferred = False
        att.status = "acked"
        carried = att.carried
        if att.kind is FrameKind.DATA_CN and self.cq and self.cq[0] is carried:
            self.cq.popleft()
        elif att.kind is FrameKind.DATA_FN and self.fq and self.fq[0] is carried:
            self.fq.popleft()
        self.retries = 0
        self.cw = self.backoff_policy.on_success(self.cw)
        self.rate_policy.on_success()
        if self.hooks is not None:
            self.hooks.on_delivered(self, att, self.current)
        self._next_packet()

    def _fail(self, att, cause, path=None):
        if self.timeout_ev is not None:
            self.timeout_ev.cancelled = True
            self.timeout_ev = None
        self.timeout_deferred = False
        att.status = "failed"
        att.cause = cause
        if path is not None:
            att.path = path
            att.detect_time = self.sim.now
            if self.hooks is not None:
                self.hooks.on_detect(self, att, path)
        self._emit("classify", "attempt=%d cause=%s" % (att.index, cause))
        self.retries += 1
        self.cw = self.backoff_policy.on_failure(self.cw, cause)
        steps = self.rate_policy.steps_down
        self.rate_policy.on_failure(cause)
        att.stepped_rate = self.rate_policy.steps_down != steps
        if self.hooks is not None:
            self.hooks.on_failure(self, att)
        if self.retries >= self.p.retry_limit:
            self._emit("drop", "seq=%d" % self.current.seqno)
            if self.hooks is not None:
                self.hooks.on_drop(self, self.current)
            self.retries = 0
            self.cw = self.p.cw_min
            self._next_packet()
        else:
            self._enter_contention()

    def _revise(self, att, path):
        if att.status != "failed" or att.cause is FailureCause.COLLISION:
            return False
        old = att.cause
        att.cause = FailureCause.COLLISION
        att.path = path
        att.detect_time = self.sim.now
        att.revised = True
        self._emit("revise", "attempt=%d path=%s" % (att.index, path))
        self.backoff_policy.on_cause_revised(old, att.cause)
        self.rate_policy.on_cause_revised(old, att.cause, att.stepped_rate)
        if self.hooks is not None:
            self.hooks.on_detect(self, att, path)
        return True

    # ----- frames from the AP

    def on_receive(self, frame, rec):
        kind = frame.kind
        if kind is FrameKind.ET:
            if self.cd.enabled:
                self._on_et(frame)
            return
        mine = frame.dst == self.id
        waiting = self.state is State.WAIT
        att = self.attempt_in_flight
        if mine and waiting and frame.attempt is att:
            if kind is FrameKind.ACK_CN and self.cd.enabled and att.kind is not FrameKind.DATA_CN:
                # answer to our failure notice: the CN names the frame that beat ours
                self._on_cn(frame, own_relay=False, path="fn")
            elif kind is FrameKind.ACK_CN and self.cd.enabled:
                self._on_cn(frame, own_relay=True)
            self._succeed(att)
        elif kind is FrameKind.ACK_CN and self.cd.enabled:
            self._on_cn(frame, own_relay=False, path="second")

    def _on_et(self, frame):
        now_local = self.local()
        est = cdet.recover_start(now_local, frame.notice.rel)
        et = ET(est, frame.notice.dur)
        self._emit("rx_et", "est_wire=%d edt=%d" % (frame.notice.rel, et.edt))
        try:
            hit = cdet.first_phase_check(et, self.tq.near(et.est, et.edt),
                                         self.cd.literal_overlap)
        except SimulationError:
            # only reachable with hidden stations stretching one energy over
            # two of our attempts; take the latest
            hits = [e for e in self.tq.near(et.est, et.edt)
                    if cdet.overlap(et.est, et.edt, e.tt.st, e.tt.dt, self.cd.literal_overlap)]
            hit = (hits[-1], et.edt > hits[-1].tt.dt)
        if hit is None:
            return
        att, detected = hit
        # an ET answers the question an FN would have asked
        cdet.purge_overlapping(self.fq, att.tt, self.cd.literal_overlap)
        if detected:
            if not any(cdet.tt_overlap(n.tt, att.tt, self.cd.literal_overlap) for n in self.cq):
                self.cq.append(Notice(att.tt, att))
        if self.state is State.WAIT and att is self.attempt_in_flight:
            if detected:
                self._fail(att, FailureCause.COLLISION, "first")
            else:
                self._fail(att, FailureCause.CHANNEL_ERROR)
        elif detected:
            self._revise(att, "first")

    def _on_cn(self, frame, own_relay, path="second"):
        cn = TT(cdet.recover_start(self.local(), frame.notice.rel), frame.notice.dur)
        self._emit("rx_cn", "st_wire=%d dt=%d" % (frame.notice.rel, cn.dt))
        lit = self.cd.literal_overlap
        if own_relay:
            return
        # everyone heard this CN; nothing overlapping it needs sending again
        if cdet.purge_overlapping(self.cq, cn, lit):
            self._emit("cq_purge", "dt=%d" % cn.dt)
        for att in cdet.second_phase_check(cn, self.tq.near(cn.st, cn.dt), lit):
            if att.status == "failed":
                self._revise(att, path)
