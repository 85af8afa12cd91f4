"""Access point: decodes uplink energy, acknowledges, and runs the AP half of CD-ET."""

from cdetsim import cdet
from cdetsim.cdet import TT, WireNotice
from cdetsim.channel import (Captured, ChannelError, CollisionNoCapture, Success,
                             TransmissionRecord, classify_reception)
from cdetsim.mac import Frame, FrameKind, BROADCAST, control_durations


class AccessPoint:
    id = 0

    def __init__(self, sim, params, cdet_cfg, capture_cfg, p_e, error_rng, offset=0,
                 rq_horizon=10**6, hooks=None):
        self.sim = sim
        self.p = params
        self.cd = cdet_cfg
        self.capture = capture_cfg
        self.p_e = p_e
        self.error_rng = error_rng
        self.offset = offset
        self.hooks = hooks
        self.channel = None
        self.transmitting = False
        self.rq = cdet.ReceiveQueue(rq_horizon)
        self.energies = 0
        self.dropped_replies = 0
        self._ctl = control_durations(params)

    def local(self, t=None):
        return (self.sim.now if t is None else t) + self.offset

    def _emit(self, kind, detail=""):
        if self.hooks is not None:
            self.hooks.trace(self.id, kind, detail)

    # the AP never contends and decodes uplink frames through on_energy_end
    def on_medium_busy(self, now):
        pass

    def on_medium_idle(self, now):
        pass

    def on_receive(self, frame, rec):
        pass

    def on_tx_end(self, rec):
        self.transmitting = False

    def on_energy_end(self, records, interval, ap_overlap):
        now = self.sim.now
        self.energies += 1
        eid = self.energies
        if ap_overlap:
            # we were talking over it, so nothing was decoded
            outcome = CollisionNoCapture(tuple(records))
        else:
            outcome = classify_reception(records, self.capture, self.p_e, self.error_rng)
        t_et = self._ctl[FrameKind.ET]
        bound = cdet.first_phase_delay_bound(
            [TT(r.start, r.duration) for r in records], self.p.sifs, t_et)
        winner = None
        if isinstance(outcome, Success):
            winner = outcome.record
        elif isinstance(outcome, Captured):
            winner = outcome.winner
        for r in records:
            att = r.frame.attempt
            if r is winner:
                att.truth = "success"
            elif len(records) > 1 or ap_overlap:
                att.truth = "collision"
            else:
                att.truth = "channel_error"
            att.energy_start = interval.est_global
            att.energy_bound = bound
            att.energy_id = eid
        self._emit("energy", "edt=%d n=%d outcome=%s"
                   % (interval.edt, len(records), type(outcome).__name__))
        if self.hooks is not None:
            self.hooks.on_energy(outcome, interval, records, eid)

        if winner is not None:
            self.rq.append(winner.source, TT(self.local(winner.start), winner.duration))
            self._send(self._reply_for(winner))
        elif self.cd.enabled:
            assert isinstance(outcome, (CollisionNoCapture, ChannelError))
            wire = cdet.make_wire_est(interval.edt, self.p.sifs, t_et)
            frame = Frame(FrameKind.ET, self.id, BROADCAST, notice=WireNotice(wire, interval.edt))
            if self.hooks is not None:
                self.hooks.on_wire(self.id, "est", wire)
            self._send(frame)

    def _reply_for(self, rec):
        """Ack, or Ack+CN when the data relayed a CN or its FN matched RQ."""
        frame = rec.frame
        data_end = self.local(rec.end)
        cn = None
        if self.cd.enabled and frame.kind is FrameKind.DATA_CN:
            # the sender referenced ST' to the end of our nominal Ack+CN
            st = data_end + self.p.sifs + self._ctl[FrameKind.ACK_CN] - frame.notice.rel
            cn = TT(st, frame.notice.dur)
        elif self.cd.enabled and frame.kind is FrameKind.DATA_FN:
            fn = TT(cdet.recover_start(data_end, frame.notice.rel), frame.notice.dur)
            cn = cdet.ap_on_fn(fn, self.rq, now_local=self.local(), exclude_source=rec.source,
                               literal=self.cd.literal_overlap)
            self._emit("fn_lookup", "match=%s" % (cn is not None))
        if cn is None:
            return Frame(FrameKind.ACK, self.id, frame.src, attempt=frame.attempt)
        start = self.local(self.sim.now + self.p.sifs)
        rel = (start - cn.st) + self._ctl[FrameKind.ACK_CN]
        if self.hooks is not None:
            self.hooks.on_wire(self.id, "st_relay", rel)
        return Frame(FrameKind.ACK_CN, self.id, frame.src, notice=WireNotice(rel, cn.dt),
                     attempt=frame.attempt)

    def _send(self, frame):
        self.sim.after(self.p.sifs, self.id, "ap_tx", self._transmit, frame)

    def _transmit(self, frame):
        if self.transmitting:
            self.dropped_replies += 1
            self._emit("reply_dropped", frame.kind.value)
            return
        dur = self._ctl[frame.kind]
        self.transmitting = True
        if frame.kind is FrameKind.ET and self.hooks is not None:
            self.hooks.on_et_sent()
        self._emit("tx", "kind=%s dur=%d" % (frame.kind.value, dur))
        self.channel.begin_transmission(TransmissionRecord(self.id, self.sim.now, dur, 0.0, frame))
