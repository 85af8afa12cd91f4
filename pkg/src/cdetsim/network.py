"""Wire a scenario into stations, an AP and a channel, and run it."""

from dataclasses import dataclass, field

from cdetsim import cdet
from cdetsim.adaptation import BackoffPolicy, RatePolicy
from cdetsim.ap import AccessPoint
from cdetsim.channel import Audibility, CaptureConfig, Channel
from cdetsim.kernel import SeededRng, Simulator
from cdetsim.mac import (CdetConfig, Frame, FrameKind, Station, Traffic, airtime,
                         control_durations, frame_bits)
from cdetsim.metrics import MetricsCollector

US_PER_S = 1_000_000
TQ_HORIZON_FACTOR = 10


def node_name(node_id):
    return "ap" if node_id == 0 else "sta%d" % node_id


def default_rq_horizon(params, cdet_cfg, max_payload_bits):
    """First-phase bound of the longest possible frame plus a full retry window."""
    ctl = control_durations(params)
    longest = Frame(FrameKind.DATA_CN, 1, 0, payload_bits=max_payload_bits,
                    pad_bits=(2 * cdet_cfg.rw - 1) * cdet.pad_unit_bits(cdet_cfg.t_g,
                                                                        max(params.rates)))
    t_max = airtime(frame_bits(longest, params), min(params.rates), params.phy_preamble)
    bound = t_max + params.sifs + ctl[FrameKind.ET]
    per_try = params.difs + params.cw_max * params.slot + t_max + params.ack_timeout \
        + ctl[FrameKind.ET]
    return bound + params.retry_limit * per_try


@dataclass
class RunResult:
    metrics: object
    trace: list = field(default_factory=list)
    wire_log: list = field(default_factory=list)
    network: object = None

    def trace_text(self):
        return "".join(line + "\n" for line in self.trace)


class Network:
    """One BSS built from a :class:`~cdetsim.scenario.Scenario`.

    The network is also the hook object stations and the AP report to: it
    feeds metrics, the optional trace, and the log of every relative start
    value put on the air.
    """

    def __init__(self, scenario, trace=False):
        self.scenario = sc = scenario
        self.sim = Simulator()
        self.params = params = sc.mac_params()
        st = sc.stations
        n = st.count
        mac_rng = SeededRng(sc.seed, "mac")
        self.error_rng = SeededRng(sc.seed, "channel")
        offset_rng = SeededRng(sc.seed, "offsets")

        self.cdet_cfg = CdetConfig(enabled=sc.cdet.enabled, rw=sc.cdet.rw, t_g=sc.cdet.t_g,
                                   literal_overlap=sc.cdet.overlap == "literal")
        payloads = [int(sc.per_station(st.payload_bits, i)) for i in range(1, n + 1)]
        max_payload = max(payloads + ([st.payload_range[1]] if st.payload_range else []))
        horizon = sc.cdet.rq_horizon_us or default_rq_horizon(params, self.cdet_cfg, max_payload)
        self.cdet_cfg.rq_horizon = horizon
        # a CN can sit in its sender's CQ across several dropped packets, so
        # stations remember their own attempts for much longer than the AP
        self.cdet_cfg.tq_horizon = sc.cdet.tq_horizon_us or TQ_HORIZON_FACTOR * horizon

        if st.clock_offsets is not None:
            offsets = list(st.clock_offsets)
        elif st.clock_offset_range is not None:
            lo, hi = st.clock_offset_range
            offsets = [offset_rng.uniform_int(lo, hi) for _ in range(n)]
        else:
            offsets = [0] * n

        self.trace_enabled = trace
        self.trace_lines = []
        self.wire_log = []
        self.duration_us = int(round(sc.duration_s * US_PER_S))
        self.end_us = self.duration_us + int(round(sc.drain_s * US_PER_S))
        self.metrics = MetricsCollector(self.duration_us)

        capture = CaptureConfig(sc.channel.capture, sc.channel.capture_threshold_db)
        self.ap = AccessPoint(self.sim, params, self.cdet_cfg, capture, sc.channel.p_e,
                              self.error_rng, rq_horizon=horizon, hooks=self)
        self.stations = []
        for i in range(1, n + 1):
            pol = sc.policy_for(i)
            rates = params.rates
            start = rates.index(float(st.rate)) if st.rate is not None else len(rates) - 1
            rp = RatePolicy(pol.rate, rates, pol.arf_fail_threshold, pol.arf_success_threshold,
                            start_index=start)
            bp = BackoffPolicy(pol.backoff, params.cw_min, params.cw_max)
            traffic = Traffic(saturated=st.traffic == "saturated", arrival_rate=st.arrival_rate,
                              payload_bits=payloads[i - 1],
                              payload_range=tuple(st.payload_range) if st.payload_range else None)
            sta = Station(i, self.sim, params, self.cdet_cfg, offsets[i - 1], bp, rp, traffic,
                          mac_rng, rx_power_db=float(sc.per_station(st.rx_power_db, i)),
                          hooks=self)
            self.stations.append(sta)
        nodes = [self.ap] + self.stations
        aud = Audibility(n + 1, [tuple(p) for p in sc.channel.hidden_pairs],
                         sc.channel.audibility)
        self.channel = Channel(self.sim, nodes, aud, sc.channel.p_e,
                               sc.channel.robust_control_frames, self.error_rng)
        for node in nodes:
            node.channel = self.channel

    # ----- hooks

    def trace(self, node, kind, detail=""):
        if self.trace_enabled:
            self.trace_lines.append("%d\t%s\t%s\t%s" % (self.sim.now, node_name(node), kind, detail))

    def on_attempt(self, sta, att, frame):
        if self.trace_enabled:
            self.trace_lines.append("%d\t%s\ttx\tattempt=%d kind=%s dt=%d pad=%d rate=%s"
                                    % (self.sim.now, node_name(sta.id), att.index,
                                       frame.kind.value, att.tt.dt, att.pad_units, att.rate))

    def on_failure(self, sta, att):
        pass

    def on_detect(self, sta, att, path):
        self.trace(sta.id, "detected", "attempt=%d path=%s" % (att.index, path))

    def on_delivered(self, sta, att, packet):
        self.metrics.on_delivered(self.sim.now, packet)

    def on_drop(self, sta, packet):
        self.metrics.on_drop(self.sim.now)

    def on_energy(self, outcome, interval, records, eid):
        self.metrics.on_energy(outcome, interval, records, eid)

    def on_et_sent(self):
        self.metrics.on_et_sent(self.sim.now)

    def on_wire(self, node, kind, value):
        self.wire_log.append((self.sim.now, node, kind, value))
        self.trace(node, "wire", "%s=%d" % (kind, value))

    # ----- running

    def run(self):
        for sta in self.stations:
            sta.start()
        self.sim.run_until(self.end_us)
        sc = self.scenario
        m = self.metrics.finalize(self.stations, sc.seed, sc.duration_s)
        return RunResult(m, self.trace_lines, self.wire_log, self)


def run_scenario(scenario, trace=False):
    return Network(scenario, trace=trace).run()
