"""Run accounting against the simulator's ground truth.

Only attempts that start inside the measurement window count. The run keeps
going for a short drain period afterwards so that late second-phase and FN
evidence for those attempts still lands.
"""

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field

import numpy as np

from cdetsim.cdet import FailureCause
from cdetsim.channel import Captured, ChannelError, CollisionNoCapture
from cdetsim.mac import FrameKind


@dataclass
class RunMetrics:
    seed: int = 0
    stations: int = 0
    duration_s: float = 0.0
    attempts: int = 0
    successes: int = 0
    failures: int = 0
    delivered_frames: int = 0
    dropped_frames: int = 0
    true_collisions: int = 0
    captured_collisions: int = 0
    true_channel_errors: int = 0
    collision_as_collision: int = 0
    collision_as_channel_error: int = 0
    channel_error_as_collision: int = 0
    channel_error_as_channel_error: int = 0
    detection_rate: float = math.nan
    detected_collision_events: int = 0
    collision_event_detection_rate: float = math.nan
    equal_base_collision_events: int = 0
    equal_base_detection_rate: float = math.nan
    first_phase_detections: int = 0
    second_phase_detections: int = 0
    fn_path_detections: int = 0
    cause_revisions: int = 0
    et_frames_sent: int = 0
    cn_piggybacks: int = 0
    fn_piggybacks: int = 0
    pad_bit_overhead: float = 0.0
    detection_latency_mean_us: float = math.nan
    detection_latency_p95_us: float = math.nan
    first_phase_bound_violations: int = 0
    throughput_bps: float = 0.0
    mean_access_delay_us: float = math.nan
    cw_mean: float = math.nan
    cw_max_seen: int = 0
    rate_mean_mbps: float = math.nan
    rate_min_mbps: float = math.nan
    rate_steps_down: int = 0
    stale_rate_steps: int = 0
    per_station: list = field(default_factory=list, repr=False)

    @classmethod
    def columns(cls):
        return [f.name for f in dataclasses.fields(cls) if f.name != "per_station"]

    def row(self):
        return [_fmt(getattr(self, c)) for c in self.columns()]

    def as_dict(self):
        return {c: getattr(self, c) for c in self.columns()}


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(round(v, 9))
    return str(v)


def csv_text(rows, extra_columns=()):
    """CSV with one header row. ``rows`` holds (extras, RunMetrics) pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(extra_columns) + RunMetrics.columns())
    for extras, m in rows:
        w.writerow([_fmt(x) for x in extras] + m.row())
    return buf.getvalue()


def _ratio(num, den):
    return num / den if den else math.nan


class MetricsCollector:
    """Receives live events from a run; ``finalize`` does the rest from attempt logs."""

    def __init__(self, window_end):
        self.window_end = window_end
        self.energies = {}
        self.true_collisions = 0
        self.captured = 0
        self.channel_errors = 0
        self.et_sent = 0
        self.delivered = 0
        self.delivered_bits = 0
        self.dropped = 0
        self.access_delays = []

    def on_energy(self, outcome, interval, records, eid):
        if interval.est_global >= self.window_end:
            return
        atts = [r.frame.attempt for r in records]
        self.energies[eid] = (outcome, atts)
        if isinstance(outcome, Captured):
            self.true_collisions += 1
            self.captured += 1
        elif isinstance(outcome, CollisionNoCapture):
            self.true_collisions += 1
        elif isinstance(outcome, ChannelError):
            self.channel_errors += 1

    def on_et_sent(self, now):
        if now <= self.window_end:
            self.et_sent += 1

    def on_delivered(self, now, packet):
        if now <= self.window_end:
            self.delivered += 1
            self.delivered_bits += packet.payload_bits
            self.access_delays.append(now - packet.head_since)

    def on_drop(self, now):
        if now <= self.window_end:
            self.dropped += 1

    def finalize(self, stations, seed, duration_s):
        m = RunMetrics(seed=seed, stations=len(stations), duration_s=duration_s)
        window = [a for st in stations for a in st.attempts if a.start < self.window_end]
        m.attempts = len(window)
        m.successes = sum(a.status == "acked" for a in window)
        failed = [a for a in window if a.status == "failed"]
        m.failures = len(failed)
        m.delivered_frames = self.delivered
        m.dropped_frames = self.dropped
        m.true_collisions = self.true_collisions
        m.captured_collisions = self.captured
        m.true_channel_errors = self.channel_errors

        latencies = []
        for a in failed:
            truly = a.truth == "collision"
            said = a.cause is FailureCause.COLLISION
            if truly and said:
                m.collision_as_collision += 1
            elif truly:
                m.collision_as_channel_error += 1
            elif said:
                m.channel_error_as_collision += 1
            else:
                m.channel_error_as_channel_error += 1
            if said:
                if a.path == "first":
                    m.first_phase_detections += 1
                elif a.path == "second":
                    m.second_phase_detections += 1
                elif a.path == "fn":
                    m.fn_path_detections += 1
                if a.energy_start is not None and a.detect_time is not None:
                    latency = a.detect_time - a.energy_start
                    latencies.append(latency)
                    if a.path == "first" and latency > a.energy_bound:
                        m.first_phase_bound_violations += 1
            m.cause_revisions += a.revised
        m.detection_rate = _ratio(m.collision_as_collision,
                                  m.collision_as_collision + m.collision_as_channel_error)
        if latencies:
            m.detection_latency_mean_us = float(np.mean(latencies))
            m.detection_latency_p95_us = float(np.percentile(latencies, 95))

        # equal-base collisions: every frame had the same unpadded length and
        # rate and drew padding from the ordinary window, so only RBP can tell
        # them apart
        events = detected = plain = plain_detected = 0
        for outcome, atts in self.energies.values():
            if not isinstance(outcome, CollisionNoCapture):
                continue
            events += 1
            ok = all(a.status == "failed" and a.cause is FailureCause.COLLISION for a in atts)
            detected += ok
            bases = {(a.bits - a.pad_bits, a.rate) for a in atts}
            if len(bases) == 1 and all(a.kind is not FrameKind.DATA_CN for a in atts):
                plain += 1
                plain_detected += ok
        m.detected_collision_events = detected
        m.collision_event_detection_rate = _ratio(detected, events)
        m.equal_base_collision_events = plain
        m.equal_base_detection_rate = _ratio(plain_detected, plain)

        m.et_frames_sent = self.et_sent
        m.cn_piggybacks = sum(a.kind is FrameKind.DATA_CN for a in window)
        m.fn_piggybacks = sum(a.kind is FrameKind.DATA_FN for a in window)
        total_bits = sum(a.bits for a in window)
        m.pad_bit_overhead = _ratio(sum(a.pad_bits for a in window), total_bits) if window else 0.0
        m.throughput_bps = self.delivered_bits / duration_s
        if self.access_delays:
            m.mean_access_delay_us = float(np.mean(self.access_delays))
        if window:
            m.cw_mean = float(np.mean([a.cw for a in window]))
            m.cw_max_seen = int(max(a.cw for a in window))
            rates = [float(a.rate) for a in window]
            m.rate_mean_mbps = float(np.mean(rates))
            m.rate_min_mbps = float(min(rates))
        m.rate_steps_down = sum(st.rate_policy.steps_down for st in stations)
        m.stale_rate_steps = sum(st.rate_policy.stale_steps for st in stations)
        m.per_station = [self._station_summary(st) for st in stations]
        return m

    def _station_summary(self, st):
        window = [a for a in st.attempts if a.start < self.window_end]
        failed = [a for a in window if a.status == "failed"]
        return {
            "station": st.id,
            "attempts": len(window),
            "successes": sum(a.status == "acked" for a in window),
            "failures": len(failed),
            "classified_collisions": sum(a.cause is FailureCause.COLLISION for a in failed),
            "true_collisions": sum(a.truth == "collision" for a in failed),
            "cw_mean": float(np.mean([a.cw for a in window])) if window else math.nan,
            "rate_mean_mbps": float(np.mean([a.rate for a in window])) if window else math.nan,
        }

