"""Shared medium: who is on the air, who can hear whom, what the AP decodes.

Propagation delay is zero, so a transmission is busy for every hearer from
its first to its last tick. The AP hears every station and measures merged
energy exactly; stations only ever decode frames sent by the AP.
"""

import math
from dataclasses import dataclass, field

from cdetsim.kernel import SimulationError


@dataclass(slots=True, eq=False)
class TransmissionRecord:
    source: int
    start: int
    duration: int
    rx_power_db: float
    frame: object
    # receivers at which this record was overlapped by another audible signal
    corrupted: set = field(default_factory=set)

    def __post_init__(self):
        if self.duration <= 0:
            raise SimulationError("transmission duration must be positive")

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True, slots=True)
class EnergyInterval:
    est_global: int
    edt: int

    @property
    def end(self):
        return self.est_global + self.edt


def merged_energy_interval(records):
    """Union extent of time-chained transmissions, as one energy interval."""
    recs = sorted(records, key=lambda r: (r.start, r.end))
    if not recs:
        raise ValueError("merged_energy_interval of an empty set")
    start = recs[0].start
    reach = recs[0].end
    for r in recs[1:]:
        if r.start > reach:
            raise ValueError("records are disjoint in time (gap at %d..%d)" % (reach, r.start))
        reach = max(reach, r.end)
    return EnergyInterval(start, reach - start)


@dataclass(frozen=True, slots=True)
class Success:
    record: TransmissionRecord

    @property
    def sources(self):
        return (self.record.source,)


@dataclass(frozen=True, slots=True)
class Captured:
    winner: TransmissionRecord
    losers: tuple

    @property
    def sources(self):
        return (self.winner.source,) + tuple(r.source for r in self.losers)


@dataclass(frozen=True, slots=True)
class CollisionNoCapture:
    records: tuple

    @property
    def sources(self):
        return tuple(r.source for r in self.records)


@dataclass(frozen=True, slots=True)
class ChannelError:
    record: TransmissionRecord

    @property
    def sources(self):
        return (self.record.source,)


@dataclass(frozen=True)
class CaptureConfig:
    enabled: bool = False
    threshold_db: float = 6.0


def db_sum(powers_db):
    return 10.0 * math.log10(sum(10.0 ** (p / 10.0) for p in powers_db))


def classify_reception(records, capture_cfg, p_e, error_rng):
    """Decide what a receiver makes of the overlapping records it heard.

    One record fails with probability ``p_e``. Several records collide unless
    capture is on and the strongest beats the power sum of the others by the
    threshold; the captured frame still has to survive its own ``p_e`` draw.
    """
    records = tuple(records)
    if not records:
        raise ValueError("classify_reception needs at least one record")
    if len(records) == 1:
        rec = records[0]
        if error_rng.bernoulli(p_e):
            return ChannelError(rec)
        return Success(rec)
    if capture_cfg.enabled:
        winner = max(records, key=lambda r: r.rx_power_db)
        rest = [r for r in records if r is not winner]
        if winner.rx_power_db - db_sum(r.rx_power_db for r in rest) >= capture_cfg.threshold_db:
            if error_rng.bernoulli(p_e):
                return CollisionNoCapture(records)
            return Captured(winner, tuple(rest))
    return CollisionNoCapture(records)


class Audibility:
    """hears[i][j]: node i can sense and decode node j. Node 0 is the AP."""

    def __init__(self, n_nodes, hidden_pairs=(), matrix=None):
        self.n = n_nodes
        if matrix is not None:
            self.hears = [[bool(v) for v in row] for row in matrix]
        else:
            self.hears = [[i != j for j in range(n_nodes)] for i in range(n_nodes)]
            for i, j in hidden_pairs:
                self.hears[i][j] = False
                self.hears[j][i] = False
        for i in range(n_nodes):
            self.hears[i][i] = False
            if i and not (self.hears[0][i] and self.hears[i][0]):
                raise ValueError("station %d and the AP must hear each other" % i)

    def hearers(self, j):
        return [i for i in range(self.n) if self.hears[i][j]]


class Channel:
    """The medium as seen by every node.

    Nodes must provide ``on_medium_busy(now)``, ``on_medium_idle(now)``,
    ``on_receive(frame, record)`` and a ``transmitting`` flag. The node at
    index 0 is the AP; it additionally gets ``on_energy_end(records,
    interval, ap_overlap)`` once a merged station energy has died out.
    """

    def __init__(self, sim, nodes, audibility, p_e=0.0, robust_control_frames=False,
                 error_rng=None):
        self.sim = sim
        self.nodes = nodes
        self.aud = audibility
        self.p_e = p_e
        self.robust_control_frames = robust_control_frames
        self.error_rng = error_rng
        n = len(nodes)
        self._hearers = [audibility.hearers(j) for j in range(n)]
        self.busy = [0] * n
        self.active = {}
        # station energy at the AP
        self._energy = []
        self._energy_live = 0
        self._energy_ap_overlap = False
        self._energy_check_pending = False

    def medium_idle(self, node_id):
        return self.busy[node_id] == 0

    def begin_transmission(self, rec):
        src = rec.source
        if src in self.active:
            raise SimulationError("node %d started a second transmission" % src)
        now = self.sim.now
        if rec.start != now:
            raise SimulationError("record start %d != now %d" % (rec.start, now))
        hears = self.aud.hears
        # half duplex: whatever src was hearing is lost at src
        for other in self.active.values():
            if hears[src][other.source]:
                other.corrupted.add(src)
        went_busy = []
        for r in self._hearers[src]:
            if self.busy[r] or self.nodes[r].transmitting:
                rec.corrupted.add(r)
                for other in self.active.values():
                    if hears[r][other.source]:
                        other.corrupted.add(r)
            self.busy[r] += 1
            if self.busy[r] == 1:
                went_busy.append(r)
        self.active[src] = rec
        if src != 0:
            if self._energy_live == 0 and not self._energy:
                self._energy_ap_overlap = self.nodes[0].transmitting
            elif self.nodes[0].transmitting:
                self._energy_ap_overlap = True
            self._energy.append(rec)
            self._energy_live += 1
        elif self._energy_live:
            self._energy_ap_overlap = True
        self.sim.at(rec.end, src, "tx_end", self._end_transmission, rec)
        for r in went_busy:
            self.nodes[r].on_medium_busy(now)

    def _end_transmission(self, rec):
        src = rec.source
        del self.active[src]
        now = self.sim.now
        for r in self._hearers[src]:
            self.busy[r] -= 1
            if self.busy[r] == 0:
                self.nodes[r].on_medium_idle(now)
        if src == 0:
            lossy = not self.robust_control_frames
            for r in self._hearers[0]:
                if r in rec.corrupted:
                    continue
                if lossy and self.error_rng is not None and self.error_rng.bernoulli(self.p_e):
                    continue
                self.nodes[r].on_receive(rec.frame, rec)
        else:
            self._energy_live -= 1
            if self._energy_live == 0 and not self._energy_check_pending:
                # a transmission starting on this same tick still merges
                self._energy_check_pending = True
                self.sim.at(now, 0, "energy_check", self._energy_check)
        self.nodes[src].on_tx_end(rec)

    def _energy_check(self):
        self._energy_check_pending = False
        if self._energy_live:
            return
        records = self._energy
        self._energy = []
        interval = merged_energy_interval(records)
        self.nodes[0].on_energy_end(records, interval, self._energy_ap_overlap)
        self._energy_ap_overlap = False
