"""Scenario files.

A scenario is a YAML mapping with a few top-level scalars and one section per
concern::

    seed: 7
    duration_s: 2.0
    stations:
      count: 2
      traffic: saturated        # or poisson (uses arrival_rate, frames/s)
      payload_bits: 8000        # scalar, or one value per station
      rx_power_db: [10, 0]
      clock_offset_range: [-1000000, 1000000]
    mac:      {cw_min: 31, rates: [1, 2, 5.5, 11]}
    channel:  {p_e: 0.0, capture: false, capture_threshold_db: 6}
    cdet:     {enabled: true, rw: 16, overlap: amended}
    policy:   {backoff: standard, rate: "off"}
    policies: {2: {backoff: differentiated}}

Every key can also be addressed by its dotted path (``cdet.rw``), which is how
sweeps name the parameter they vary.
"""

import copy
import dataclasses
import difflib
from dataclasses import dataclass, field

import yaml

from cdetsim.adaptation import BACKOFF_MODES, RATE_MODES
from cdetsim.mac import MacParams


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        self.message = message
        self.key = key
        self.line = line
        super().__init__(str(self))

    def __str__(self):
        where = []
        if self.line is not None:
            where.append("line %d" % self.line)
        if self.key:
            where.append(self.key)
        return ": ".join(where + [self.message])


@dataclass
class StationsSpec:
    count: int = 2
    traffic: str = "saturated"
    arrival_rate: float = 100.0
    payload_bits: object = 8000
    payload_range: list = None
    rx_power_db: object = 0.0
    clock_offsets: list = None
    clock_offset_range: list = None
    rate: float = None


@dataclass
class ChannelSpec:
    p_e: float = 0.0
    capture: bool = False
    capture_threshold_db: float = 6.0
    robust_control_frames: bool = False
    hidden_pairs: list = field(default_factory=list)
    audibility: list = None


@dataclass
class CdetSpec:
    enabled: bool = True
    rw: int = 16
    t_g: int = 1
    overlap: str = "amended"
    rq_horizon_us: int = None
    tq_horizon_us: int = None


@dataclass
class PolicySpec:
    backoff: str = "standard"
    rate: str = "off"
    arf_fail_threshold: int = 2
    arf_success_threshold: int = 10

    def __post_init__(self):
        # YAML 1.1 reads a bare `off` as false
        if self.rate is False:
            self.rate = "off"


SECTIONS = {
    "stations": StationsSpec,
    "channel": ChannelSpec,
    "cdet": CdetSpec,
    "policy": PolicySpec,
}
TOP_SCALARS = ("seed", "duration_s", "drain_s")
MAC_KEYS = tuple(f.name for f in dataclasses.fields(MacParams))


@dataclass
class Scenario:
    seed: int = 1
    duration_s: float = 1.0
    drain_s: float = 0.05
    stations: StationsSpec = field(default_factory=StationsSpec)
    mac: dict = field(default_factory=dict)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    cdet: CdetSpec = field(default_factory=CdetSpec)
    policy: PolicySpec = field(default_factory=PolicySpec)
    policies: dict = field(default_factory=dict)

    # ----- construction

    @classmethod
    def from_dict(cls, data, lines=None):
        lines = lines or {}

        def fail(msg, key):
            raise ConfigError(msg, key, _line_of(lines, key))

        if data is None:
            data = {}
        if not isinstance(data, dict):
            fail("scenario must be a mapping", None)
        known = set(TOP_SCALARS) | set(SECTIONS) | {"mac", "policies"}
        for key in data:
            if key not in known:
                fail("unknown key%s" % _suggest(key, known), str(key))
        kwargs = {}
        for key in TOP_SCALARS:
            if key in data:
                kwargs[key] = data[key]
        for name, spec_cls in SECTIONS.items():
            section = data.get(name) or {}
            if not isinstance(section, dict):
                fail("must be a mapping", name)
            names = {f.name for f in dataclasses.fields(spec_cls)}
            for key in section:
                if key not in names:
                    fail("unknown key%s" % _suggest(key, names), "%s.%s" % (name, key))
            kwargs[name] = spec_cls(**section)
        mac = data.get("mac") or {}
        if not isinstance(mac, dict):
            fail("must be a mapping", "mac")
        for key in mac:
            if key not in MAC_KEYS:
                fail("unknown key%s" % _suggest(key, MAC_KEYS), "mac.%s" % key)
        kwargs["mac"] = dict(mac)
        policies = data.get("policies") or {}
        if not isinstance(policies, dict):
            fail("must be a mapping of station id to policy overrides", "policies")
        kwargs["policies"] = {int(k): dict(v or {}) for k, v in policies.items()}
        scenario = cls(**kwargs)
        scenario.validate(lines)
        return scenario

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **dotted):
        """Copy with dotted-path overrides, e.g. ``replace(**{"cdet.rw": 4})``."""
        data = self.to_dict()
        for path, value in dotted.items():
            set_path(data, path, value)
        return Scenario.from_dict(data)

    # ----- derived objects

    def mac_params(self):
        mac = dict(self.mac)
        if "rates" in mac:
            mac["rates"] = tuple(float(r) for r in mac["rates"])
        return MacParams(**mac)

    def per_station(self, value, i):
        if isinstance(value, (list, tuple)):
            return value[i - 1]
        return value

    def policy_for(self, station):
        base = dataclasses.asdict(self.policy)
        base.update(self.policies.get(station, {}))
        return PolicySpec(**base)

    # ----- validation

    def validate(self, lines=None):
        lines = lines or {}

        def fail(msg, key):
            raise ConfigError(msg, key, _line_of(lines, key))

        st = self.stations
        if not isinstance(self.seed, int):
            fail("must be an integer", "seed")
        if not _is_number(self.duration_s) or self.duration_s <= 0:
            fail("must be > 0", "duration_s")
        if not _is_number(self.drain_s) or self.drain_s < 0:
            fail("must be >= 0", "drain_s")
        if not isinstance(st.count, int) or st.count < 1:
            fail("must be a positive integer", "stations.count")
        n = st.count
        if st.traffic not in ("saturated", "poisson"):
            fail("must be 'saturated' or 'poisson'", "stations.traffic")
        if st.traffic == "poisson" and (not _is_number(st.arrival_rate) or st.arrival_rate <= 0):
            fail("must be > 0 for poisson traffic", "stations.arrival_rate")
        for key in ("payload_bits", "rx_power_db"):
            value = getattr(st, key)
            if isinstance(value, (list, tuple)):
                if len(value) != n:
                    fail("needs one value per station (%d)" % n, "stations." + key)
                values = value
            else:
                values = [value]
            for v in values:
                if not _is_number(v):
                    fail("must be numeric", "stations." + key)
                if key == "payload_bits" and (v < 0 or int(v) != v):
                    fail("must be a non-negative integer", "stations." + key)
        if st.payload_range is not None:
            pr = st.payload_range
            if len(pr) != 2 or not 0 <= pr[0] <= pr[1]:
                fail("must be [lo, hi] with 0 <= lo <= hi", "stations.payload_range")
        if st.clock_offsets is not None:
            if len(st.clock_offsets) != n or not all(isinstance(o, int) for o in st.clock_offsets):
                fail("needs one integer offset per station", "stations.clock_offsets")
        if st.clock_offset_range is not None:
            r = st.clock_offset_range
            if len(r) != 2 or r[0] > r[1]:
                fail("must be [lo, hi] with lo <= hi", "stations.clock_offset_range")
        try:
            params = self.mac_params()
        except (TypeError, ValueError) as exc:
            fail(str(exc), "mac")
        if st.rate is not None and float(st.rate) not in params.rates:
            fail("must be one of mac.rates %s" % (list(params.rates),), "stations.rate")

        ch = self.channel
        if not _is_number(ch.p_e) or not 0.0 <= ch.p_e <= 1.0:
            fail("must be in [0, 1]", "channel.p_e")
        for pair in ch.hidden_pairs:
            if len(pair) != 2 or not all(isinstance(i, int) and 1 <= i <= n for i in pair):
                fail("station ids must be in 1..%d" % n, "channel.hidden_pairs")
        if ch.audibility is not None:
            m = ch.audibility
            if len(m) != n + 1 or any(len(row) != n + 1 for row in m):
                fail("must be a %dx%d matrix (AP is node 0)" % (n + 1, n + 1), "channel.audibility")

        cd = self.cdet
        if not isinstance(cd.rw, int) or cd.rw < 1:
            fail("must be an integer >= 1", "cdet.rw")
        if not isinstance(cd.t_g, int) or cd.t_g < 1:
            fail("must be an integer >= 1", "cdet.t_g")
        if cd.overlap not in ("amended", "literal"):
            fail("must be 'amended' or 'literal'", "cdet.overlap")
        for key in ("rq_horizon_us", "tq_horizon_us"):
            value = getattr(cd, key)
            if value is not None and (not isinstance(value, int) or value <= 0):
                fail("must be a positive integer", "cdet." + key)

        for sid, over in self.policies.items():
            if not 1 <= sid <= n:
                fail("no such station %d" % sid, "policies")
            names = {f.name for f in dataclasses.fields(PolicySpec)}
            for key in over:
                if key not in names:
                    fail("unknown key%s" % _suggest(key, names), "policies.%d.%s" % (sid, key))
        for sid in range(1, n + 1):
            pol = self.policy_for(sid)
            where = "policies.%d" % sid if sid in self.policies else "policy"
            if pol.backoff not in BACKOFF_MODES:
                fail("backoff must be one of %s" % (BACKOFF_MODES,), where + ".backoff")
            if pol.rate not in RATE_MODES:
                fail("rate must be one of %s" % (RATE_MODES,), where + ".rate")
            if pol.arf_fail_threshold < 1 or pol.arf_success_threshold < 1:
                fail("ARF thresholds must be >= 1", where)
        return self


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _suggest(key, candidates):
    close = difflib.get_close_matches(str(key), [str(c) for c in candidates], n=1)
    return " (did you mean %r?)" % close[0] if close else ""


def _line_of(lines, key):
    while key:
        if key in lines:
            return lines[key]
        key = key.rpartition(".")[0]
    return None


def all_keys():
    """Every dotted key a scenario accepts (used for sweep validation)."""
    keys = list(TOP_SCALARS)
    for name, spec_cls in SECTIONS.items():
        keys += ["%s.%s" % (name, f.name) for f in dataclasses.fields(spec_cls)]
    keys += ["mac.%s" % k for k in MAC_KEYS]
    return keys


def set_path(data, path, value):
    if path not in all_keys():
        raise ConfigError("unknown parameter%s" % _suggest(path, all_keys()), path)
    parts = path.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _key_lines(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            name = "%s.%s" % (prefix, k.value) if prefix else str(k.value)
            out[name] = k.start_mark.line + 1
            _key_lines(v, name, out)
    return out


def parse_scenario(text):
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(getattr(exc, "problem", None) or str(exc), line=line) from None
    lines = _key_lines(root) if root is not None else {}
    try:
        return Scenario.from_dict(copy.deepcopy(data), lines)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path):
    with open(path) as fh:
        return parse_scenario(fh.read())


def dump_scenario(scenario):
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)
