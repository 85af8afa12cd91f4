"""Follow one captured collision through the failure-notice path.

Station 1 is received 10 dB louder than station 2. When both transmit at
once the AP decodes station 1 and acknowledges it, so station 2 only sees
a missing ACK. It first books that as a channel error, piggybacks a failure
notice on its next data frame, and the AP answers with the stored record
of the frame that beat it. Station 2 then revises its verdict.
"""

from cdetsim.network import run_scenario
from cdetsim.scenario import Scenario

scenario = Scenario.from_dict({
    "seed": 3,
    "duration_s": 0.08,
    "drain_s": 0.02,
    "stations": {"count": 2, "payload_bits": 800, "rx_power_db": [10, 0]},
    "mac": {"cw_min": 7},
    "channel": {"capture": True, "capture_threshold_db": 6},
})
result = run_scenario(scenario, trace=True)
lines = [line.split("\t") for line in result.trace]

first = next(i for i, f in enumerate(lines) if f[2] == "energy" and "Captured" in f[3])
revised = next(i for i, f in enumerate(lines[first:], first) if f[2] == "revise")


def relevant(t, node, kind, detail):
    if node == "sta2":
        return True
    if node == "ap":
        return "n=2" in detail or kind in ("fn_lookup", "wire") or "AckWithCn" in detail
    return t == lines[first - 1][0]  # station 1's half of the first collision

# a failure notice can itself be captured, so it may take a few tries
for t, node, kind, detail in lines[first - 2:revised + 1]:
    if relevant(t, node, kind, detail):
        print("%7s  %-4s  %-9s %s" % (t, node, kind, detail))

m = result.metrics
print()
print("captured collisions: %d, resolved through a failure notice: %d"
      % (m.captured_collisions, m.fn_path_detections))
