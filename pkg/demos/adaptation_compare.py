"""Backoff and rate control with and without knowing why a frame failed.

Standard 802.11 treats every lost frame as a collision: it doubles the
contention window, and ARF drops the bit rate after two losses in a row.
With collision detection a station can react only to the failures that
call for it.
"""

from cdetsim.network import run_scenario
from cdetsim.scenario import Scenario


def run(policy, **extra):
    data = {"seed": 7, "policy": policy, "channel": {"p_e": 0.0}}
    data.update(extra)
    return run_scenario(Scenario.from_dict(data)).metrics


# A lone station on a noisy link never collides, so doubling the window only
# wastes idle slots.
noisy = {"duration_s": 5.0, "stations": {"count": 1}, "channel": {"p_e": 0.2}}
print("one station, 20% frame errors")
for mode in ("standard", "differentiated"):
    m = run({"backoff": mode}, **noisy)
    print("  %-15s cw mean %6.2f  max %4d  throughput %.3f Mbit/s"
          % (mode, m.cw_mean, m.cw_max_seen, m.throughput_bps / 1e6))

# Five busy stations on a clean link: every loss is a collision, and lowering
# the rate only makes each frame occupy the medium longer.
busy = {"duration_s": 10.0, "stations": {"count": 5, "payload_bits": 800}}
print()
print("five stations, clean channel")
for mode in ("standard_arf", "differentiated_arf"):
    m = run({"rate": mode}, **busy)
    print("  %-19s mean rate %6.3f Mbit/s  lowest %4.1f  steps down %4d  throughput %.3f Mbit/s"
          % (mode, m.rate_mean_mbps, m.rate_min_mbps, m.rate_steps_down,
             m.throughput_bps / 1e6))

# The differentiated ARF still steps down now and then. Two things cause it:
# collisions with equal padding are never detected, and the station that sent
# the longest frame only learns about a collision after its rate logic has
# already reacted to the provisional channel-error verdict.
