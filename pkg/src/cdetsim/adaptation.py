"""Failure-response policies: contention window and ARF rate control.

Both come in a standard flavour, which treats every failure the same, and a
differentiated flavour that looks at the cause reported by collision
detection.
"""

import logging

from cdetsim.cdet import FailureCause

log = logging.getLogger(__name__)

BACKOFF_MODES = ("standard", "differentiated")
RATE_MODES = ("off", "standard_arf", "differentiated_arf")


class BackoffPolicy:
    """Binary exponential backoff, optionally only for detected collisions."""

    def __init__(self, mode="standard", cw_min=31, cw_max=1023):
        if mode not in BACKOFF_MODES:
            raise ValueError("unknown backoff mode %r" % (mode,))
        self.mode = mode
        self.cw_min = cw_min
        self.cw_max = cw_max

    def on_failure(self, cw, cause):
        if self.mode == "differentiated" and cause is not FailureCause.COLLISION:
            return cw
        return min(2 * (cw + 1) - 1, self.cw_max)

    def on_success(self, cw):
        return self.cw_min

    def on_cause_revised(self, old, new):
        # an already-chosen window is not rewritten after the fact
        pass


class RatePolicy:
    """Automatic Rate Fallback over an ordered rate set.

    ``fail_threshold`` consecutive counted failures step the rate down one
    level, ``success_threshold`` consecutive successes step it up; both
    counters reset whenever the rate changes. The differentiated variant only
    counts channel errors, so collisions leave the rate alone.
    """

    def __init__(self, mode="off", rates=(1.0, 2.0, 5.5, 11.0), fail_threshold=2,
                 success_threshold=10, start_index=None):
        if mode not in RATE_MODES:
            raise ValueError("unknown rate mode %r" % (mode,))
        if fail_threshold < 1 or success_threshold < 1:
            raise ValueError("ARF thresholds must be >= 1")
        self.mode = mode
        self.rates = tuple(sorted(rates))
        self.fail_threshold = fail_threshold
        self.success_threshold = success_threshold
        self.index = len(self.rates) - 1 if start_index is None else start_index
        self.fail_count = 0
        self.success_count = 0
        self.steps_down = 0
        self.steps_up = 0
        self.stale_steps = 0

    @property
    def rate(self):
        return self.rates[self.index]

    def _counts(self, cause):
        if self.mode == "standard_arf":
            return True
        if self.mode == "differentiated_arf":
            return cause is FailureCause.CHANNEL_ERROR
        return False

    def on_failure(self, cause):
        if not self._counts(cause):
            return self.rate
        self.success_count = 0
        self.fail_count += 1
        if self.fail_count >= self.fail_threshold:
            if self.index > 0:
                self.index -= 1
                self.steps_down += 1
            self.fail_count = 0
        return self.rate

    def on_success(self):
        if self.mode == "off":
            return self.rate
        self.fail_count = 0
        self.success_count += 1
        if self.success_count >= self.success_threshold:
            if self.index < len(self.rates) - 1:
                self.index += 1
                self.steps_up += 1
            self.success_count = 0
        return self.rate

    def on_cause_revised(self, old, new, stepped=False):
        """A channel error turned out to be a collision.

        ``stepped`` says whether that failure already pushed the rate down;
        such a step is kept and only counted.
        """
        if self.mode != "differentiated_arf":
            return
        if old is FailureCause.CHANNEL_ERROR and new is FailureCause.COLLISION:
            if stepped:
                self.stale_steps += 1
                log.debug("revised failure had already lowered the rate to %s", self.rate)
            else:
                self.fail_count = max(0, self.fail_count - 1)
