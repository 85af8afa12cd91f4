"""Event queue, integer simulation clock and seeded random streams.

Time is an integer count of microseconds on the global timeline. Events at
the same instant are dispatched in the order they were scheduled.
"""

import heapq
import random


class SimulationError(RuntimeError):
    """A broken internal invariant (scheduling into the past, bad ranges...)."""


class Event:
    __slots__ = ("fire_at", "seq", "target", "kind", "callback", "args", "cancelled")

    def __init__(self, fire_at, target, kind, callback=None, args=()):
        self.fire_at = fire_at
        self.seq = -1
        self.target = target
        self.kind = kind
        self.callback = callback
        self.args = args
        self.cancelled = False

    def __repr__(self):
        return "Event(t=%d, seq=%d, node=%s, %s)" % (self.fire_at, self.seq, self.target, self.kind)


class Simulator:
    """Single global event list. ``now`` only moves forward."""

    def __init__(self):
        self.now = 0
        self._queue = []
        self._seq = 0
        self.dispatched = 0
        # optional hook called as on_dispatch(event) before each callback
        self.on_dispatch = None

    def __len__(self):
        return len(self._queue)

    def schedule(self, event):
        if event.fire_at < self.now:
            raise SimulationError(
                "cannot schedule %r in the past (now=%d)" % (event, self.now))
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (event.fire_at, event.seq, event))
        return event

    def at(self, fire_at, target, kind, callback, *args):
        return self.schedule(Event(fire_at, target, kind, callback, args))

    def after(self, delay, target, kind, callback, *args):
        return self.schedule(Event(self.now + delay, target, kind, callback, args))

    @staticmethod
    def cancel(event):
        if event is not None:
            event.cancelled = True

    def peek_time(self):
        return self._queue[0][0] if self._queue else None

    def run_until(self, t_end):
        """Dispatch every event with ``fire_at <= t_end``; return how many ran."""
        if t_end < self.now:
            raise SimulationError("run_until(%d) is before now=%d" % (t_end, self.now))
        queue = self._queue
        hook = self.on_dispatch
        count = 0
        while queue and queue[0][0] <= t_end:
            fire_at, _, event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self.now = fire_at
            if hook is not None:
                hook(event)
            if event.callback is not None:
                event.callback(*event.args)
            count += 1
        self.now = t_end
        self.dispatched += count
        return count


class SeededRng:
    """Reproducible random stream.

    Integer draws are built from ``getrandbits`` by rejection so the sequence
    depends only on the Mersenne Twister output, which CPython keeps stable
    across versions and platforms.
    """

    def __init__(self, seed, stream=""):
        self.seed = int(seed)
        self.stream = stream
        self._gen = random.Random("%d:%s" % (self.seed, stream))

    def uniform_int(self, lo, hi):
        if lo > hi:
            raise SimulationError("uniform_int: empty range [%d, %d]" % (lo, hi))
        span = hi - lo + 1
        if span == 1:
            return lo
        bits = (span - 1).bit_length()
        getrandbits = self._gen.getrandbits
        while True:
            r = getrandbits(bits)
            if r < span:
                return lo + r

    def random(self):
        return self._gen.random()

    def bernoulli(self, p):
        if p <= 0.0:
            return False
        if p >= 1.0:
            return True
        return self._gen.random() < p

    def expovariate(self, rate):
        return self._gen.expovariate(rate)


def uniform_int(rng, lo, hi):
    """Uniform integer in ``[lo, hi]`` inclusive, drawn from ``rng``."""
    return rng.uniform_int(lo, hi)
