"""Deterministic discrete-event core: simulated clock, event queue, seeded RNG.

All simulated time is kept in integer picoseconds. Events are dispatched in
(time, sequence) order, where the sequence number is assigned at scheduling
time; two runs that schedule the same events in the same order are therefore
bit-identical, independent of hash seeds or iteration order of containers.

The random streams are counter-based SplitMix64 generators. Each traffic
source derives its own stream from (run seed, source id), so adding or
removing sources never perturbs the draws seen by the others.
"""

from __future__ import annotations

import math
from heapq import heappop, heappush

# Integer picoseconds per common unit.
PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_MS = 1_000_000_000

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SimulationError(RuntimeError):
    """Fatal internal inconsistency (scheduling into the past, credit underflow...)."""


def ns_to_ps(ns: float) -> int:
    """Convert nanoseconds to integer picoseconds, rounding half up."""
    return int(math.floor(ns * PS_PER_NS + 0.5))


def us_to_ps(us: float) -> int:
    return int(math.floor(us * PS_PER_US + 0.5))


def ps_to_ns(ps: int) -> float:
    return ps / PS_PER_NS


class Engine:
    """Single-threaded event scheduler.

    Entries in the heap are [time_ps, sequence, handler, argument]. The
    sequence counter makes every key unique, so the heap never compares
    handlers and ties dispatch in insertion order.
    """

    __slots__ = ("now", "_heap", "_seq", "dispatched")

    def __init__(self) -> None:
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self.dispatched = 0

    def schedule(self, time_ps: int, handler, arg=None) -> None:
        """Enqueue handler(arg) to run at time_ps.

        Scheduling into the past is a programming error and aborts the run.
        """
        if time_ps < self.now:
            raise SimulationError(
                f"event scheduled at {time_ps} ps, before current time {self.now} ps"
            )
        self._seq += 1
        heappush(self._heap, [time_ps, self._seq, handler, arg])

    def schedule_now(self, handler, arg=None) -> None:
        """Enqueue handler(arg) at the current instant, after the running cascade."""
        self._seq += 1
        heappush(self._heap, [self.now, self._seq, handler, arg])

    def run_until(self, horizon_ps: int) -> int:
        """Dispatch every event with time <= horizon, then set the clock to horizon."""
        if horizon_ps < self.now:
            raise SimulationError(
                f"horizon {horizon_ps} ps is before current time {self.now} ps"
            )
        heap = self._heap
        count = 0
        while heap and heap[0][0] <= horizon_ps:
            entry = heappop(heap)
            self.now = entry[0]
            entry[2](entry[3])
            count += 1
        self.dispatched += count
        self.now = horizon_ps
        return self.now

    def pending(self) -> int:
        return len(self._heap)


def mix64(x: int) -> int:
    """SplitMix64 output function; the documented bit-mixing step."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def derive_seed(seed: int, stream: int) -> int:
    """Derive an independent 64-bit stream seed from (run seed, stream index).

    Rule (fixed for reproducibility across implementations):
        mix64(seed XOR ((stream + 1) * 0x9E3779B97F4A7C15 mod 2^64))
    """
    return mix64((seed & _MASK64) ^ (((stream + 1) * _GOLDEN) & _MASK64))


class SplitMix64:
    """Counter-based 64-bit generator (SplitMix64).

    State advances by the golden-ratio constant each draw; the output is
    mix64(state). Uniform [0,1) doubles take the top 53 bits.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via the multiply-shift reduction."""
        return (self.next_u64() * n) >> 64

    def expovariate_ps(self, mean_ps: float) -> int:
        """Exponential inter-arrival with the given mean, in integer picoseconds."""
        u = self.random()
        return int(-mean_ps * math.log(1.0 - u) + 0.5)
