"""Injectable time sources so transcripts can be deterministic under test."""

import time


class SystemClock:
    """Wall-clock time in seconds."""

    def now(self) -> float:
        return time.time()


class FakeClock:
    """Deterministic clock: advances by a fixed step on every read."""

    def __init__(self, start: float = 0.0, step: float = 1.0):
        self._t = start
        self._step = step

    def now(self) -> float:
        t = self._t
        self._t += self._step
        return t

    def advance(self, seconds: float) -> None:
        self._t += seconds
