"""Deterministic discrete-event kernel.

Events are ordered by ``(at, seq)``; ``seq`` is a monotonically increasing
insertion counter, so simultaneous events run in the order they were
scheduled.
"""

from __future__ import annotations

import hashlib
import heapq
import sys
from array import array
from dataclasses import dataclass
from typing import Any, Callable

from ..timebase import MAX_SIM_TIME


class SchedulingError(RuntimeError):
    """An event was scheduled in the past (or beyond the representable range)."""


@dataclass(frozen=True)
class Event:
    at: int
    seq: int
    target: str
    payload: Any


class Kernel:
    __slots__ = ("now", "_queue", "_seq", "processed", "_trace", "_times", "_labels")

    TRACE_CHUNK = 1 << 16

    def __init__(self, trace: bool = False) -> None:
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self.processed = 0
        self._trace = hashlib.blake2b(digest_size=16) if trace else None
        # (at, seq) pairs and labels of processed events, hashed a chunk at a time
        self._times = array("q")
        self._labels: list[str] = []

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(self, at: int, fn: Callable[..., None], *args: Any, label: str = "") -> int:
        """Run ``fn(*args)`` at simulation time ``at``; returns the event's seq."""
        if at < self.now:
            raise SchedulingError(f"cannot schedule at {at} ns, current time is {self.now} ns")
        if at >= MAX_SIM_TIME:
            raise SchedulingError(f"event time {at} ns beyond the supported range")
        seq = self._seq
        self._seq = seq + 1
        heapq.heappush(self._queue, (at, seq, fn, args, label))
        return seq

    def peek(self) -> Event | None:
        if not self._queue:
            return None
        at, seq, _fn, args, label = self._queue[0]
        return Event(at, seq, label, args)

    def run_until(self, t_end: int) -> int:
        """Process every event with ``at <= t_end``; returns how many ran."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before current time {self.now}")
        queue = self._queue
        pop = heapq.heappop
        tracing = self._trace is not None
        times, labels = self._times, self._labels
        chunk = self.TRACE_CHUNK
        count = 0
        while queue and queue[0][0] <= t_end:
            at, seq, fn, args, label = pop(queue)
            self.now = at
            if tracing:
                times.append(at)
                times.append(seq)
                labels.append(label)
                if len(labels) >= chunk:
                    self._flush_trace()
            fn(*args)
            count += 1
        self.now = t_end
        self.processed += count
        return count

    def _flush_trace(self) -> None:
        if self._labels:
            times = self._times
            if sys.byteorder == "big":  # hash little-endian words on every platform
                times = array("q", times)
                times.byteswap()
            self._trace.update(times.tobytes())
            self._trace.update("\0".join(self._labels).encode() + b"\n")
            del self._times[:]
            self._labels.clear()

    @property
    def trace_hash(self) -> str | None:
        if self._trace is None:
            return None
        self._flush_trace()
        return self._trace.hexdigest()
