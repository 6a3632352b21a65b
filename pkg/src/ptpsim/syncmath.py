"""End-to-end and peer delay arithmetic, and the PI servo that steers a slave.

All timestamps are integer nanoseconds. Halving rounds toward zero and the
sub-ns residue is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .timebase import NS_PER_S


class MissingTimestampError(ValueError):
    pass


def _half(x: int) -> int:
    # round toward zero, exact for arbitrarily large ints
    return x // 2 if x >= 0 else -((-x) // 2)


@dataclass
class SyncExchange:
    """The four timestamps of one Sync / DelayReq round.

    ``correction_sum`` is the transparent-clock residence accumulated on the
    Sync path; ``delay_correction`` the same for the DelayReq path (echoed back
    by the master in DelayResp). Both are in whole ns.
    """

    t1: int | None = None
    t2: int | None = None
    t3: int | None = None
    t4: int | None = None
    correction_sum: int = 0
    delay_correction: int = 0

    @property
    def complete(self) -> bool:
        return None not in (self.t1, self.t2, self.t3, self.t4)

    def _legs(self) -> tuple[int, int]:
        if not self.complete:
            missing = [n for n in ("t1", "t2", "t3", "t4") if getattr(self, n) is None]
            raise MissingTimestampError(f"incomplete exchange, missing {', '.join(missing)}")
        forward = self.t2 - self.t1 - self.correction_sum
        reverse = self.t4 - self.t3 - self.delay_correction
        return forward, reverse


@dataclass(frozen=True)
class SyncSample:
    offset: int
    mean_path_delay: int
    at: int

    @property
    def suspicious(self) -> bool:
        return self.mean_path_delay < 0


@dataclass(frozen=True)
class PeerDelaySample:
    link_delay: int
    at: int


def offset_from_exchange(x: SyncExchange) -> int:
    forward, reverse = x._legs()
    return _half(forward - reverse)


def mpd_from_exchange(x: SyncExchange) -> int:
    forward, reverse = x._legs()
    return _half(forward + reverse)


def sample_from_exchange(x: SyncExchange, at: int) -> SyncSample:
    forward, reverse = x._legs()
    return SyncSample(_half(forward - reverse), _half(forward + reverse), at)


def peer_delay(t1: int | None, t2: int | None, t3: int | None, t4: int | None) -> int:
    """Link delay from a Pdelay exchange.

    ``t1``/``t4`` are read on the initiator clock and ``t2``/``t3`` on the
    responder clock, so any constant responder offset cancels.
    """
    if None in (t1, t2, t3, t4):
        raise MissingTimestampError("peer delay exchange is missing a timestamp")
    return _half((t2 - t1) + (t4 - t3))


INTEGRAL_CLAMP = 10_000_000.0
MAX_ADJUST_PPB = 500_000.0
LOCK_SAMPLES = 8


@dataclass(frozen=True)
class ServoState:
    kp: float = 0.7
    ki: float = 0.3
    integral: float = 0.0
    locked: bool = False
    step_threshold: float = 100_000.0
    lock_threshold: float = 1_000.0
    sync_interval_ns: int = NS_PER_S // 16
    good_samples: int = 0
    freq_adjust: float = 0.0

    def __post_init__(self) -> None:
        if self.kp <= 0 or self.ki <= 0:
            raise ValueError("servo gains must be positive")
        if self.sync_interval_ns <= 0:
            raise ValueError("sync interval must be positive")


def _evolve(s: ServoState, **changes) -> ServoState:
    # dataclasses.replace without re-running validation (hot path)
    new = object.__new__(ServoState)
    new.__dict__.update(s.__dict__)
    new.__dict__.update(changes)
    return new


def servo_step(s: ServoState, sample: SyncSample) -> tuple[int | None, float, ServoState]:
    """Feed one offset sample; returns ``(phase_step, freq_adjust_ppb, new_state)``.

    Offsets beyond ``step_threshold`` are removed with a phase step and the
    loop restarts unlocked. Otherwise a PI law sets the absolute frequency
    adjustment: the offset is treated as ns accumulated per sync interval and
    converted to ppb.
    """
    offset = sample.offset
    if abs(offset) > s.step_threshold:
        new = _evolve(s, integral=0.0, locked=False, good_samples=0)
        return -offset, s.freq_adjust, new

    integral = min(INTEGRAL_CLAMP, max(-INTEGRAL_CLAMP, s.integral + offset))
    ns_per_interval = s.kp * offset + s.ki * integral
    ppb = -ns_per_interval * 1e9 / s.sync_interval_ns
    ppb = min(MAX_ADJUST_PPB, max(-MAX_ADJUST_PPB, ppb))

    good = s.good_samples + 1 if abs(offset) < s.lock_threshold else 0
    locked = s.locked or good >= LOCK_SAMPLES
    new = _evolve(s, integral=integral, locked=locked, good_samples=good, freq_adjust=ppb)
    return None, ppb, new
