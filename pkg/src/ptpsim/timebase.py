"""Integer-nanosecond time axis and the imperfect local oscillator.

Simulation ("true") time is a plain ``int`` count of nanoseconds since the
simulation epoch. A :class:`LocalClock` maps true time to what a node's
hardware clock would read: a phase/frequency model with a random-walk
frequency and white phase noise, plus the corrections a servo applies.

Noise is only evaluated when the clock is touched (at event instants), which
keeps the model compatible with a discrete-event kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rng import RandomStream

SimTime = int

NS_PER_S = 1_000_000_000
MAX_SIM_TIME = 2**62
MAX_FREQ_ERROR_PPB = 1_000_000


class ClockOrderingError(ValueError):
    """A clock was queried at a true time earlier than its last update."""


class FreqRangeError(ValueError):
    """A frequency adjustment would push the total error past the sanity bound."""


def seconds(s: float) -> SimTime:
    """Convert seconds to integer nanoseconds (rounded to nearest)."""
    return int(round(s * NS_PER_S))


def to_seconds(ns: SimTime) -> float:
    return ns / NS_PER_S


@dataclass(frozen=True)
class OscillatorParams:
    initial_phase_offset: float = 0.0  # ns
    freq_offset: float = 0.0  # ppb
    freq_random_walk_density: float = 0.0  # ppb / sqrt(s)
    white_phase_noise_std: float = 0.0  # ns

    def __post_init__(self) -> None:
        if self.freq_random_walk_density < 0 or self.white_phase_noise_std < 0:
            raise ValueError("oscillator noise magnitudes must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return (
            self.initial_phase_offset == 0
            and self.freq_offset == 0
            and self.freq_random_walk_density == 0
            and self.white_phase_noise_std == 0
        )


IDEAL = OscillatorParams()


class LocalClock:
    """A drifting oscillator with servo-applied phase and frequency corrections.

    ``read`` is a pure query (apart from consuming white-noise draws);
    ``advance`` commits elapsed true time and takes one random-walk step of the
    frequency. The engine calls ``advance`` before every timestamp so the
    random walk is sampled at event instants.
    """

    __slots__ = (
        "params",
        "freq_offset",
        "phase_correction",
        "freq_adjust",
        "last_update",
        "accumulated_local",
    )

    def __init__(self, params: OscillatorParams = IDEAL, start: SimTime = 0) -> None:
        self.params = params
        self.freq_offset = float(params.freq_offset)
        self.phase_correction = 0.0
        self.freq_adjust = 0.0
        self.last_update = start
        self.accumulated_local = float(start) + params.initial_phase_offset

    def __repr__(self) -> str:
        return (
            f"LocalClock(freq_offset={self.freq_offset:.3f}ppb, "
            f"freq_adjust={self.freq_adjust:.3f}ppb, "
            f"phase_correction={self.phase_correction:.1f}ns, last_update={self.last_update})"
        )

    @property
    def total_freq_error(self) -> float:
        return self.freq_offset + self.freq_adjust

    def _elapsed(self, t_true: SimTime) -> int:
        dt = t_true - self.last_update
        if dt < 0:
            raise ClockOrderingError(
                f"clock read at t={t_true} ns before last update {self.last_update} ns"
            )
        return dt

    def ideal_read(self, t_true: SimTime) -> float:
        """Local time without white phase noise, as a float."""
        dt = self._elapsed(t_true)
        return (
            self.accumulated_local
            + (1.0 + self.total_freq_error * 1e-9) * dt
            + self.phase_correction
        )

    def read(self, t_true: SimTime, rng: RandomStream | None = None) -> float:
        v = self.ideal_read(t_true)
        std = self.params.white_phase_noise_std
        if std > 0.0 and rng is not None:
            v += std * rng.normal()
        return v

    def advance(self, t_true: SimTime, rng: RandomStream | None = None) -> LocalClock:
        dt = self._elapsed(t_true)
        if dt == 0:
            return self
        self.accumulated_local += (1.0 + self.total_freq_error * 1e-9) * dt
        density = self.params.freq_random_walk_density
        if density > 0.0 and rng is not None:
            self.freq_offset += density * math.sqrt(dt / NS_PER_S) * rng.normal()
        self.last_update = t_true
        return self

    def timestamp(self, t_true: SimTime, rng: RandomStream | None = None) -> float:
        """``advance`` then ``read`` in one call (the engine's hot path)."""
        dt = t_true - self.last_update
        if dt < 0:
            raise ClockOrderingError(
                f"clock read at t={t_true} ns before last update {self.last_update} ns"
            )
        params = self.params
        if dt:
            self.accumulated_local += (1.0 + (self.freq_offset + self.freq_adjust) * 1e-9) * dt
            density = params.freq_random_walk_density
            if density > 0.0 and rng is not None:
                self.freq_offset += density * math.sqrt(dt / NS_PER_S) * rng.normal()
            self.last_update = t_true
        v = self.accumulated_local + self.phase_correction
        std = params.white_phase_noise_std
        if std > 0.0 and rng is not None:
            v += std * rng.normal()
        return v

    def step(self, delta: float) -> LocalClock:
        self.phase_correction += delta
        return self

    def set_freq_adjust(self, ppb: float) -> LocalClock:
        if abs(self.freq_offset + ppb) >= MAX_FREQ_ERROR_PPB:
            raise FreqRangeError(
                f"total frequency error {self.freq_offset + ppb:.1f} ppb exceeds "
                f"+/-{MAX_FREQ_ERROR_PPB} ppb"
            )
        self.freq_adjust = float(ppb)
        return self

    def copy(self) -> LocalClock:
        c = LocalClock.__new__(LocalClock)
        for name in LocalClock.__slots__:
            setattr(c, name, getattr(self, name))
        return c


def read_local(clock: LocalClock, t_true: SimTime, rng: RandomStream | None = None) -> float:
    return clock.read(t_true, rng)


def advance_oscillator(
    clock: LocalClock, t_true: SimTime, rng: RandomStream | None = None
) -> LocalClock:
    """Return a copy of ``clock`` advanced to ``t_true``."""
    return clock.copy().advance(t_true, rng)


def apply_phase_step(clock: LocalClock, delta: float) -> LocalClock:
    return clock.copy().step(delta)


def apply_freq_adjust(clock: LocalClock, ppb: float) -> LocalClock:
    return clock.copy().set_freq_adjust(ppb)
