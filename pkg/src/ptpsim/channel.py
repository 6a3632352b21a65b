"""Physical link models.

Fiber links have a fixed propagation + equipment delay with small Gaussian
jitter. Long-range wireless links additionally carry:

* a received-signal level that drops with rain (power-law specific
  attenuation) and with slow log-normal fading,
* a modem delay penalty that grows as SNR falls below a reference level
  (a stand-in for adaptive coding/modulation),
* one-sided packet delay variation whose mean scales with that penalty,
* a slowly varying path asymmetry, equal and opposite in the two directions.
"""

from __future__ import annotations

import bisect
import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .rng import RandomStream
from .timebase import NS_PER_S

FIBER_NS_PER_KM = 4_900.0
FREE_SPACE_NS_PER_KM = 3_336.0
MIN_DELAY_NS = 1


class LinkKind(str, enum.Enum):
    FIBER = "fiber"
    WIRELESS = "wireless"


class Direction(enum.IntEnum):
    FORWARD = 0  # endpoint a -> endpoint b
    REVERSE = 1

    @property
    def sign(self) -> int:
        return 1 if self is Direction.FORWARD else -1


class UnsupportedLinkKind(ValueError):
    pass


class WeatherError(ValueError):
    pass


@dataclass(frozen=True)
class LinkSpec:
    kind: LinkKind
    length_km: float
    base_residence_ns: float = 0.0
    jitter_std_ns: float = 0.0
    asymmetry_std_ns: float = 0.0
    asymmetry_tau_s: float = 60.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.length_km <= 0:
            raise ValueError(f"link length must be > 0 km, got {self.length_km}")
        for name in ("base_residence_ns", "jitter_std_ns", "asymmetry_std_ns"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.asymmetry_tau_s <= 0:
            raise ValueError("asymmetry_tau_s must be > 0")

    @property
    def propagation_ns(self) -> float:
        per_km = FIBER_NS_PER_KM if self.kind is LinkKind.FIBER else FREE_SPACE_NS_PER_KM
        return self.length_km * per_km


@dataclass(frozen=True)
class WirelessChannelParams:
    carrier_ghz: float = 80.0
    rsl_clear_dbm: float = -40.0
    noise_floor_dbm: float = -75.0
    atten_k: float = 1.0
    atten_alpha: float = 0.7
    snr_ref_db: float = 33.0
    penalty_ns_per_db: float = 40_000.0
    penalty_cap_ns: float = 16_000.0
    fading_std_db: float = 0.5
    fading_tau_s: float = 300.0
    pdv_per_penalty: float = 0.5

    def __post_init__(self) -> None:
        if self.carrier_ghz <= 0:
            raise ValueError("carrier_ghz must be > 0")
        if self.atten_k <= 0 or self.atten_alpha <= 0:
            raise ValueError("attenuation coefficients must be > 0")
        for name in ("penalty_ns_per_db", "penalty_cap_ns", "fading_std_db", "pdv_per_penalty"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.fading_tau_s <= 0:
            raise ValueError("fading_tau_s must be > 0")

    @property
    def snr_clear_db(self) -> float:
        return self.rsl_clear_dbm - self.noise_floor_dbm


@dataclass(frozen=True)
class WeatherTrace:
    """Piecewise-constant rain rate; each segment holds until the next start."""

    segments: tuple[tuple[int, float], ...]
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        segs = tuple((int(s), float(r)) for s, r in self.segments)
        if not segs:
            raise WeatherError("weather trace needs at least one segment")
        for (a, _), (b, _) in zip(segs, segs[1:]):
            if b <= a:
                raise WeatherError(f"segment starts must strictly increase ({a} then {b})")
        for start, rain in segs:
            if rain < 0 or math.isnan(rain):
                raise WeatherError(f"negative rain rate {rain} at {start} ns")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_starts", tuple(s for s, _ in segs))

    @classmethod
    def constant(cls, rain_mmh: float = 0.0) -> WeatherTrace:
        return cls(((0, rain_mmh),))

    @property
    def start(self) -> int:
        return self._starts[0]

    @property
    def last_start(self) -> int:
        return self._starts[-1]

    def rain_rate_at(self, t: int) -> float:
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            raise WeatherError(f"t={t} ns precedes weather trace start {self._starts[0]} ns")
        return self.segments[i][1]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("start_s,rain_mmh\n")
        for start, rain in self.segments:
            out.write(f"{_fmt_seconds(start)},{rain!r}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str | Iterable[str]) -> WeatherTrace:
        lines = text.splitlines() if isinstance(text, str) else list(text)
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            raise WeatherError("weather CSV is empty") from None
        if [h.strip() for h in header] != ["start_s", "rain_mmh"]:
            raise WeatherError(f"weather CSV header must be 'start_s,rain_mmh', got {header!r}")
        segs = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise WeatherError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                segs.append((round(float(row[0]) * NS_PER_S), float(row[1])))
            except ValueError as exc:
                raise WeatherError(f"line {lineno}: {exc}") from None
        return cls(tuple(segs))

    @classmethod
    def load(cls, path: str | Path) -> WeatherTrace:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _fmt_seconds(ns: int) -> str:
    s, rem = divmod(ns, NS_PER_S)
    return str(s) if rem == 0 else repr(ns / NS_PER_S)


def rain_rate_at(w: WeatherTrace, t: int) -> float:
    return w.rain_rate_at(t)


def specific_attenuation(rain_mmh: float, params: WirelessChannelParams) -> float:
    """Rain attenuation in dB/km: ``k * R**alpha``."""
    if rain_mmh < 0:
        raise ValueError(f"negative rain rate {rain_mmh}")
    if rain_mmh == 0:
        return 0.0
    return params.atten_k * rain_mmh**params.atten_alpha


@dataclass(frozen=True)
class ChannelSample:
    at: int
    rain_mmh: float
    rsl_dbm: float
    snr_db: float


def channel_sample(
    link: LinkSpec,
    params: WirelessChannelParams,
    weather: WeatherTrace,
    t: int,
    fading_db: float = 0.0,
) -> ChannelSample:
    if link.kind is not LinkKind.WIRELESS:
        raise UnsupportedLinkKind(f"channel samples exist only for wireless links, not {link.kind.value}")
    rain = weather.rain_rate_at(t)
    rsl = params.rsl_clear_dbm - specific_attenuation(rain, params) * link.length_km + fading_db
    return ChannelSample(t, rain, rsl, rsl - params.noise_floor_dbm)


def snr_penalty(params: WirelessChannelParams, snr_db: float) -> float:
    return min(params.penalty_cap_ns, params.penalty_ns_per_db * max(0.0, params.snr_ref_db - snr_db))


def deterministic_delay(
    link: LinkSpec, params: WirelessChannelParams | None = None, snr_db: float | None = None
) -> float:
    """Propagation + equipment residence (+ SNR penalty for wireless), in ns."""
    d = link.propagation_ns + link.base_residence_ns
    if link.kind is LinkKind.WIRELESS and params is not None and snr_db is not None:
        d += snr_penalty(params, snr_db)
    return d


def one_way_delay(
    link: LinkSpec,
    direction: Direction,
    rng: RandomStream | None,
    params: WirelessChannelParams | None = None,
    snr_db: float | None = None,
    asymmetry_ns: float = 0.0,
) -> int:
    """One sampled one-way delay in whole ns, floored at 1 ns.

    ``asymmetry_ns`` is the forward-direction value of the shared asymmetry
    process; the reverse direction receives its negation.
    """
    d = deterministic_delay(link, params, snr_db)
    if rng is not None and link.jitter_std_ns > 0:
        d += link.jitter_std_ns * rng.normal()
    if link.kind is LinkKind.WIRELESS:
        d += direction.sign * asymmetry_ns
        if params is not None and snr_db is not None and rng is not None:
            pdv_mean = params.pdv_per_penalty * snr_penalty(params, snr_db)
            if pdv_mean > 0:
                d += rng.exponential(pdv_mean)
    return max(MIN_DELAY_NS, int(round(d)))


class OUProcess:
    """Stationary Ornstein-Uhlenbeck process sampled exactly at query times."""

    __slots__ = ("std", "tau_ns", "rng", "value", "last_t")

    def __init__(self, std: float, tau_s: float, rng: RandomStream) -> None:
        self.std = std
        self.tau_ns = tau_s * NS_PER_S
        self.rng = rng
        self.value: float | None = None
        self.last_t = 0

    def at(self, t: int) -> float:
        if self.std == 0:
            return 0.0
        if self.value is None:
            self.value = self.std * self.rng.normal()
            self.last_t = t
            return self.value
        dt = t - self.last_t
        if dt < 0:
            raise ValueError(f"OU process queried backwards in time ({t} < {self.last_t})")
        if dt > 0:
            decay = math.exp(-dt / self.tau_ns)
            self.value = self.value * decay + self.std * math.sqrt(1.0 - decay * decay) * self.rng.normal()
            self.last_t = t
        return self.value


class LinkChannel:
    """Stateful per-link channel: owns the fading and asymmetry processes and
    one jitter stream per direction."""

    def __init__(
        self,
        link_id: str,
        spec: LinkSpec,
        seed: int,
        params: WirelessChannelParams | None = None,
        weather: WeatherTrace | None = None,
    ) -> None:
        if spec.kind is LinkKind.WIRELESS and params is None:
            raise ValueError(f"wireless link {link_id!r} needs channel parameters")
        self.link_id = link_id
        self.spec = spec
        self.params = params if spec.kind is LinkKind.WIRELESS else None
        self.weather = weather or WeatherTrace.constant(0.0)
        self.streams = (
            RandomStream(seed, "link", link_id, int(Direction.FORWARD)),
            RandomStream(seed, "link", link_id, int(Direction.REVERSE)),
        )
        self.asymmetry = OUProcess(spec.asymmetry_std_ns, spec.asymmetry_tau_s, RandomStream(seed, "asym", link_id))
        fading_std = self.params.fading_std_db if self.params else 0.0
        fading_tau = self.params.fading_tau_s if self.params else 1.0
        self.fading = OUProcess(fading_std, fading_tau, RandomStream(seed, "fading", link_id))
        self._fiber_base = spec.propagation_ns + spec.base_residence_ns
        self._wireless = spec.kind is LinkKind.WIRELESS

    @property
    def is_wireless(self) -> bool:
        return self.spec.kind is LinkKind.WIRELESS

    def sample(self, t: int) -> ChannelSample:
        return channel_sample(self.spec, self.params, self.weather, t, self.fading.at(t))

    def asymmetry_at(self, direction: Direction, t: int) -> float:
        return direction.sign * self.asymmetry.at(t)

    def delay(self, direction: Direction, t: int) -> int:
        rng = self.streams[direction]
        if not self._wireless:
            jitter = self.spec.jitter_std_ns
            d = round(self._fiber_base + jitter * rng.normal() if jitter > 0 else self._fiber_base)
            return d if d > MIN_DELAY_NS else MIN_DELAY_NS
        p = self.params
        rain = self.weather.rain_rate_at(t)
        rsl = p.rsl_clear_dbm - specific_attenuation(rain, p) * self.spec.length_km + self.fading.at(t)
        return one_way_delay(self.spec, direction, rng, p, rsl - p.noise_floor_dbm, self.asymmetry.at(t))
