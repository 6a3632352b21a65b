import math

import pytest

from ptpsim.channel import (
    Direction,
    LinkChannel,
    LinkKind,
    LinkSpec,
    OUProcess,
    UnsupportedLinkKind,
    WeatherError,
    WeatherTrace,
    WirelessChannelParams,
    channel_sample,
    deterministic_delay,
    one_way_delay,
    rain_rate_at,
    snr_penalty,
    specific_attenuation,
)
from ptpsim.presets import RADIO_EQUIPMENT_NS, FIBER_EQUIPMENT_NS
from ptpsim.rng import RandomStream

S = 1_000_000_000
P = WirelessChannelParams()
RADIO = LinkSpec(LinkKind.WIRELESS, 10.15, RADIO_EQUIPMENT_NS)
FIBER = LinkSpec(LinkKind.FIBER, 1.8, FIBER_EQUIPMENT_NS)


def test_rain_rate_single_segment():
    w = WeatherTrace.constant(0.0)
    assert rain_rate_at(w, 0) == 0.0 and rain_rate_at(w, 10**15) == 0.0


def test_rain_rate_left_closed():
    w = WeatherTrace(((0, 0.05), (3600 * S, 0.2)))
    assert rain_rate_at(w, 3599 * S) == 0.05
    assert rain_rate_at(w, 3600 * S) == 0.2


def test_weather_validation():
    with pytest.raises(WeatherError):
        WeatherTrace(())
    with pytest.raises(WeatherError):
        WeatherTrace(((0, 0.1), (0, 0.2)))
    with pytest.raises(WeatherError):
        WeatherTrace(((0, -0.1),))
    with pytest.raises(WeatherError):
        rain_rate_at(WeatherTrace(((10, 0.0),)), 5)


def test_weather_csv_round_trip():
    w = WeatherTrace(((0, 0.0), (1_500_000_000, 0.125), (600 * S, 0.2)))
    assert WeatherTrace.from_csv(w.to_csv()) == w
    with pytest.raises(WeatherError):
        WeatherTrace.from_csv("t,r\n0,0\n")
    with pytest.raises(WeatherError):
        WeatherTrace.from_csv("start_s,rain_mmh\n10,0\n5,0\n")


def test_specific_attenuation():
    assert specific_attenuation(0, P) == 0
    assert specific_attenuation(1, P) == P.atten_k
    assert specific_attenuation(4, WirelessChannelParams(atten_k=1.0, atten_alpha=0.7)) == pytest.approx(2.639, abs=1e-3)


def test_channel_sample_values():
    clear = channel_sample(RADIO, P, WeatherTrace.constant(0.0), 0)
    assert clear.rsl_dbm == P.rsl_clear_dbm
    wet = channel_sample(RADIO, WirelessChannelParams(rsl_clear_dbm=-40.0), WeatherTrace.constant(4.0), 0)
    assert wet.rsl_dbm == pytest.approx(-66.79, abs=0.01)
    assert wet.snr_db == wet.rsl_dbm - P.noise_floor_dbm


def test_channel_sample_rejects_fiber():
    with pytest.raises(UnsupportedLinkKind):
        channel_sample(FIBER, P, WeatherTrace.constant(0.0), 0)


def test_calibrated_base_delays():
    assert one_way_delay(FIBER, Direction.FORWARD, None) == 14_000
    assert one_way_delay(RADIO, Direction.FORWARD, None, P, P.snr_clear_db) == 60_000
    assert round(RADIO.propagation_ns) == 33_860 and round(RADIO_EQUIPMENT_NS) == 26_140


def test_penalty_threshold():
    assert snr_penalty(P, P.snr_ref_db) == 0
    assert snr_penalty(P, P.snr_ref_db + 5) == 0
    assert snr_penalty(P, P.snr_ref_db - 0.25) == pytest.approx(0.25 * P.penalty_ns_per_db)
    assert snr_penalty(P, P.snr_ref_db - 50) == P.penalty_cap_ns


def test_lower_snr_never_faster():
    prev = None
    for snr10 in range(400, 200, -1):
        d = deterministic_delay(RADIO, P, snr10 / 10)
        if prev is not None:
            assert d >= prev
        prev = d


def test_delay_floor():
    tiny = LinkSpec(LinkKind.FIBER, 1e-9)
    assert one_way_delay(tiny, Direction.FORWARD, None) == 1
    noisy = LinkSpec(LinkKind.FIBER, 1e-6, jitter_std_ns=1e6)
    rng = RandomStream(1, "x")
    assert min(one_way_delay(noisy, Direction.FORWARD, rng) for _ in range(200)) == 1


def test_asymmetry_antisymmetric():
    spec = LinkSpec(LinkKind.WIRELESS, 10.15, 0, 0, 4_200, 60)
    ch = LinkChannel("r", spec, 3, P)
    for t in range(0, 600 * S, 7 * S):
        assert ch.asymmetry_at(Direction.FORWARD, t) + ch.asymmetry_at(Direction.REVERSE, t) == 0


def test_ou_stationary_std_and_ordering():
    ou = OUProcess(2.0, 1.0, RandomStream(4, "ou"))
    vals = [ou.at(t * S) for t in range(20_000)]
    mean = sum(vals) / len(vals)
    std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
    assert abs(std - 2.0) < 0.15
    assert ou.at(19_999 * S) == vals[-1]
    with pytest.raises(ValueError):
        ou.at(0)


def test_rsl_monotone_in_rain():
    w = [channel_sample(RADIO, P, WeatherTrace.constant(r / 100), 0).rsl_dbm for r in range(0, 100)]
    assert all(b <= a for a, b in zip(w, w[1:]))


def test_link_channel_deterministic_and_independent():
    spec = LinkSpec(LinkKind.WIRELESS, 10.15, RADIO_EQUIPMENT_NS, 2_000, 400, 60)

    def seq(seed, link_id):
        ch = LinkChannel(link_id, spec, seed, P)
        return [ch.delay(Direction(i % 2), i * 10_000_000) for i in range(200)]

    assert seq(1, "a") == seq(1, "a")
    assert seq(1, "a") != seq(2, "a")
    assert seq(1, "a") != seq(1, "b")


def test_link_spec_validation():
    with pytest.raises(ValueError):
        LinkSpec(LinkKind.FIBER, 0)
    with pytest.raises(ValueError):
        LinkSpec(LinkKind.FIBER, 1, jitter_std_ns=-1)
    with pytest.raises(ValueError):
        LinkChannel("r", RADIO, 1, None)
