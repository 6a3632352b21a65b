"""Built-in scenarios.

``ara`` models a three-level campus/rural deployment: a GNSS grandmaster
feeds a first-level boundary clock (Wilson Hall), which serves a
data-center BC over fiber and a farm BC over a 10.15 km 80 GHz radio hop. A
second fiber path from the data center to the farm is redundant and should
end up Passive. Each BC serves one ordinary-clock server.

The link constants are calibration values, tuned once against the reference
measurements and then frozen.
"""

from __future__ import annotations

import dataclasses

from .channel import FIBER_NS_PER_KM, FREE_SPACE_NS_PER_KM, LinkKind, LinkSpec, WeatherTrace, WirelessChannelParams
from .scenario import LinkDef, RunConfig, Scenario, default_node
from .timebase import NS_PER_S

GMC = "gmc"
WILSON_HALL = "wilson-hall"
DATA_CENTER = "data-center"
AGRONOMY_FARM = "agronomy-farm"
SERVERS = {WILSON_HALL: "wh-server", DATA_CENTER: "dc-server", AGRONOMY_FARM: "ag-server"}

WIRELESS_LENGTH_KM = 10.15
WIRELESS_BASE_DELAY_NS = 60_000.0
WIRED_BASE_DELAY_NS = 14_000.0
WH_DC_LENGTH_KM = 1.8
DC_AG_LENGTH_KM = 12.07  # 7.5 miles of buried fiber
FIBER_EQUIPMENT_NS = WIRED_BASE_DELAY_NS - WH_DC_LENGTH_KM * FIBER_NS_PER_KM
RADIO_EQUIPMENT_NS = WIRELESS_BASE_DELAY_NS - WIRELESS_LENGTH_KM * FREE_SPACE_NS_PER_KM

# calibration constants
GMC_LINK_JITTER_NS = 4.0
FIBER_JITTER_NS = 5.0
RADIO_JITTER_NS = 2_200.0
RADIO_ASYMMETRY_NS = 400.0
RADIO_ASYMMETRY_TAU_S = 60.0
WIRELESS_LOCK_THRESHOLD_NS = 20_000.0

RAIN_BIN_MIDPOINTS = (0.0, 0.025, 0.075, 0.125, 0.175, 0.225)
RAIN_SEGMENT_S = 600

RADIO = WirelessChannelParams()


def _short_fiber(length_km: float = 0.01, jitter: float = GMC_LINK_JITTER_NS) -> LinkSpec:
    return LinkSpec(LinkKind.FIBER, length_km, base_residence_ns=500.0, jitter_std_ns=jitter)


def _nodes():
    gmc = dataclasses.replace(default_node(GMC, "gmc"), clock_identity=1)
    wh = dataclasses.replace(default_node(WILSON_HALL, "bc"), clock_identity=2)
    dc = dataclasses.replace(default_node(DATA_CENTER, "bc"), clock_identity=3)
    ag = dataclasses.replace(
        default_node(AGRONOMY_FARM, "bc"), clock_identity=4, lock_threshold_ns=WIRELESS_LOCK_THRESHOLD_NS
    )
    nodes = [gmc, wh, dc, ag]
    for i, bc in enumerate((WILSON_HALL, DATA_CENTER, AGRONOMY_FARM)):
        oc = dataclasses.replace(default_node(SERVERS[bc], "oc"), clock_identity=5 + i)
        if bc == AGRONOMY_FARM:
            # its master wanders with the radio hop, so lock on the same scale
            oc = dataclasses.replace(oc, lock_threshold_ns=WIRELESS_LOCK_THRESHOLD_NS)
        nodes.append(oc)
    return nodes


def _links(wireless: bool = True):
    links = [
        LinkDef("gmc-wh", GMC, WILSON_HALL, _short_fiber()),
        LinkDef(
            "wh-dc",
            WILSON_HALL,
            DATA_CENTER,
            LinkSpec(LinkKind.FIBER, WH_DC_LENGTH_KM, FIBER_EQUIPMENT_NS, FIBER_JITTER_NS),
        ),
    ]
    if wireless:
        links.append(
            LinkDef(
                "wh-ag-radio",
                WILSON_HALL,
                AGRONOMY_FARM,
                LinkSpec(
                    LinkKind.WIRELESS,
                    WIRELESS_LENGTH_KM,
                    RADIO_EQUIPMENT_NS,
                    RADIO_JITTER_NS,
                    RADIO_ASYMMETRY_NS,
                    RADIO_ASYMMETRY_TAU_S,
                ),
                RADIO,
            )
        )
    links.append(
        LinkDef(
            "dc-ag",
            DATA_CENTER,
            AGRONOMY_FARM,
            LinkSpec(LinkKind.FIBER, DC_AG_LENGTH_KM, FIBER_EQUIPMENT_NS, FIBER_JITTER_NS),
        )
    )
    for bc, oc in SERVERS.items():
        links.append(LinkDef(f"{bc}-server", bc, oc, _short_fiber(0.005)))
    return links


def ara_preset(duration_ns: int = 2 * 3600 * NS_PER_S, seed: int = 1) -> Scenario:
    """Clear-weather three-level hierarchy with one radio hop."""
    return Scenario(
        name="ara",
        nodes=tuple(_nodes()),
        links=tuple(_links()),
        weather=WeatherTrace.constant(0.0),
        run=RunConfig(duration_ns=duration_ns, seed=seed),
    )


def rain_trace(duration_ns: int, segment_s: int = RAIN_SEGMENT_S, levels=RAIN_BIN_MIDPOINTS) -> WeatherTrace:
    """Cycle through ``levels`` (mm/h), one per segment, until ``duration_ns``."""
    step = segment_s * NS_PER_S
    n = max(1, -(-duration_ns // step))
    return WeatherTrace(tuple((i * step, levels[i % len(levels)]) for i in range(n)))


def ara_rain_preset(duration_ns: int = 2 * 3600 * NS_PER_S, seed: int = 1) -> Scenario:
    """The ``ara`` topology under light rain stepping through 0.05 mm/h bins."""
    base = ara_preset(duration_ns, seed)
    return dataclasses.replace(base, name="ara-rain", weather=rain_trace(duration_ns))


def ara_wired_preset(duration_ns: int = 2 * 3600 * NS_PER_S, seed: int = 1) -> Scenario:
    """The ``ara`` topology without the radio: the farm syncs over fiber."""
    return Scenario(
        name="ara-wired",
        nodes=tuple(_nodes()),
        links=tuple(_links(wireless=False)),
        weather=WeatherTrace.constant(0.0),
        run=RunConfig(duration_ns=duration_ns, seed=seed),
    )


PRESETS = {
    "ara": ara_preset,
    "ara-rain": ara_rain_preset,
    "ara-wired": ara_wired_preset,
}


class UnknownPreset(KeyError):
    pass


def get_preset(name: str, duration_ns: int | None = None, seed: int | None = None) -> Scenario:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UnknownPreset(name) from None
    kwargs = {}
    if duration_ns is not None:
        kwargs["duration_ns"] = duration_ns
    if seed is not None:
        kwargs["seed"] = seed
    return factory(**kwargs)
