"""Small scenario constructors shared by engine-level tests."""

from __future__ import annotations

import dataclasses

from ptpsim.channel import LinkKind, LinkSpec, WeatherTrace
from ptpsim.scenario import LinkDef, RunConfig, Scenario, default_node

S = 1_000_000_000


def quiet(node, phase=0.0, freq=0.0):
    return dataclasses.replace(node, osc_phase_ns=phase, osc_freq_ppb=freq, osc_rw_ppb_per_rts=0.0, osc_white_ns=0.0)


def fiber(lid, a, b, length_km=1.0, residence=0.0, jitter=0.0):
    return LinkDef(lid, a, b, LinkSpec(LinkKind.FIBER, length_km, residence, jitter))


def chain(
    slave_phase=0.0,
    slave_freq=0.0,
    tc_residence=None,
    tc_role="tc_e2e",
    duration_s=60,
    granularity=1,
    noiseless=True,
    slave_two_step=True,
    delay_mechanism="e2e",
    seed=1,
):
    """GMC -> [TC ->] BC -> OC over 1 km fibers."""
    gmc = dataclasses.replace(default_node("gmc", "gmc"), clock_identity=1)
    bc = dataclasses.replace(default_node("bc", "bc"), clock_identity=2, two_step=slave_two_step,
                             delay_mechanism=delay_mechanism)
    oc = dataclasses.replace(default_node("oc", "oc"), clock_identity=3, delay_mechanism=delay_mechanism)
    if noiseless:
        bc = quiet(bc, slave_phase, slave_freq)
        oc = quiet(oc)
    else:
        bc = dataclasses.replace(bc, osc_phase_ns=slave_phase, osc_freq_ppb=slave_freq)
    nodes = [gmc, bc, oc]
    links = []
    if tc_residence is None:
        links.append(fiber("gmc-bc", "gmc", "bc"))
    else:
        tc = quiet(dataclasses.replace(default_node("tc", tc_role), clock_identity=9, residence_ns=float(tc_residence)))
        nodes.append(tc)
        links += [fiber("gmc-tc", "gmc", "tc", 0.5), fiber("tc-bc", "tc", "bc", 0.5)]
    links.append(fiber("bc-oc", "bc", "oc", 0.1))
    return Scenario(
        name="chain",
        nodes=tuple(nodes),
        links=tuple(links),
        weather=WeatherTrace.constant(0.0),
        run=RunConfig(duration_ns=duration_s * S, seed=seed, timestamp_granularity_ns=granularity),
    )
