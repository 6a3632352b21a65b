"""Property tests for the invariants each module promises."""

import dataclasses
import math

from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from builders import S, fiber
from oracles import mpd_oracle, offset_oracle, spearman_oracle
from ptpsim import analysis as A
from ptpsim.channel import (
    Direction,
    LinkChannel,
    LinkKind,
    LinkSpec,
    WeatherTrace,
    WirelessChannelParams,
    channel_sample,
    deterministic_delay,
    specific_attenuation,
)
from ptpsim.engine import Simulation
from ptpsim.proto import (
    AnnounceDataset,
    Comparison,
    MessageType,
    PortIdentity,
    PortState,
    PtpMessage,
    better_dataset,
    decode,
    encode,
)
from ptpsim.scenario import RunConfig, Scenario, default_node, parse_scenario, serialize_scenario
from ptpsim.syncmath import SyncExchange, mpd_from_exchange, offset_from_exchange, peer_delay
from ptpsim.timebase import LocalClock, OscillatorParams

ns = st.integers(min_value=0, max_value=10**15)
small = st.integers(min_value=-10**9, max_value=10**9)

# -- timebase -------------------------------------------------------------------


# clock reads are floats: exact for every time up to 2**53 ns (about 104 days)
@given(st.lists(st.integers(min_value=0, max_value=2**53), min_size=1, max_size=20))
def test_identity_clock_reads_true_time(ts):
    c = LocalClock()
    for t in sorted(ts):
        c.advance(t)
        assert c.read(t) == t


@given(
    st.floats(min_value=-1e5, max_value=1e5),
    st.floats(min_value=-1e5, max_value=1e5),
    st.lists(st.integers(min_value=0, max_value=10**12), min_size=2, max_size=10),
)
def test_noiseless_read_affine_and_monotone(freq, adj, ts):
    c = LocalClock(OscillatorParams(freq_offset=freq))
    c.set_freq_adjust(adj)
    slope = 1 + (freq + adj) * 1e-9
    ts = sorted(ts)
    reads = [c.read(t) for t in ts]
    for t, r in zip(ts, reads):
        assert math.isclose(r, slope * t, rel_tol=1e-12, abs_tol=1e-3)
    assert all(b >= a for a, b in zip(reads, reads[1:]))


# -- proto ----------------------------------------------------------------------

identity = st.binary(min_size=8, max_size=8)
port = st.builds(PortIdentity, identity, st.integers(0, 0xFFFF))
u8 = st.integers(0, 255)
dataset = st.builds(AnnounceDataset, u8, u8, u8, st.integers(0, 0xFFFF), u8, identity, st.integers(0, 0xFFFF))
timestamp = st.integers(min_value=0, max_value=(1 << 48) * 10**9 - 1)


@st.composite
def messages(draw):
    t = draw(st.sampled_from(list(MessageType)))
    m = PtpMessage(
        t,
        draw(port),
        draw(st.integers(0, 0xFFFF)),
        draw(u8),
        draw(st.integers(-(1 << 63), (1 << 63) - 1)),
        log_message_interval=draw(st.integers(-128, 127)),
        two_step=draw(st.booleans()),
    )
    if t in (MessageType.SYNC, MessageType.DELAY_REQ, MessageType.FOLLOW_UP, MessageType.PDELAY_REQ,
             MessageType.PDELAY_RESP_FOLLOW_UP, MessageType.ANNOUNCE):
        m.origin_timestamp = draw(timestamp)
    if t in (MessageType.DELAY_RESP, MessageType.PDELAY_RESP):
        m.receive_timestamp = draw(timestamp)
    if t in (MessageType.DELAY_RESP, MessageType.PDELAY_RESP, MessageType.PDELAY_RESP_FOLLOW_UP,
             MessageType.SIGNALING, MessageType.MANAGEMENT):
        m.requesting_port = draw(port)
    if t is MessageType.ANNOUNCE:
        m.announce = draw(dataset)
        m.utc_offset = draw(st.integers(-(1 << 15), (1 << 15) - 1))
        m.time_source = draw(u8)
    return m


@given(messages())
def test_codec_round_trip(m):
    assert decode(encode(m)) == m


@given(dataset, dataset, dataset)
def test_dataset_order_strict_total(a, b, c):
    assume(a.key() != b.key() and b.key() != c.key() and a.key() != c.key())
    ab, ba = better_dataset(a, b), better_dataset(b, a)
    assert ab != ba
    if ab is Comparison.A_BETTER and better_dataset(b, c) is Comparison.A_BETTER:
        assert better_dataset(a, c) is Comparison.A_BETTER


# -- syncmath -------------------------------------------------------------------


@given(ns, ns, ns, ns, st.integers(0, 10**9))
def test_offset_mpd_identities(t1, t2, t3, t4, corr):
    x = SyncExchange(t1, t2, t3, t4, corr)
    off, mpd = offset_from_exchange(x), mpd_from_exchange(x)
    assert off == offset_oracle(t1, t2, t3, t4, corr) and mpd == mpd_oracle(t1, t2, t3, t4, corr)
    fwd, rev = t2 - t1 - corr, t4 - t3
    if (fwd - rev) % 2 == 0:
        assert off + mpd == fwd and mpd - off == rev
    else:
        # each halving drops half a nanosecond toward zero
        assert abs(off + mpd - fwd) <= 1 and abs(mpd - off - rev) <= 1


def test_asymmetry_law_brute_force():
    for theta in range(-40, 41, 4):
        for f in range(0, 60, 3):
            for r in range(0, 60, 5):
                if (f - r) % 2:
                    continue
                t1 = 1_000
                t2 = t1 + f + theta
                t3 = t2 + 17
                t4 = t3 + r - theta
                x = SyncExchange(t1, t2, t3, t4)
                assert offset_from_exchange(x) == theta + (f - r) // 2
                assert mpd_from_exchange(x) == (f + r) // 2


@given(ns, st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6), small)
def test_peer_delay_invariant_under_responder_offset(t1, fwd, turn, rev, off):
    t2 = t1 + fwd
    t3 = t2 + turn
    t4 = t3 + rev
    assert peer_delay(t1, t2 + off, t3 + off, t4) == peer_delay(t1, t2, t3, t4)


# -- channel --------------------------------------------------------------------

P = WirelessChannelParams()
RADIO = LinkSpec(LinkKind.WIRELESS, 10.15, 26_139.6, 0, 4_200, 60)


@given(st.integers(0, 2**31), st.lists(st.integers(0, 10**13), min_size=1, max_size=30))
def test_asymmetry_antisymmetric(seed, ts):
    ch = LinkChannel("r", RADIO, seed, P)
    for t in sorted(ts):
        assert ch.asymmetry_at(Direction.FORWARD, t) + ch.asymmetry_at(Direction.REVERSE, t) == 0


@given(st.floats(0, 200), st.floats(0, 200))
def test_attenuation_and_rsl_monotone(r1, r2):
    lo, hi = sorted((r1, r2))
    assert specific_attenuation(lo, P) <= specific_attenuation(hi, P)
    rsl = lambda r: channel_sample(RADIO, P, WeatherTrace.constant(r), 0).rsl_dbm
    assert rsl(lo) >= rsl(hi)


@given(st.floats(-20, 60), st.floats(-20, 60))
def test_lower_snr_never_decreases_delay(s1, s2):
    lo, hi = sorted((s1, s2))
    assert deterministic_delay(RADIO, P, lo) >= deterministic_delay(RADIO, P, hi)


# -- analysis -------------------------------------------------------------------

values = st.lists(st.integers(-1000, 1000), min_size=3, max_size=40)


@given(values, values, st.sampled_from([lambda v: v**3, lambda v: math.exp(v / 300), lambda v: 7 * v - 2]))
def test_spearman_invariant_under_monotone_maps(x, y, f):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assume(len(set(x)) > 1 and len(set(y)) > 1)
    base = A.spearman(x, y)
    assert math.isclose(A.spearman([f(v) for v in x], y), base, abs_tol=1e-9)
    assert math.isclose(base, spearman_oracle(x, y), abs_tol=1e-9)


@given(values)
def test_spearman_self_is_one(x):
    assume(len(set(x)) >= 2)
    assert math.isclose(A.spearman(x, x), 1.0)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.floats(0.5, 1e4), st.floats(-100, 100))
def test_histogram_mass_conservation(xs, width, origin):
    h = A.histogram(xs, width, origin)
    assert sum(c for _, c in h) == len(xs)
    assert all(c > 0 for _, c in h)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_cdf_monotone_and_complete(xs):
    c = A.cdf(xs)
    assert c[-1][1] == 1.0
    assert all(b[0] > a[0] and b[1] > a[1] for a, b in zip(c, c[1:]))


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_summary_ordering(xs):
    s = A.summarize(xs)
    assert s.min <= s.p1 <= s.p50 <= s.p99 <= s.max and s.std >= 0


@given(
    st.lists(st.tuples(st.integers(1, 50), st.sampled_from([0.0, 0.03, 0.05, 0.1, 0.12, 0.2, 0.25])), min_size=1,
             max_size=8),
    st.lists(st.integers(0, 400), min_size=1, max_size=100),
)
def test_rain_bins_partition(segs, times):
    starts, t = [], 0
    rain = []
    for dur, r in segs:
        rain.append(A.MetricRecord(t, "l", "rain_mmh", r))
        t += dur
    samples = [A.MetricRecord(tt, "n", "mpd_ns", i) for i, tt in enumerate(sorted(times))]
    bins = A.bin_by_rain(samples, rain)
    labels = [v for _, _, vs in bins for v in vs]
    assert sorted(labels) == list(range(len(samples)))


# -- scenario -------------------------------------------------------------------


@st.composite
def scenarios(draw):
    n_bc = draw(st.integers(1, 4))
    nodes = [dataclasses.replace(default_node("gm", "gmc"), clock_identity=1)]
    for i in range(n_bc):
        nodes.append(dataclasses.replace(
            default_node(f"bc{i}", "bc"),
            priority1=draw(u8),
            osc_freq_ppb=draw(st.one_of(st.none(), st.floats(-5000, 5000))),
            servo_kp=draw(st.floats(0.1, 1.0)),
            two_step=draw(st.booleans()),
        ))
    links = [fiber("l0", "gm", "bc0", draw(st.floats(0.01, 50)), draw(st.floats(0, 1e4)), draw(st.floats(0, 50)))]
    for i in range(1, n_bc):
        links.append(fiber(f"l{i}", f"bc{draw(st.integers(0, i - 1))}", f"bc{i}", draw(st.floats(0.01, 50))))
    if draw(st.booleans()):
        links.append(dataclasses.replace(
            links[0], id="radio", spec=LinkSpec(LinkKind.WIRELESS, draw(st.floats(0.1, 20)), 100.0, 5.0, 10.0, 30.0),
            channel=WirelessChannelParams(fading_std_db=draw(st.floats(0, 3)))))
    segs = ((0, 0.0), (draw(st.integers(1, 10**6)) * 1000, draw(st.floats(0, 1))))
    return Scenario(
        name="prop",
        nodes=tuple(nodes),
        links=tuple(links),
        weather=WeatherTrace(segs),
        run=RunConfig(duration_ns=draw(st.integers(1, 10**4)) * S, seed=draw(st.integers(0, 2**31)),
                      domain_number=draw(st.integers(24, 43))),
    )


@given(scenarios())
def test_parse_serialize_identity(s):
    assert parse_scenario(serialize_scenario(s), name="prop") == s


# -- engine: BMCA tree on random meshes -------------------------------------------


@st.composite
def meshes(draw):
    n = draw(st.integers(2, 6))
    nodes = [dataclasses.replace(default_node("gm", "gmc"), clock_identity=1)]
    nodes += [dataclasses.replace(default_node(f"b{i}", "bc"), clock_identity=10 + i) for i in range(n)]
    names = ["gm"] + [f"b{i}" for i in range(n)]
    edges = set()
    for i in range(1, len(names)):
        edges.add((draw(st.integers(0, i - 1)), i))  # spanning tree keeps it connected
    extra = draw(st.lists(st.tuples(st.integers(0, n), st.integers(0, n)), max_size=4))
    for a, b in extra:
        if a != b:
            edges.add((min(a, b), max(a, b)))
    links = [fiber(f"e{a}-{b}", names[a], names[b], draw(st.floats(0.1, 5))) for a, b in sorted(edges)]
    return Scenario(name="mesh", nodes=tuple(nodes), links=tuple(links),
                    run=RunConfig(duration_ns=4 * S, seed=draw(st.integers(0, 1000))))


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(meshes())
def test_slave_edges_form_gmc_rooted_tree(s):
    res = Simulation(s, trace=False).run()
    parents = res.parents
    assert parents["gm"] is None
    for node, ports in res.final_states.items():
        slaves = [p for p, st_ in ports.items() if st_ in (PortState.SLAVE, PortState.UNCALIBRATED)]
        assert len(slaves) == (0 if node == "gm" else 1)
        seen, cur = set(), node
        while cur is not None:  # walks to the root without revisiting
            assert cur not in seen
            seen.add(cur)
            cur = parents[cur]
        assert "gm" in seen
    cycles = len(s.links) - (len(s.nodes) - 1)
    passive = sum(1 for ports in res.final_states.values() for st_ in ports.values() if st_ is PortState.PASSIVE)
    assert passive >= (1 if cycles > 0 else 0)
