import dataclasses

import pytest

from conftest import DATA
from ptpsim.channel import LinkKind, WeatherTrace
from ptpsim.presets import PRESETS, get_preset, rain_trace
from ptpsim.scenario import (
    ScenarioSyntaxError,
    ScenarioValidationError,
    format_duration,
    load_scenario,
    parse_duration,
    parse_scenario,
    serialize_scenario,
    validate,
)

MINIMAL = """
# one grandmaster, one ordinary clock
node.gm.role = gmc
node.srv.role = oc
link.l1.a = gm
link.l1.b = srv
link.l1.length_km = 0.5
"""


def test_minimal_defaults():
    s = parse_scenario(MINIMAL)
    assert [n.role for n in s.nodes] == ["gmc", "oc"]
    assert s.run.domain_number == 24
    assert (s.run.announce_pps, s.run.sync_pps, s.run.delay_resp_pps) == (8.0, 16.0, 16.0)
    assert s.links[0].spec.kind is LinkKind.FIBER
    assert s.node("gm").two_step is False and s.node("srv").clock_class == 255


def test_two_grandmasters():
    with pytest.raises(ScenarioValidationError) as e:
        parse_scenario(MINIMAL + "node.gm2.role = gmc\nlink.l2.a = gm2\nlink.l2.b = gm\nlink.l2.length_km = 1\n")
    assert any("multiple grandmasters" in v for v in e.value.violations)


def test_domain_out_of_range():
    with pytest.raises(ScenarioValidationError) as e:
        parse_scenario(MINIMAL + "run.domain_number = 50\n")
    assert any("24-43" in v for v in e.value.violations)


def test_syntax_errors_carry_line_numbers():
    with pytest.raises(ScenarioSyntaxError) as e:
        parse_scenario("node.a.role = gmc\nthis is not a key value\n")
    assert e.value.line == 2
    with pytest.raises(ScenarioSyntaxError) as e:
        parse_scenario("node.a.role = gmc\nnode.a.colour = red\n")
    assert e.value.line == 2 and "unknown key" in str(e.value)
    with pytest.raises(ScenarioSyntaxError) as e:
        parse_scenario("run.seed = 1\nrun.seed = 2\n")
    assert e.value.line == 2 and "duplicate" in str(e.value)
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario("bogus.key = 1\n")
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario("node.a.role = wizard\n")


def test_validation_reports_everything():
    text = """
node.a.role = bc
node.b.role = oc
link.x.a = a
link.x.b = ghost
link.x.length_km = 1
link.w.a = a
link.w.b = b
link.w.kind = wireless
link.w.length_km = 10
run.domain_number = 7
"""
    s = parse_scenario(text, validate_result=False)
    problems = validate(s)
    joined = "\n".join(problems)
    assert "no grandmaster" in joined
    assert "dangling link endpoint" in joined
    assert "no channel parameters" in joined
    assert "24-43" in joined
    assert len(problems) >= 4


def test_duplicate_node_ids():
    s = get_preset("ara")
    dup = dataclasses.replace(s, nodes=s.nodes + (s.nodes[-1],))
    assert any("duplicate node id" in v for v in validate(dup))


def test_weather_coverage():
    s = parse_scenario(MINIMAL + "weather.segments = 0s:0.0, 10m:0.1\nweather.end = 30m\nrun.duration = 1h\n",
                       validate_result=False)
    assert any("weather trace ends" in v for v in validate(s))


def test_weather_csv_reference(tmp_path):
    (tmp_path / "rain.csv").write_text("start_s,rain_mmh\n0,0\n60,0.2\n")
    (tmp_path / "s.txt").write_text(MINIMAL + "weather.csv = rain.csv\n")
    s = load_scenario(tmp_path / "s.txt")
    assert s.weather.rain_rate_at(61 * 10**9) == 0.2


def test_durations():
    assert parse_duration("90") == 90 * 10**9
    assert parse_duration("1.5m") == 90 * 10**9
    assert parse_duration("2h") == 7200 * 10**9
    assert parse_duration("250ms") == 250_000_000
    assert format_duration(7200 * 10**9) == "2h" and format_duration(0) == "0s" and format_duration(5) == "5ns"
    with pytest.raises(ValueError):
        parse_duration("soon")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_valid_and_round_trip(name):
    s = get_preset(name)
    assert validate(s) == []
    assert parse_scenario(serialize_scenario(s), name=s.name) == s


def test_ara_preset_shape():
    s = get_preset("ara")
    r = s.run
    assert (r.announce_pps, r.sync_pps, r.delay_resp_pps, r.domain_number) == (8.0, 16.0, 16.0, 24)
    radio = [lk for lk in s.links if lk.spec.kind is LinkKind.WIRELESS]
    assert len(radio) == 1 and radio[0].channel.carrier_ghz == 80.0 and radio[0].spec.length_km == 10.15
    assert s.node("gmc").two_step is False
    assert all(n.two_step for n in s.nodes if n.role == "bc")
    assert sum(1 for n in s.nodes if n.role == "oc") == 3


def test_ara_golden_file():
    assert serialize_scenario(get_preset("ara")) == (DATA / "ara.scenario").read_text()


def test_rain_trace_cycles_bins():
    w = rain_trace(7200 * 10**9)
    assert w.segments[0] == (0, 0.0)
    assert [r for _, r in w.segments[:6]] == [0.0, 0.025, 0.075, 0.125, 0.175, 0.225]
    assert w.last_start < 7200 * 10**9
