"""Scenario description: data model, text format, validation and presets.

Scenario files are line-oriented UTF-8 text::

    # comment
    run.duration = 2h
    node.GMC.role = gmc
    link.uplink.a = GMC
    link.uplink.b = WilsonHall
    link.uplink.kind = fiber
    weather.segments = 0:0.0, 600:0.05

Keys are ``section.key = value`` where the section is ``run``, ``weather``,
``node.<id>`` or ``link.<id>``. Unknown keys are rejected. See
``docs/scenario-format.md`` for the full key table.
"""

from __future__ import annotations

import dataclasses
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .channel import LinkKind, LinkSpec, WeatherError, WeatherTrace, WirelessChannelParams
from .timebase import NS_PER_S

DOMAIN_RANGE = (24, 43)
ROLES = ("gmc", "bc", "oc", "tc_e2e", "tc_p2p")
RANDOM = "random"


class ScenarioSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ScenarioValidationError(ValueError):
    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: str = "bc"
    two_step: bool = True
    priority1: int = 128
    priority2: int = 128
    clock_class: int = 248
    clock_accuracy: int = 0xFE
    variance: int = 0xFFFF
    clock_identity: int | None = None
    # None means "draw once per node from the scenario seed"
    osc_phase_ns: float | None = None
    osc_freq_ppb: float | None = None
    osc_rw_ppb_per_rts: float = 0.5
    osc_white_ns: float = 5.0
    servo_kp: float = 0.7
    servo_ki: float = 0.3
    step_threshold_ns: float = 100_000.0
    lock_threshold_ns: float = 1_000.0
    residence_ns: float = 0.0
    delay_mechanism: str = "e2e"

    @property
    def is_tc(self) -> bool:
        return self.role in ("tc_e2e", "tc_p2p")


def default_node(node_id: str, role: str) -> NodeSpec:
    """A node with the documented per-role defaults."""
    if role == "gmc":
        return NodeSpec(
            node_id,
            role,
            two_step=False,
            clock_class=6,
            clock_accuracy=0x21,
            variance=0x4E5D,
            osc_phase_ns=0.0,
            osc_freq_ppb=0.0,
            osc_rw_ppb_per_rts=0.0,
            osc_white_ns=0.0,
        )
    if role == "oc":
        return NodeSpec(node_id, role, clock_class=255)
    if role in ("tc_e2e", "tc_p2p"):
        return NodeSpec(node_id, role, osc_phase_ns=0.0)
    return NodeSpec(node_id, role)


@dataclass(frozen=True)
class LinkDef:
    id: str
    a: str
    b: str
    spec: LinkSpec
    channel: WirelessChannelParams | None = None


@dataclass(frozen=True)
class RunConfig:
    duration_ns: int = 2 * 3600 * NS_PER_S
    seed: int = 1
    domain_number: int = 24
    announce_pps: float = 8.0
    sync_pps: float = 16.0
    delay_resp_pps: float = 16.0
    timestamp_granularity_ns: int = 8
    channel_sample_interval_s: float = 1.0
    metrics: str = "metrics.csv"


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    nodes: tuple[NodeSpec, ...] = ()
    links: tuple[LinkDef, ...] = ()
    weather: WeatherTrace = field(default_factory=WeatherTrace.constant)
    weather_end_ns: int | None = None
    run: RunConfig = field(default_factory=RunConfig)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def link(self, link_id: str) -> LinkDef:
        for lk in self.links:
            if lk.id == link_id:
                return lk
        raise KeyError(link_id)

    def with_run(self, **changes) -> Scenario:
        return dataclasses.replace(self, run=dataclasses.replace(self.run, **changes))


# ---------------------------------------------------------------------------
# value parsing


_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(ns|ms|s|m|h)?\s*$")
_UNIT_NS = {"ns": 1, "ms": 1_000_000, "s": NS_PER_S, "m": 60 * NS_PER_S, "h": 3600 * NS_PER_S, None: NS_PER_S}


def parse_duration(text: str) -> int:
    """``'90'``, ``'90s'``, ``'1.5m'``, ``'2h'`` -> integer ns (bare numbers are seconds)."""
    m = _DURATION.match(text)
    if not m:
        raise ValueError(f"bad duration {text!r} (expected e.g. 120s, 30m, 2h)")
    return int(round(float(m.group(1)) * _UNIT_NS[m.group(2)]))


def format_duration(ns: int) -> str:
    if ns == 0:
        return "0s"
    for unit, scale in (("h", 3600 * NS_PER_S), ("m", 60 * NS_PER_S), ("s", NS_PER_S)):
        if ns % scale == 0:
            return f"{ns // scale}{unit}"
    return f"{ns}ns"


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _int(v: str) -> int:
    return int(v.strip(), 0)


def _float(v: str) -> float:
    return float(v.strip())


def _opt_float(v: str) -> float | None:
    return None if v.strip().lower() == RANDOM else float(v)


def _opt_int(v: str) -> int | None:
    return None if v.strip().lower() in ("auto", "") else int(v.strip(), 0)


def _str(v: str) -> str:
    return v.strip()


def _fmt(v) -> str:
    if v is None:
        return RANDOM
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_RUN_KEYS = {
    "duration": ("duration_ns", parse_duration, format_duration),
    "seed": ("seed", _int, str),
    "domain_number": ("domain_number", _int, str),
    "announce_pps": ("announce_pps", _float, repr),
    "sync_pps": ("sync_pps", _float, repr),
    "delay_resp_pps": ("delay_resp_pps", _float, repr),
    "timestamp_granularity_ns": ("timestamp_granularity_ns", _int, str),
    "channel_sample_interval_s": ("channel_sample_interval_s", _float, repr),
    "metrics": ("metrics", _str, str),
}

_NODE_KEYS = {
    "role": ("role", _str),
    "two_step": ("two_step", _bool),
    "priority1": ("priority1", _int),
    "priority2": ("priority2", _int),
    "clock_class": ("clock_class", _int),
    "clock_accuracy": ("clock_accuracy", _int),
    "variance": ("variance", _int),
    "clock_identity": ("clock_identity", _opt_int),
    "osc.phase_ns": ("osc_phase_ns", _opt_float),
    "osc.freq_ppb": ("osc_freq_ppb", _opt_float),
    "osc.rw_ppb_per_rts": ("osc_rw_ppb_per_rts", _float),
    "osc.white_ns": ("osc_white_ns", _float),
    "servo.kp": ("servo_kp", _float),
    "servo.ki": ("servo_ki", _float),
    "servo.step_threshold_ns": ("step_threshold_ns", _float),
    "servo.lock_threshold_ns": ("lock_threshold_ns", _float),
    "residence_ns": ("residence_ns", _float),
    "delay_mechanism": ("delay_mechanism", _str),
}

_LINK_SPEC_KEYS = {
    "kind": ("kind", _str),
    "length_km": ("length_km", _float),
    "base_residence_ns": ("base_residence_ns", _float),
    "jitter_std_ns": ("jitter_std_ns", _float),
    "asymmetry_std_ns": ("asymmetry_std_ns", _float),
    "asymmetry_tau_s": ("asymmetry_tau_s", _float),
}

_CHANNEL_KEYS = {f.name: f.name for f in dataclasses.fields(WirelessChannelParams)}


def _parse_segments(v: str) -> WeatherTrace:
    segs = []
    for part in v.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ValueError(f"weather segment {part!r} must be <start>:<rain_mmh>")
        start, rain = part.split(":", 1)
        segs.append((parse_duration(start), float(rain)))
    return WeatherTrace(tuple(segs))


def _format_segments(w: WeatherTrace) -> str:
    return ", ".join(f"{format_duration(s)}:{r!r}" for s, r in w.segments)


# ---------------------------------------------------------------------------
# parse / serialize


def parse_scenario(
    text: str,
    base_dir: str | Path | None = None,
    name: str = "scenario",
    validate_result: bool = True,
) -> Scenario:
    """Parse scenario text; syntax problems raise :class:`ScenarioSyntaxError`
    with the offending line, semantic problems :class:`ScenarioValidationError`."""
    run_kw: dict = {}
    weather: WeatherTrace | None = None
    weather_end: int | None = None
    node_kv: dict[str, dict[str, tuple[str, int]]] = {}
    link_kv: dict[str, dict[str, tuple[str, int]]] = {}
    node_order: list[str] = []
    link_order: list[str] = []
    seen: dict[str, int] = {}
    scenario_name = name

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioSyntaxError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ScenarioSyntaxError("empty key", lineno)
        if key in seen:
            raise ScenarioSyntaxError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        section, _, rest = key.partition(".")
        try:
            if section == "scenario" and rest == "name":
                scenario_name = value
            elif section == "run":
                if rest not in _RUN_KEYS:
                    raise ScenarioSyntaxError(f"unknown key {key!r}", lineno)
                attr, conv, _ = _RUN_KEYS[rest]
                run_kw[attr] = conv(value)
            elif section == "weather":
                if rest == "segments":
                    weather = _parse_segments(value)
                elif rest == "csv":
                    path = Path(value)
                    if base_dir is not None and not path.is_absolute():
                        path = Path(base_dir) / path
                    weather = WeatherTrace.load(path)
                elif rest == "end":
                    weather_end = parse_duration(value)
                else:
                    raise ScenarioSyntaxError(f"unknown key {key!r}", lineno)
            elif section in ("node", "link"):
                ident, _, sub = rest.partition(".")
                if not ident or not sub:
                    raise ScenarioSyntaxError(f"expected {section}.<id>.<key>, got {key!r}", lineno)
                table, order = (node_kv, node_order) if section == "node" else (link_kv, link_order)
                if ident not in table:
                    table[ident] = {}
                    order.append(ident)
                table[ident][sub] = (value, lineno)
            else:
                raise ScenarioSyntaxError(f"unknown section {section!r}", lineno)
        except ScenarioSyntaxError:
            raise
        except (ValueError, WeatherError, OSError) as exc:
            raise ScenarioSyntaxError(f"{key}: {exc}", lineno) from None

    nodes = [_build_node(nid, node_kv[nid]) for nid in node_order]
    links = [_build_link(lid, link_kv[lid]) for lid in link_order]
    scenario = Scenario(
        name=scenario_name,
        nodes=tuple(nodes),
        links=tuple(links),
        weather=weather or WeatherTrace.constant(0.0),
        weather_end_ns=weather_end,
        run=RunConfig(**run_kw),
    )
    return check(scenario) if validate_result else scenario


def _build_node(nid: str, kv: dict[str, tuple[str, int]]) -> NodeSpec:
    role_val, role_line = kv.get("role", ("bc", None))
    role = role_val.strip().lower()
    if role not in ROLES:
        raise ScenarioSyntaxError(f"node {nid!r}: unknown role {role_val!r} (one of {', '.join(ROLES)})", role_line)
    changes = {}
    for sub, (value, lineno) in kv.items():
        if sub not in _NODE_KEYS:
            raise ScenarioSyntaxError(f"unknown key 'node.{nid}.{sub}'", lineno)
        attr, conv = _NODE_KEYS[sub]
        try:
            changes[attr] = conv(value)
        except ValueError as exc:
            raise ScenarioSyntaxError(f"node.{nid}.{sub}: {exc}", lineno) from None
    changes["role"] = role
    return dataclasses.replace(default_node(nid, role), **changes)


def _build_link(lid: str, kv: dict[str, tuple[str, int]]) -> LinkDef:
    ends = {}
    spec_kw: dict = {}
    chan_kw: dict = {}
    first_line = min(line for _, line in kv.values())
    for sub, (value, lineno) in kv.items():
        try:
            if sub in ("a", "b"):
                ends[sub] = value.strip()
            elif sub in _LINK_SPEC_KEYS:
                attr, conv = _LINK_SPEC_KEYS[sub]
                spec_kw[attr] = conv(value)
            elif sub.startswith("channel.") and sub[len("channel."):] in _CHANNEL_KEYS:
                chan_kw[sub[len("channel."):]] = float(value)
            else:
                raise ScenarioSyntaxError(f"unknown key 'link.{lid}.{sub}'", lineno)
        except ScenarioSyntaxError:
            raise
        except ValueError as exc:
            raise ScenarioSyntaxError(f"link.{lid}.{sub}: {exc}", lineno) from None
    for end in ("a", "b"):
        if end not in ends:
            raise ScenarioSyntaxError(f"link {lid!r} is missing endpoint '{end}'", first_line)
    if "length_km" not in spec_kw:
        raise ScenarioSyntaxError(f"link {lid!r} is missing length_km", first_line)
    try:
        spec = LinkSpec(**{"kind": spec_kw.pop("kind", "fiber"), **spec_kw})
        channel = WirelessChannelParams(**chan_kw) if chan_kw else None
    except ValueError as exc:
        raise ScenarioSyntaxError(f"link {lid!r}: {exc}", first_line) from None
    return LinkDef(lid, ends["a"], ends["b"], spec, channel)


def serialize_scenario(s: Scenario) -> str:
    """Canonical text form; every field is written explicitly."""
    out = [f"# ptpsim scenario: {s.name}", f"scenario.name = {s.name}", ""]
    for key, (attr, _, fmt) in _RUN_KEYS.items():
        out.append(f"run.{key} = {fmt(getattr(s.run, attr))}")
    out.append("")
    out.append(f"weather.segments = {_format_segments(s.weather)}")
    if s.weather_end_ns is not None:
        out.append(f"weather.end = {format_duration(s.weather_end_ns)}")
    for n in s.nodes:
        out.append("")
        for key, (attr, _) in _NODE_KEYS.items():
            v = getattr(n, attr)
            if attr == "clock_identity":
                v = "auto" if v is None else f"0x{v:016x}"
            out.append(f"node.{n.id}.{key} = {_fmt(v)}")
    for lk in s.links:
        out.append("")
        out.append(f"link.{lk.id}.a = {lk.a}")
        out.append(f"link.{lk.id}.b = {lk.b}")
        for key, (attr, _) in _LINK_SPEC_KEYS.items():
            v = getattr(lk.spec, attr)
            out.append(f"link.{lk.id}.{key} = {v.value if attr == 'kind' else _fmt(v)}")
        if lk.channel is not None:
            for f in dataclasses.fields(WirelessChannelParams):
                out.append(f"link.{lk.id}.channel.{f.name} = {_fmt(float(getattr(lk.channel, f.name)))}")
    return "\n".join(out) + "\n"


def load_scenario(path: str | Path, validate_result: bool = True) -> Scenario:
    p = Path(path)
    return parse_scenario(
        p.read_text(encoding="utf-8"), base_dir=p.parent, name=p.stem, validate_result=validate_result
    )


# ---------------------------------------------------------------------------
# validation


def validate(s: Scenario) -> list[str]:
    """Return every violated scenario invariant (empty list when valid)."""
    v: list[str] = []
    ids = [n.id for n in s.nodes]
    counts = defaultdict(int)
    for i in ids:
        counts[i] += 1
    for i, c in counts.items():
        if c > 1:
            v.append(f"duplicate node id {i!r}")
    link_counts = defaultdict(int)
    for lk in s.links:
        link_counts[lk.id] += 1
    for i, c in link_counts.items():
        if c > 1:
            v.append(f"duplicate link id {i!r}")

    gmcs = [n.id for n in s.nodes if n.role == "gmc"]
    if not gmcs:
        v.append("no grandmaster: exactly one node must have role gmc")
    elif len(gmcs) > 1:
        v.append(f"multiple grandmasters: {', '.join(gmcs)}")

    idset = set(ids)
    degree = defaultdict(int)
    adj = defaultdict(set)
    for lk in s.links:
        for end in (lk.a, lk.b):
            if end not in idset:
                v.append(f"dangling link endpoint: link {lk.id!r} references unknown node {end!r}")
        if lk.a == lk.b:
            v.append(f"link {lk.id!r} connects node {lk.a!r} to itself")
        degree[lk.a] += 1
        degree[lk.b] += 1
        adj[lk.a].add(lk.b)
        adj[lk.b].add(lk.a)
        if lk.spec.kind is LinkKind.WIRELESS and lk.channel is None:
            v.append(f"wireless link {lk.id!r} has no channel parameters")

    if ids:
        seen = {ids[0]}
        stack = [ids[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb in idset and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        unreachable = [i for i in ids if i not in seen]
        if unreachable:
            v.append(f"topology is not connected; unreachable: {', '.join(unreachable)}")
    else:
        v.append("scenario has no nodes")

    idents = defaultdict(list)
    for n in s.nodes:
        if n.delay_mechanism not in ("e2e", "p2p"):
            v.append(f"node {n.id!r}: delay_mechanism must be e2e or p2p")
        if n.role == "oc" and degree[n.id] > 1:
            v.append(f"ordinary clock {n.id!r} has {degree[n.id]} ports; an OC has exactly one")
        if n.is_tc and degree[n.id] < 2:
            v.append(f"transparent clock {n.id!r} needs at least two ports")
        if n.role == "gmc" and not (
            (n.osc_phase_ns or 0) == 0 and (n.osc_freq_ppb or 0) == 0
            and n.osc_rw_ppb_per_rts == 0 and n.osc_white_ns == 0
        ):
            v.append(f"grandmaster {n.id!r} must have an ideal oscillator")
        if n.servo_kp <= 0 or n.servo_ki <= 0:
            v.append(f"node {n.id!r}: servo gains must be > 0")
        if n.osc_rw_ppb_per_rts < 0 or n.osc_white_ns < 0 or n.residence_ns < 0:
            v.append(f"node {n.id!r}: noise magnitudes and residence must be >= 0")
        for name in ("priority1", "priority2", "clock_class", "clock_accuracy"):
            if not 0 <= getattr(n, name) <= 255:
                v.append(f"node {n.id!r}: {name} must be in 0..255")
        if not 0 <= n.variance <= 0xFFFF:
            v.append(f"node {n.id!r}: variance must be in 0..65535")
        if n.clock_identity is not None:
            idents[n.clock_identity].append(n.id)
    for ident, owners in idents.items():
        if len(owners) > 1:
            v.append(f"clock identity 0x{ident:016x} shared by {', '.join(owners)}")

    r = s.run
    lo, hi = DOMAIN_RANGE
    if not lo <= r.domain_number <= hi:
        v.append(f"domain_number {r.domain_number} outside the profile range {lo}-{hi}")
    for name in ("announce_pps", "sync_pps", "delay_resp_pps"):
        if getattr(r, name) <= 0:
            v.append(f"{name} must be > 0")
    if r.duration_ns <= 0:
        v.append("duration must be > 0")
    if r.timestamp_granularity_ns < 1:
        v.append("timestamp_granularity_ns must be >= 1")
    if r.channel_sample_interval_s <= 0:
        v.append("channel_sample_interval_s must be > 0")

    if s.weather.start > 0:
        v.append(f"weather trace starts at {s.weather.start} ns, after simulation start 0")
    if s.weather_end_ns is not None and s.weather_end_ns < r.duration_ns:
        v.append(
            f"weather trace ends at {format_duration(s.weather_end_ns)}, "
            f"before run duration {format_duration(r.duration_ns)}"
        )
    return v


def check(s: Scenario) -> Scenario:
    """Validate and return ``s``; raises :class:`ScenarioValidationError`."""
    problems = validate(s)
    if problems:
        raise ScenarioValidationError(problems)
    return s
