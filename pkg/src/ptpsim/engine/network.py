"""Node and port runtimes, message transport and the simulation driver.

One :class:`Simulation` instance is one run: it builds runtimes from a
validated :class:`~ptpsim.scenario.Scenario`, drives them through a
:class:`~ptpsim.engine.kernel.Kernel` and collects metric records.

Model summary:

* every node owns a single :class:`~ptpsim.timebase.LocalClock`; the Slave
  port disciplines it and every Master port timestamps with it,
* timestamps are taken at the link interface at the emission/arrival event
  and floored to the configured granularity,
* links are point-to-point; a message sent on a port reaches the port at the
  other end after a sampled one-way delay,
* transparent clocks forward everything except peer-delay messages to all
  other ports after their residence time and account for it in the
  correction field; they take no part in BMCA.
"""

from __future__ import annotations

import copy
import enum
import gc
import math
from dataclasses import dataclass, field, replace
from heapq import heappush
from typing import Callable

from ..analysis import MetricRecord
from ..channel import Direction, LinkChannel, LinkKind
from ..proto import codec
from ..proto.bmca import ForeignMaster, ForeignMasterTable, announce_timeout_ns, run_bmca
from ..proto.messages import (
    CORRECTION_SCALE,
    AnnounceDataset,
    MessageType,
    PortIdentity,
    PortState,
    PtpMessage,
    clock_identity_from_int,
)
from ..rng import RandomStream
from ..scenario import NodeSpec, Scenario, check
from ..syncmath import ServoState, SyncExchange, SyncSample, peer_delay, sample_from_exchange, servo_step
from ..timebase import MAX_FREQ_ERROR_PPB, MAX_SIM_TIME, NS_PER_S, LocalClock, OscillatorParams
from .kernel import Kernel, SchedulingError

RANDOM_PHASE_RANGE_NS = 1_000_000.0
RANDOM_FREQ_RANGE_PPB = 5_000.0
PDELAY_TURNAROUND_NS = 10_000

_SYNC = MessageType.SYNC
_FOLLOW_UP = MessageType.FOLLOW_UP
_DELAY_REQ = MessageType.DELAY_REQ
_DELAY_RESP = MessageType.DELAY_RESP
_ANNOUNCE = MessageType.ANNOUNCE
_PDELAY_REQ = MessageType.PDELAY_REQ
_PDELAY_RESP = MessageType.PDELAY_RESP
_PDELAY_FUP = MessageType.PDELAY_RESP_FOLLOW_UP
_LINK_LOCAL = frozenset({_PDELAY_REQ, _PDELAY_RESP, _PDELAY_FUP})

_SLAVE_SIDE = (PortState.SLAVE, PortState.UNCALIBRATED)


class Role(str, enum.Enum):
    GMC = "gmc"
    BC = "bc"
    OC = "oc"
    TC_E2E = "tc_e2e"
    TC_P2P = "tc_p2p"

    @property
    def is_tc(self) -> bool:
        return self in (Role.TC_E2E, Role.TC_P2P)


class InvariantViolation(RuntimeError):
    """The simulation reached a state its model forbids (e.g. two Slave ports)."""


@dataclass
class _Exchange:
    sync_seq: int
    t2: int
    correction: int  # fixed point, Sync (+ FollowUp)
    t1: int | None = None
    t3: int | None = None
    delay_seq: int | None = None
    t4: int | None = None
    delay_correction: int = 0


@dataclass
class _PeerExchange:
    seq: int
    t1: int
    t2: int | None = None
    t3: int | None = None
    t4: int | None = None


@dataclass
class Counters:
    discarded_exchanges: int = 0
    sequence_mismatches: int = 0
    samples: int = 0
    phase_steps: int = 0
    dropped_messages: int = 0
    ignored_domain: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class Port:
    __slots__ = (
        "node",
        "index",
        "number",
        "identity",
        "link",
        "state",
        "foreign",
        "master_gen",
        "sync_seq",
        "announce_seq",
        "delay_seq",
        "pdelay_seq",
        "exchange",
        "orphan_followup",
        "last_delay_req",
        "pdelay",
        "peer_delay_ns",
        "labels",
        "timer_labels",
    )

    def __init__(self, node: Node, index: int, timeout_ns: int, domain: int) -> None:
        self.node = node
        self.index = index
        self.number = index + 1
        self.identity = PortIdentity(node.identity, self.number)
        self.link: LinkRuntime | None = None
        self.state = PortState.INITIALIZING
        self.foreign = ForeignMasterTable(domain_number=domain, timeout_ns=timeout_ns)
        self.master_gen = 0
        self.sync_seq = 0
        self.announce_seq = 0
        self.delay_seq = 0
        self.pdelay_seq = 0
        self.exchange: _Exchange | None = None
        self.orphan_followup: tuple[int, int, int] | None = None
        self.last_delay_req: int | None = None
        self.pdelay: _PeerExchange | None = None
        self.peer_delay_ns: int | None = None
        self.labels = {t: f"{t.name}@{node.id}:{self.number}" for t in MessageType}
        name = f"{node.id}:{self.number}"
        self.timer_labels = (f"announce-timer@{name}", f"sync-timer@{name}")

    @property
    def name(self) -> str:
        return f"{self.node.id}:{self.number}"

    def __repr__(self) -> str:
        return f"Port({self.name}, {self.state.value})"


class Node:
    def __init__(self, sim: Simulation, spec: NodeSpec, ordinal: int) -> None:
        self.sim = sim
        self.spec = spec
        self.id = spec.id
        self.role = Role(spec.role)
        self.is_tc = self.role.is_tc
        ident = spec.clock_identity if spec.clock_identity is not None else ordinal + 1
        self.identity = clock_identity_from_int(ident)
        self.ports: list[Port] = []
        seed = sim.seed
        init = RandomStream(seed, "osc-init", spec.id)
        phase = spec.osc_phase_ns
        if phase is None:
            phase = init.uniform(-RANDOM_PHASE_RANGE_NS, RANDOM_PHASE_RANGE_NS)
        freq = spec.osc_freq_ppb
        if freq is None:
            freq = init.uniform(-RANDOM_FREQ_RANGE_PPB, RANDOM_FREQ_RANGE_PPB)
        self.osc = OscillatorParams(phase, freq, spec.osc_rw_ppb_per_rts, spec.osc_white_ns)
        self.clock = LocalClock(self.osc)
        self.osc_rng = RandomStream(seed, "osc", spec.id)
        self.granularity = sim.scenario.run.timestamp_granularity_ns
        self.servo: ServoState | None = None
        if self.role in (Role.BC, Role.OC):
            self.servo = ServoState(
                kp=spec.servo_kp,
                ki=spec.servo_ki,
                step_threshold=spec.step_threshold_ns,
                lock_threshold=spec.lock_threshold_ns,
                sync_interval_ns=sim.sync_interval,
            )
        self.two_step = spec.two_step
        self.p2p = spec.delay_mechanism == "p2p" or self.role is Role.TC_P2P
        self.own_dataset = AnnounceDataset(
            spec.priority1,
            spec.clock_class,
            spec.clock_accuracy,
            spec.variance,
            spec.priority2,
            self.identity,
            0,
        )
        self.parent: ForeignMaster | None = None
        self.parent_port: int | None = None
        self.listening_until = 0

    def __repr__(self) -> str:
        return f"Node({self.id}, {self.role.value})"

    @property
    def slave_port(self) -> Port | None:
        return None if self.parent_port is None else self.ports[self.parent_port]

    def announced_dataset(self) -> AnnounceDataset:
        return self.own_dataset if self.parent is None else self.parent.dataset.inherited()

    def timestamp(self, t: int) -> int:
        v = self.clock.timestamp(t, self.osc_rng)
        g = self.granularity
        return int(math.floor(v / g)) * g if g > 1 else int(math.floor(v))

    def true_offset(self, t: int) -> float:
        """Noise-free local minus true time; draws nothing from the clock's stream."""
        return self.clock.ideal_read(t) - t


class LinkRuntime:
    __slots__ = ("id", "ends", "channel", "sim", "kind")

    def __init__(self, sim: Simulation, link_id: str, a: Port, b: Port, channel: LinkChannel) -> None:
        self.sim = sim
        self.id = link_id
        self.ends = (a, b)
        self.channel = channel
        self.kind = channel.spec.kind
        a.link = self
        b.link = self

    def peer(self, port: Port) -> Port:
        a, b = self.ends
        return b if port is a else a

    def send(self, port: Port, msg: PtpMessage, t: int) -> None:
        sim = self.sim
        a, b = self.ends
        if port is a:
            direction, dest = Direction.FORWARD, b
        else:
            direction, dest = Direction.REVERSE, a
        if sim.message_filter is not None and not sim.message_filter(self.id, msg):
            sim.counters.dropped_messages += 1
            return
        if sim.wire_check:
            msg = codec.decode(codec.encode(msg))
        # inlined Kernel.schedule: delays are >= 1 ns so the time is never in the past
        at = t + self.channel.delay(direction, t)
        kernel = sim.kernel
        if at >= MAX_SIM_TIME:
            raise SchedulingError(f"event time {at} ns beyond the supported range")
        seq = kernel._seq
        kernel._seq = seq + 1
        heappush(kernel._queue, (at, seq, sim.deliver, (dest, msg), dest.labels[msg.msg_type]))
        sim.messages_sent += 1


@dataclass
class StateChange:
    at: int
    node: str
    port: int
    old: PortState
    new: PortState


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    events: int
    metrics: list[MetricRecord]
    state_changes: list[StateChange]
    final_states: dict[str, dict[int, PortState]]
    port_links: dict[str, dict[int, str]]
    parents: dict[str, str | None]
    counters: Counters
    trace_hash: str | None
    messages_sent: int
    duration_ns: int
    extras: dict = field(default_factory=dict)

    @property
    def convergence_time_ns(self) -> int:
        return self.state_changes[-1].at if self.state_changes else 0

    def changes_after(self, t: int) -> list[StateChange]:
        return [c for c in self.state_changes if c.at > t]

    def series(self, node: str, metric: str) -> list[MetricRecord]:
        return [r for r in self.metrics if r.node == node and r.metric == metric]

    def values(self, node: str, metric: str, after_ns: int = 0) -> list[float]:
        return [r.value for r in self.metrics if r.node == node and r.metric == metric and r.at >= after_ns]

    def slave_edges(self) -> dict[str, str]:
        """child node id -> parent node id, from final Slave ports."""
        return {n: p for n, p in self.parents.items() if p is not None}


class Simulation:
    """One deterministic run of a scenario.

    ``record_truth`` adds a ``true_offset_ns`` series (noise-free local minus
    true time) per sample; it reads the clocks without drawing randomness, so
    every other output is unchanged.
    """

    def __init__(
        self,
        scenario: Scenario,
        seed: int | None = None,
        trace: bool = True,
        message_filter: Callable[[str, PtpMessage], bool] | None = None,
        wire_check: bool = False,
        record_truth: bool = False,
    ) -> None:
        self.scenario = check(scenario)
        run = scenario.run
        self.seed = run.seed if seed is None else seed
        self.kernel = Kernel(trace=trace)
        self.message_filter = message_filter
        self.wire_check = wire_check
        self.record_truth = record_truth
        self.metrics: list[MetricRecord] = []
        self.state_changes: list[StateChange] = []
        self.counters = Counters()
        self.messages_sent = 0
        self.domain = run.domain_number
        self.sync_interval = int(round(NS_PER_S / run.sync_pps))
        self.announce_interval = int(round(NS_PER_S / run.announce_pps))
        self.delay_interval = int(round(NS_PER_S / run.delay_resp_pps))
        self.announce_timeout = announce_timeout_ns(run.announce_pps)
        self.log_sync = round(math.log2(1.0 / run.sync_pps))
        self.log_announce = round(math.log2(1.0 / run.announce_pps))
        self.log_delay = round(math.log2(1.0 / run.delay_resp_pps))

        self.nodes: dict[str, Node] = {}
        for i, spec in enumerate(scenario.nodes):
            self.nodes[spec.id] = Node(self, spec, i)
        self.links: dict[str, LinkRuntime] = {}
        for lk in scenario.links:
            pa = self._new_port(self.nodes[lk.a])
            pb = self._new_port(self.nodes[lk.b])
            channel = LinkChannel(lk.id, lk.spec, self.seed, lk.channel, scenario.weather)
            self.links[lk.id] = LinkRuntime(self, lk.id, pa, pb, channel)
        self._started = False

    def _new_port(self, node: Node) -> Port:
        port = Port(node, len(node.ports), self.announce_timeout, self.domain)
        node.ports.append(port)
        return port

    # -- bookkeeping -------------------------------------------------------

    def record(self, at: int, node: str, metric: str, value: float) -> None:
        self.metrics.append(MetricRecord(at, node, metric, value))

    def set_state(self, port: Port, new: PortState) -> None:
        old = port.state
        if old is new:
            return
        now = self.kernel.now
        port.state = new
        self.state_changes.append(StateChange(now, port.node.id, port.number, old, new))
        self.record(now, port.name, "port_state", new.code)
        if old is PortState.MASTER:
            port.master_gen += 1
        if new is PortState.MASTER:
            port.master_gen += 1
            gen = port.master_gen
            k = self.kernel
            k.schedule(now, self._announce_tick, port, gen, label=f"announce-timer@{port.name}")
            k.schedule(now, self._sync_tick, port, gen, label=f"sync-timer@{port.name}")
        if new not in _SLAVE_SIDE:
            port.exchange = None
            port.orphan_followup = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        k = self.kernel
        for node in self.nodes.values():
            if node.is_tc:
                for port in node.ports:
                    port.state = PortState.INITIALIZING
            else:
                # the designated grandmaster announces after one interval so its
                # Announce reaches every clock before their own receipt timeout
                window = self.announce_interval if node.role is Role.GMC else self.announce_timeout
                node.listening_until = window
                for port in node.ports:
                    self.set_state(port, PortState.LISTENING)
                k.schedule(window, self._housekeeping, node, label=f"housekeeping@{node.id}")
            if node.p2p:
                for port in node.ports:
                    k.schedule(0, self._pdelay_tick, port, label=f"pdelay-timer@{port.name}")
        interval = int(round(self.scenario.run.channel_sample_interval_s * NS_PER_S))
        for link in self.links.values():
            if link.channel.is_wireless:
                k.schedule(0, self._channel_tick, link, interval, label=f"channel@{link.id}")

    def run(self, until: int | None = None) -> RunResult:
        self.start()
        end = self.scenario.run.duration_ns if until is None else until
        # the event loop allocates millions of acyclic objects; cyclic GC passes
        # over them (and over earlier runs' results) are pure overhead
        enabled = gc.isenabled()
        gc.disable()
        try:
            self.kernel.run_until(end)
        finally:
            if enabled:
                gc.enable()
        return self.result()

    def result(self) -> RunResult:
        final = {n.id: {p.number: p.state for p in n.ports} for n in self.nodes.values()}
        port_links = {n.id: {p.number: p.link.id for p in n.ports} for n in self.nodes.values()}
        parents = {}
        for n in self.nodes.values():
            sp = n.slave_port
            parents[n.id] = None if sp is None else sp.link.peer(sp).node.id
        return RunResult(
            scenario=self.scenario,
            seed=self.seed,
            events=self.kernel.processed,
            metrics=self.metrics,
            state_changes=self.state_changes,
            final_states=final,
            port_links=port_links,
            parents=parents,
            counters=self.counters,
            trace_hash=self.kernel.trace_hash,
            messages_sent=self.messages_sent,
            duration_ns=self.kernel.now,
        )

    # -- timers ------------------------------------------------------------

    def _housekeeping(self, node: Node) -> None:
        now = self.kernel.now
        changed = False
        for port in node.ports:
            if port.foreign.expire(now):
                changed = True
        if changed or now == node.listening_until:
            self.bmca(node)
        self.kernel.schedule(now + self.announce_interval, self._housekeeping, node, label=f"housekeeping@{node.id}")

    def _announce_tick(self, port: Port, gen: int) -> None:
        if gen != port.master_gen:
            return
        now = self.kernel.now
        node = port.node
        ds = node.announced_dataset()
        msg = PtpMessage(
            _ANNOUNCE,
            port.identity,
            sequence_id=port.announce_seq,
            domain_number=self.domain,
            origin_timestamp=0,
            log_message_interval=self.log_announce,
            announce=ds,
            time_source=0x20 if node.role is Role.GMC else 0xA0,
        )
        port.announce_seq = (port.announce_seq + 1) & 0xFFFF
        port.link.send(port, msg, now)
        self.kernel.schedule(now + self.announce_interval, self._announce_tick, port, gen, label=port.timer_labels[0])

    def _sync_tick(self, port: Port, gen: int) -> None:
        if gen != port.master_gen:
            return
        self.master_tick(port)
        self.kernel.schedule(
            self.kernel.now + self.sync_interval, self._sync_tick, port, gen, label=port.timer_labels[1]
        )

    def _pdelay_tick(self, port: Port) -> None:
        now = self.kernel.now
        node = port.node
        if port.state is not PortState.INITIALIZING or node.is_tc:
            t1 = node.timestamp(now)
            seq = port.pdelay_seq
            port.pdelay_seq = (seq + 1) & 0xFFFF
            port.pdelay = _PeerExchange(seq, t1)
            msg = PtpMessage(_PDELAY_REQ, port.identity, seq, self.domain, origin_timestamp=0,
                             log_message_interval=self.log_delay)
            port.link.send(port, msg, now)
        self.kernel.schedule(now + self.delay_interval, self._pdelay_tick, port, label=f"pdelay-timer@{port.name}")

    def _channel_tick(self, link: LinkRuntime, interval: int) -> None:
        now = self.kernel.now
        s = link.channel.sample(now)
        self.record(now, link.id, "snr_db", s.snr_db)
        self.record(now, link.id, "rsl_dbm", s.rsl_dbm)
        self.record(now, link.id, "rain_mmh", s.rain_mmh)
        self.kernel.schedule(now + interval, self._channel_tick, link, interval, label=f"channel@{link.id}")

    # -- master side -------------------------------------------------------

    def master_tick(self, port: Port) -> None:
        """Emit one Sync (plus FollowUp for two-step clocks) on a Master port."""
        now = self.kernel.now
        node = port.node
        t1 = node.timestamp(now)
        seq = port.sync_seq
        port.sync_seq = (seq + 1) & 0xFFFF
        two_step = node.two_step
        sync = PtpMessage(
            _SYNC,
            port.identity,
            seq,
            self.domain,
            origin_timestamp=0 if two_step else t1,
            log_message_interval=self.log_sync,
            two_step=two_step,
        )
        port.link.send(port, sync, now)
        if two_step:
            fup = PtpMessage(
                _FOLLOW_UP, port.identity, seq, self.domain, origin_timestamp=t1, log_message_interval=self.log_sync
            )
            port.link.send(port, fup, now)

    def _answer_delay_req(self, port: Port, msg: PtpMessage) -> None:
        now = self.kernel.now
        t4 = port.node.timestamp(now)
        resp = PtpMessage(
            _DELAY_RESP,
            port.identity,
            msg.sequence_id,
            self.domain,
            correction=msg.correction,
            receive_timestamp=t4,
            requesting_port=msg.source,
            log_message_interval=self.log_delay,
        )
        port.link.send(port, resp, now)

    # -- receive path ------------------------------------------------------

    def deliver(self, port: Port, msg: PtpMessage) -> None:
        node = port.node
        if msg.domain_number != self.domain:
            self.counters.ignored_domain += 1
            return
        t = msg.msg_type
        if t in _LINK_LOCAL:
            self._peer_delay_message(port, msg)
            return
        if node.is_tc:
            self.tc_forward(node, msg, port)
            return
        if t is _ANNOUNCE:
            self._announce(port, msg)
            return
        state = port.state
        if state is PortState.MASTER:
            if t is _DELAY_REQ:
                self._answer_delay_req(port, msg)
            return
        if state in _SLAVE_SIDE:
            parent = node.parent
            # identity check first: in-process messages share the sender's PortIdentity object
            if parent is None or (msg.source is not parent.sender and msg.source != parent.sender):
                return
            self.slave_ingest(node, port, msg)

    def _announce(self, port: Port, msg: PtpMessage) -> None:
        node = port.node
        if msg.source.clock_identity == node.identity:
            return
        table = port.foreign
        prev = table.entries.get(msg.source)
        if msg.announce is None:
            return
        table.entries[msg.source] = ForeignMaster(msg.announce, msg.source, self.kernel.now)
        if prev is None or prev.dataset != msg.announce:
            self.bmca(node)

    def slave_ingest(self, node: Node, port: Port, msg: PtpMessage) -> SyncSample | None:
        now = self.kernel.now
        t = msg.msg_type
        if t is _SYNC:
            t2 = node.timestamp(now)
            if port.exchange is not None:
                self.counters.discarded_exchanges += 1
            ex = _Exchange(msg.sequence_id, t2, msg.correction)
            if not msg.two_step:
                ex.t1 = msg.origin_timestamp
            else:
                orphan = port.orphan_followup
                if orphan is not None and orphan[0] == msg.sequence_id:
                    ex.t1 = orphan[1]
                    ex.correction += orphan[2]
                port.orphan_followup = None
            port.exchange = ex
            if node.p2p:
                return self._complete_p2p(node, port)
            last = port.last_delay_req
            if last is None or now - last >= self.delay_interval - self.sync_interval // 2:
                port.last_delay_req = now
                t3 = node.timestamp(now)
                seq = port.delay_seq
                port.delay_seq = (seq + 1) & 0xFFFF
                ex.t3 = t3
                ex.delay_seq = seq
                req = PtpMessage(_DELAY_REQ, port.identity, seq, self.domain, origin_timestamp=0,
                                 log_message_interval=0x7F)
                port.link.send(port, req, now)
            return None
        if t is _FOLLOW_UP:
            ex = port.exchange
            if ex is not None and ex.sync_seq == msg.sequence_id and ex.t1 is None:
                ex.t1 = msg.origin_timestamp
                ex.correction += msg.correction
                return self._complete_p2p(node, port) if node.p2p else self._try_complete(node, port)
            port.orphan_followup = (msg.sequence_id, msg.origin_timestamp, msg.correction)
            if ex is not None and ex.sync_seq != msg.sequence_id:
                self.counters.sequence_mismatches += 1
            return None
        if t is _DELAY_RESP:
            ex = port.exchange
            req = msg.requesting_port
            if req is not port.identity and req != port.identity:
                return None
            if ex is None or ex.delay_seq != msg.sequence_id:
                self.counters.sequence_mismatches += 1
                return None
            ex.t4 = msg.receive_timestamp
            ex.delay_correction = msg.correction
            return self._try_complete(node, port)
        return None

    def _try_complete(self, node: Node, port: Port) -> SyncSample | None:
        ex = port.exchange
        if ex.t1 is None or ex.t4 is None or ex.t3 is None:
            return None
        port.exchange = None
        x = SyncExchange(
            ex.t1,
            ex.t2,
            ex.t3,
            ex.t4,
            _fixed_to_ns(ex.correction),
            _fixed_to_ns(ex.delay_correction),
        )
        return self._feed_servo(node, port, sample_from_exchange(x, self.kernel.now))

    def _complete_p2p(self, node: Node, port: Port) -> SyncSample | None:
        ex = port.exchange
        if ex.t1 is None or port.peer_delay_ns is None:
            return None
        port.exchange = None
        link_delay = port.peer_delay_ns
        offset = ex.t2 - ex.t1 - _fixed_to_ns(ex.correction) - link_delay
        return self._feed_servo(node, port, SyncSample(offset, link_delay, self.kernel.now))

    def _feed_servo(self, node: Node, port: Port, sample: SyncSample) -> SyncSample:
        now = self.kernel.now
        self.counters.samples += 1
        if self.record_truth:
            self.record(now, node.id, "true_offset_ns", node.true_offset(now))
        self.record(now, node.id, "offset_ns", sample.offset)
        self.record(now, node.id, "mpd_ns", sample.mean_path_delay)
        if node.servo is None:
            return sample
        step, ppb, node.servo = servo_step(node.servo, sample)
        clock = node.clock
        clock.advance(now, node.osc_rng)
        if step is not None:
            clock.step(step)
            self.counters.phase_steps += 1
        limit = MAX_FREQ_ERROR_PPB - 1.0
        ppb = min(limit - clock.freq_offset, max(-limit - clock.freq_offset, ppb))
        clock.set_freq_adjust(ppb)
        if node.servo.locked and port.state is PortState.UNCALIBRATED:
            self.set_state(port, PortState.SLAVE)
        return sample

    # -- peer delay --------------------------------------------------------

    def _peer_delay_message(self, port: Port, msg: PtpMessage) -> None:
        node = port.node
        now = self.kernel.now
        t = msg.msg_type
        if t is _PDELAY_REQ:
            t2 = node.timestamp(now)
            self.kernel.schedule(now + PDELAY_TURNAROUND_NS, self._pdelay_respond, port, msg, t2,
                                 label=f"pdelay-resp@{port.name}")
            return
        pd = port.pdelay
        if pd is None or msg.requesting_port != port.identity or msg.sequence_id != pd.seq:
            return
        if t is _PDELAY_RESP:
            pd.t4 = node.timestamp(now)
            pd.t2 = msg.receive_timestamp
        else:
            pd.t3 = msg.origin_timestamp
        if pd.t2 is not None and pd.t3 is not None and pd.t4 is not None:
            port.peer_delay_ns = peer_delay(pd.t1, pd.t2, pd.t3, pd.t4)
            port.pdelay = None

    def _pdelay_respond(self, port: Port, req: PtpMessage, t2: int) -> None:
        now = self.kernel.now
        t3 = port.node.timestamp(now)
        resp = PtpMessage(_PDELAY_RESP, port.identity, req.sequence_id, self.domain,
                          receive_timestamp=t2, requesting_port=req.source, two_step=True,
                          log_message_interval=0x7F)
        fup = PtpMessage(_PDELAY_FUP, port.identity, req.sequence_id, self.domain,
                         origin_timestamp=t3, requesting_port=req.source, log_message_interval=0x7F)
        port.link.send(port, resp, now)
        port.link.send(port, fup, now)

    # -- transparent clock -------------------------------------------------

    def tc_forward(self, node: Node, msg: PtpMessage, ingress: Port) -> None:
        """Forward ``msg`` out of every other port after the residence time."""
        now = self.kernel.now
        ingress_ts = node.timestamp(now) if msg.is_event else None
        egress_at = now + int(round(node.spec.residence_ns))
        for port in node.ports:
            if port is ingress:
                continue
            self.kernel.schedule(egress_at, self._tc_emit, node, port, ingress, msg, ingress_ts,
                                 label=f"tc-egress@{port.name}")

    def _tc_emit(self, node: Node, port: Port, ingress: Port, msg: PtpMessage, ingress_ts: int | None) -> None:
        now = self.kernel.now
        out = copy.copy(msg)
        if ingress_ts is not None:
            residence = node.timestamp(now) - ingress_ts
            out.correction = msg.correction + residence * CORRECTION_SCALE
            if node.role is Role.TC_P2P and msg.msg_type is _SYNC and ingress.peer_delay_ns is not None:
                out.correction += ingress.peer_delay_ns * CORRECTION_SCALE
        port.link.send(port, out, now)

    # -- BMCA --------------------------------------------------------------

    def bmca(self, node: Node) -> None:
        if node.is_tc:
            return
        now = self.kernel.now
        best = [p.foreign.best() for p in node.ports]
        res = run_bmca(
            node.own_dataset,
            PortIdentity(node.identity, 0),
            best,
            slave_only=node.role is Role.OC,
        )
        # a clock that has found a parent needs no further listening
        listening = now < node.listening_until and res.parent is None
        old_parent = node.parent
        node.parent = res.parent
        node.parent_port = res.parent_port
        for port, rec in zip(node.ports, res.states):
            if rec is PortState.SLAVE:
                same_master = (
                    old_parent is not None
                    and res.parent is not None
                    and old_parent.sender == res.parent.sender
                    and port.state in _SLAVE_SIDE
                )
                if not same_master:
                    port.exchange = None
                    port.orphan_followup = None
                    port.last_delay_req = None
                    if node.servo is not None:
                        node.servo = replace(node.servo, locked=False, good_samples=0)
                    if port.state is PortState.UNCALIBRATED:
                        continue
                    self.set_state(port, PortState.UNCALIBRATED)
                continue
            if rec is PortState.MASTER and listening:
                rec = PortState.LISTENING
            self.set_state(port, rec)
        slaves = sum(1 for p in node.ports if p.state in _SLAVE_SIDE)
        if slaves > 1:
            raise InvariantViolation(f"{node.id} has {slaves} slave-side ports")


def _fixed_to_ns(correction: int) -> int:
    # correction field is ns * 2**16; round to whole ns at servo input
    q, r = divmod(correction, CORRECTION_SCALE)
    return q + (1 if 2 * r >= CORRECTION_SCALE else 0)


def simulate(scenario: Scenario, seed: int | None = None, **kwargs) -> RunResult:
    return Simulation(scenario, seed=seed, **kwargs).run()


def link_kind_of_slave(result: RunResult, node_id: str) -> LinkKind | None:
    """Kind of the link carrying ``node_id``'s Slave port at the end of the run."""
    for number, state in result.final_states[node_id].items():
        if state in _SLAVE_SIDE:
            return result.scenario.link(result.port_links[node_id][number]).spec.kind
    return None
