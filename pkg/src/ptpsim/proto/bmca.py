"""Best master clock selection.

Datasets are ordered lexicographically (lower wins) on priority1, clock
class, accuracy, variance, priority2, steps removed and finally clock
identity. Announces that describe the same grandmaster at the same distance
are told apart by the sending port identity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .messages import AnnounceDataset, MessageType, PortIdentity, PortState, PtpMessage

ANNOUNCE_RECEIPT_TIMEOUT = 3


class Comparison(enum.Enum):
    A_BETTER = "A_better"
    B_BETTER = "B_better"


def better_dataset(a: AnnounceDataset, b: AnnounceDataset) -> Comparison:
    ka, kb = a.key(), b.key()
    if ka == kb:
        raise ValueError("datasets are identical; ordering needs a differing identity or hop count")
    return Comparison.A_BETTER if ka < kb else Comparison.B_BETTER


@dataclass(frozen=True)
class ForeignMaster:
    dataset: AnnounceDataset
    sender: PortIdentity
    last_seen: int

    def rank(self) -> tuple:
        return (*self.dataset.key(), self.sender.clock_identity, self.sender.port_number)


@dataclass
class ForeignMasterTable:
    """Announce senders heard on one port, keyed by sender port identity."""

    domain_number: int = 24
    timeout_ns: int = 375_000_000
    entries: dict[PortIdentity, ForeignMaster] = field(default_factory=dict)
    ignored: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def best(self) -> ForeignMaster | None:
        if not self.entries:
            return None
        return min(self.entries.values(), key=ForeignMaster.rank)

    def expire(self, now: int) -> bool:
        """Evict stale entries; returns True if anything was removed."""
        stale = [k for k, e in self.entries.items() if now - e.last_seen >= self.timeout_ns]
        for k in stale:
            del self.entries[k]
        return bool(stale)


def update_foreign_masters(table: ForeignMasterTable, announce: PtpMessage, now: int) -> bool:
    """Record or refresh the sender of ``announce``.

    Returns True when the table's content changed in a way BMCA cares about
    (new sender or a different dataset). Announces for another domain are
    counted in ``table.ignored`` and otherwise dropped.
    """
    if announce.msg_type is not MessageType.ANNOUNCE or announce.announce is None:
        raise ValueError(f"not an announce: {announce.msg_type!r}")
    if announce.domain_number != table.domain_number:
        table.ignored += 1
        return False
    prev = table.entries.get(announce.source)
    table.entries[announce.source] = ForeignMaster(announce.announce, announce.source, now)
    return prev is None or prev.dataset != announce.announce


def announce_timeout_ns(announce_pps: float) -> int:
    return int(round(ANNOUNCE_RECEIPT_TIMEOUT * 1e9 / announce_pps))


@dataclass(frozen=True)
class BmcaResult:
    states: tuple[PortState, ...]
    parent_port: int | None  # index into the port list
    parent: ForeignMaster | None

    @property
    def is_grandmaster(self) -> bool:
        return self.parent is None


def run_bmca(
    own: AnnounceDataset,
    own_port_identity: PortIdentity,
    port_best: Sequence[ForeignMaster | None],
    slave_only: bool = False,
) -> BmcaResult:
    """Recommend a state for every port of one clock.

    ``port_best`` holds the best non-expired foreign master per port. The
    overall best foreign master is compared against the clock's own dataset;
    if the clock wins it is grandmaster and every port is Master. Otherwise
    the winning port is Slave, and each other port is Master unless the
    foreign master heard there beats the dataset this clock would announce,
    in which case it is a redundant path to the same grandmaster and goes
    Passive.
    """
    own_rank = (*own.key(), own_port_identity.clock_identity, own_port_identity.port_number)
    candidates = [(fm.rank(), i) for i, fm in enumerate(port_best) if fm is not None]
    if candidates:
        best_rank, best_port = min(candidates)
    if not candidates or (own_rank < best_rank and not slave_only):
        state = PortState.LISTENING if slave_only else PortState.MASTER
        return BmcaResult(tuple(state for _ in port_best), None, None)

    parent = port_best[best_port]
    mine = parent.dataset.inherited()
    mine_rank = (*mine.key(), own_port_identity.clock_identity, own_port_identity.port_number)
    states = []
    for i, fm in enumerate(port_best):
        if i == best_port:
            states.append(PortState.SLAVE)
        elif slave_only:
            states.append(PortState.LISTENING)
        elif fm is None or mine_rank < fm.rank():
            states.append(PortState.MASTER)
        else:
            states.append(PortState.PASSIVE)
    return BmcaResult(tuple(states), best_port, parent)
