"""PTP message records, clock datasets and port states."""

from __future__ import annotations

import enum
from dataclasses import dataclass

DEFAULT_DOMAIN = 24
PTP_VERSION = 2
CORRECTION_SCALE = 1 << 16  # correctionField unit is ns * 2**16


class MessageType(enum.IntEnum):
    SYNC = 0x0
    DELAY_REQ = 0x1
    PDELAY_REQ = 0x2
    PDELAY_RESP = 0x3
    FOLLOW_UP = 0x8
    DELAY_RESP = 0x9
    PDELAY_RESP_FOLLOW_UP = 0xA
    ANNOUNCE = 0xB
    SIGNALING = 0xC
    MANAGEMENT = 0xD

    @property
    def is_event(self) -> bool:
        return self in EVENT_MESSAGES


EVENT_MESSAGES = frozenset(
    {MessageType.SYNC, MessageType.DELAY_REQ, MessageType.PDELAY_REQ, MessageType.PDELAY_RESP}
)
GENERAL_MESSAGES = frozenset(MessageType) - EVENT_MESSAGES


class PortState(enum.Enum):
    INITIALIZING = "initializing"
    LISTENING = "listening"
    UNCALIBRATED = "uncalibrated"
    SLAVE = "slave"
    MASTER = "master"
    PASSIVE = "passive"

    @property
    def code(self) -> int:
        return _STATE_CODES[self]


# numeric codes used when port states are exported as metric values
_STATE_CODES = {
    PortState.INITIALIZING: 0,
    PortState.LISTENING: 1,
    PortState.UNCALIBRATED: 2,
    PortState.SLAVE: 3,
    PortState.MASTER: 4,
    PortState.PASSIVE: 5,
}


@dataclass(frozen=True, order=True)
class PortIdentity:
    clock_identity: bytes
    port_number: int

    def __post_init__(self) -> None:
        if len(self.clock_identity) != 8:
            raise ValueError(f"clock identity must be 8 bytes, got {len(self.clock_identity)}")
        if not 0 <= self.port_number <= 0xFFFF:
            raise ValueError(f"port number out of range: {self.port_number}")

    def __str__(self) -> str:
        return f"{self.clock_identity.hex()}-{self.port_number}"


def clock_identity_from_int(n: int) -> bytes:
    return n.to_bytes(8, "big")


NULL_PORT = PortIdentity(bytes(8), 0)


@dataclass(frozen=True)
class AnnounceDataset:
    """The clock-quality record BMCA compares.

    ``clock_identity`` is the grandmaster identity the dataset describes;
    ``steps_removed`` counts the boundary clocks between that grandmaster and
    the clock announcing it.
    """

    priority1: int = 128
    clock_class: int = 248
    clock_accuracy: int = 0xFE
    variance: int = 0xFFFF
    priority2: int = 128
    clock_identity: bytes = bytes(8)
    steps_removed: int = 0

    def key(self) -> tuple:
        return (
            self.priority1,
            self.clock_class,
            self.clock_accuracy,
            self.variance,
            self.priority2,
            self.steps_removed,
            self.clock_identity,
        )

    def same_grandmaster(self, other: AnnounceDataset) -> bool:
        return (
            self.clock_identity == other.clock_identity
            and self.priority1 == other.priority1
            and self.clock_class == other.clock_class
            and self.clock_accuracy == other.clock_accuracy
            and self.variance == other.variance
            and self.priority2 == other.priority2
        )

    def inherited(self) -> AnnounceDataset:
        """The dataset a clock announces after selecting this one as its parent."""
        return AnnounceDataset(
            self.priority1,
            self.clock_class,
            self.clock_accuracy,
            self.variance,
            self.priority2,
            self.clock_identity,
            self.steps_removed + 1,
        )


@dataclass(slots=True)
class PtpMessage:
    msg_type: MessageType
    source: PortIdentity
    sequence_id: int = 0
    domain_number: int = DEFAULT_DOMAIN
    correction: int = 0  # ns * 2**16
    origin_timestamp: int | None = None  # ns
    receive_timestamp: int | None = None  # ns, DelayResp / PdelayResp
    requesting_port: PortIdentity | None = None
    log_message_interval: int = 0
    two_step: bool = False
    announce: AnnounceDataset | None = None
    utc_offset: int = 0
    time_source: int = 0

    @property
    def is_event(self) -> bool:
        return self.msg_type in EVENT_MESSAGES

    @property
    def correction_ns(self) -> float:
        return self.correction / CORRECTION_SCALE
