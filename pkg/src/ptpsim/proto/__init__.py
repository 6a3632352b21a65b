"""PTP message model, wire codec and best-master-clock selection."""

from .bmca import (
    ANNOUNCE_RECEIPT_TIMEOUT,
    BmcaResult,
    Comparison,
    ForeignMaster,
    ForeignMasterTable,
    announce_timeout_ns,
    better_dataset,
    run_bmca,
    update_foreign_masters,
)
from .codec import DecodeError, EncodeError, decode, encode
from .messages import (
    CORRECTION_SCALE,
    DEFAULT_DOMAIN,
    EVENT_MESSAGES,
    GENERAL_MESSAGES,
    AnnounceDataset,
    MessageType,
    PortIdentity,
    PortState,
    PtpMessage,
    clock_identity_from_int,
)

__all__ = [
    "ANNOUNCE_RECEIPT_TIMEOUT",
    "CORRECTION_SCALE",
    "DEFAULT_DOMAIN",
    "EVENT_MESSAGES",
    "GENERAL_MESSAGES",
    "AnnounceDataset",
    "BmcaResult",
    "Comparison",
    "DecodeError",
    "EncodeError",
    "ForeignMaster",
    "ForeignMasterTable",
    "MessageType",
    "PortIdentity",
    "PortState",
    "PtpMessage",
    "announce_timeout_ns",
    "better_dataset",
    "clock_identity_from_int",
    "decode",
    "encode",
    "run_bmca",
    "update_foreign_masters",
]
