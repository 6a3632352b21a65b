"""Golden wire vectors, assembled field by field without the codec.

Each entry pairs a message record with bytes written out from the common
header layout: type | version | length | domain | reserved | flags |
correction | reserved(4) | source identity(8) | source port | sequence |
control | log interval, followed by the type body.
"""

from ptpsim.proto import AnnounceDataset, MessageType, PortIdentity, PtpMessage

SRC_ID = bytes.fromhex("0011223344556677")
SRC = PortIdentity(SRC_ID, 1)
REQ = PortIdentity(bytes.fromhex("8899aabbccddeeff"), 2)

# 1,500,000,000.25 s is not representable; use 1,700,000,000 s + 123,456,789 ns
TS = 1_700_000_000 * 1_000_000_000 + 123_456_789
TS_BYTES = bytes.fromhex("0000" "6553f100") + bytes.fromhex("075bcd15")  # 48-bit s, 32-bit ns
TS2 = 42 * 1_000_000_000 + 999_999_999
TS2_BYTES = bytes.fromhex("00000000002a") + bytes.fromhex("3b9ac9ff")


def header(mtype: int, length: int, flags: bytes, correction: bytes, control: int, log: int) -> bytes:
    return (
        bytes([mtype, 0x02])
        + length.to_bytes(2, "big")
        + bytes([24, 0])
        + flags
        + correction
        + bytes(4)
        + SRC_ID
        + (1).to_bytes(2, "big")
        + (0x1234).to_bytes(2, "big")
        + bytes([control, log & 0xFF])
    )


ONE_NS = bytes.fromhex("0000000000010000")
ZERO64 = bytes(8)
NO_FLAGS = b"\x00\x00"
TWO_STEP = b"\x02\x00"
REQ_BYTES = bytes.fromhex("8899aabbccddeeff") + b"\x00\x02"

VECTORS = {
    "sync": (
        PtpMessage(MessageType.SYNC, SRC, 0x1234, 24, 1 << 16, origin_timestamp=TS, log_message_interval=-4),
        header(0x00, 44, NO_FLAGS, ONE_NS, 0, -4) + TS_BYTES,
    ),
    "delay_req": (
        PtpMessage(MessageType.DELAY_REQ, SRC, 0x1234, 24, 0, origin_timestamp=TS2, log_message_interval=0x7F),
        header(0x01, 44, NO_FLAGS, ZERO64, 1, 0x7F) + TS2_BYTES,
    ),
    "pdelay_req": (
        PtpMessage(MessageType.PDELAY_REQ, SRC, 0x1234, 24, 0, origin_timestamp=TS2, log_message_interval=0x7F),
        header(0x02, 54, NO_FLAGS, ZERO64, 5, 0x7F) + TS2_BYTES + bytes(10),
    ),
    "pdelay_resp": (
        PtpMessage(MessageType.PDELAY_RESP, SRC, 0x1234, 24, 0, receive_timestamp=TS, requesting_port=REQ,
                   two_step=True, log_message_interval=0x7F),
        header(0x03, 54, TWO_STEP, ZERO64, 5, 0x7F) + TS_BYTES + REQ_BYTES,
    ),
    "follow_up": (
        PtpMessage(MessageType.FOLLOW_UP, SRC, 0x1234, 24, 0, origin_timestamp=TS, log_message_interval=-4),
        header(0x08, 44, NO_FLAGS, ZERO64, 2, -4) + TS_BYTES,
    ),
    "delay_resp": (
        PtpMessage(MessageType.DELAY_RESP, SRC, 0x1234, 24, 1 << 16, receive_timestamp=TS2, requesting_port=REQ,
                   log_message_interval=-4),
        header(0x09, 54, NO_FLAGS, ONE_NS, 3, -4) + TS2_BYTES + REQ_BYTES,
    ),
    "pdelay_resp_follow_up": (
        PtpMessage(MessageType.PDELAY_RESP_FOLLOW_UP, SRC, 0x1234, 24, 0, origin_timestamp=TS, requesting_port=REQ,
                   log_message_interval=0x7F),
        header(0x0A, 54, NO_FLAGS, ZERO64, 5, 0x7F) + TS_BYTES + REQ_BYTES,
    ),
    "announce": (
        PtpMessage(
            MessageType.ANNOUNCE, SRC, 0x1234, 24, 0, origin_timestamp=0, log_message_interval=-3,
            announce=AnnounceDataset(128, 6, 0x21, 0x4E5D, 128, bytes.fromhex("0000000000000001"), 0),
            utc_offset=37, time_source=0x20,
        ),
        header(0x0B, 64, NO_FLAGS, ZERO64, 5, -3)
        + bytes(10)
        + (37).to_bytes(2, "big")
        + b"\x00"
        + bytes([128, 6, 0x21])
        + bytes.fromhex("4e5d")
        + bytes([128])
        + bytes.fromhex("0000000000000001")
        + b"\x00\x00"
        + b"\x20",
    ),
}

# the all-zero announce: every field zero except the domain
ZERO_ANNOUNCE = PtpMessage(
    MessageType.ANNOUNCE,
    PortIdentity(bytes(8), 0),
    0,
    24,
    0,
    origin_timestamp=0,
    log_message_interval=0,
    announce=AnnounceDataset(0, 0, 0, 0, 0, bytes(8), 0),
    utc_offset=0,
    time_source=0,
)
ZERO_ANNOUNCE_BYTES = bytes([0x0B, 0x02, 0x00, 0x40, 24]) + bytes(27) + b"\x05\x00" + bytes(30)
