"""Bit-exact PTPv2 wire codec.

Layout follows the IEEE 1588 common header (34 bytes) and the standard
per-type bodies. All integers are big-endian; timestamps are 48-bit seconds
followed by 32-bit nanoseconds; the correction field is a signed 64-bit count
of ns * 2**16.
"""

from __future__ import annotations

import struct

from .messages import (
    PTP_VERSION,
    AnnounceDataset,
    MessageType,
    PortIdentity,
    PtpMessage,
)

HEADER_LEN = 34
TIMESTAMP_LEN = 10
PORT_ID_LEN = 10
TWO_STEP_FLAG = 0x0200

_HEADER = struct.Struct(">BBHBBHq4s8sHHBb")
_PORT_ID = struct.Struct(">8sH")
_ANNOUNCE_TAIL = struct.Struct(">hBBBBHB8sHB")

_BODY_LEN = {
    MessageType.SYNC: 10,
    MessageType.DELAY_REQ: 10,
    MessageType.FOLLOW_UP: 10,
    MessageType.DELAY_RESP: 20,
    MessageType.PDELAY_REQ: 20,
    MessageType.PDELAY_RESP: 20,
    MessageType.PDELAY_RESP_FOLLOW_UP: 20,
    MessageType.ANNOUNCE: 30,
    MessageType.SIGNALING: 10,
    MessageType.MANAGEMENT: 14,
}

_CONTROL = {
    MessageType.SYNC: 0,
    MessageType.DELAY_REQ: 1,
    MessageType.FOLLOW_UP: 2,
    MessageType.DELAY_RESP: 3,
    MessageType.MANAGEMENT: 4,
}

# types whose body starts with a timestamp stored in origin_timestamp
_ORIGIN_TS = frozenset(
    {
        MessageType.SYNC,
        MessageType.DELAY_REQ,
        MessageType.FOLLOW_UP,
        MessageType.PDELAY_REQ,
        MessageType.PDELAY_RESP_FOLLOW_UP,
        MessageType.ANNOUNCE,
    }
)
_RECEIVE_TS = frozenset({MessageType.DELAY_RESP, MessageType.PDELAY_RESP})
_REQUESTING = frozenset(
    {
        MessageType.DELAY_RESP,
        MessageType.PDELAY_RESP,
        MessageType.PDELAY_RESP_FOLLOW_UP,
        MessageType.SIGNALING,
        MessageType.MANAGEMENT,
    }
)


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    """Malformed buffer; ``offset`` is the byte position of the problem."""

    def __init__(self, reason: str, offset: int) -> None:
        super().__init__(f"{reason} (at byte offset {offset})")
        self.reason = reason
        self.offset = offset


def message_length(msg_type: MessageType) -> int:
    return HEADER_LEN + _BODY_LEN[msg_type]


def _check(name: str, value: int, lo: int, hi: int) -> None:
    if not lo <= value <= hi:
        raise EncodeError(f"{name}={value} outside [{lo}, {hi}]")


def encode_timestamp(ns: int) -> bytes:
    if ns < 0:
        raise EncodeError(f"negative timestamp {ns} ns")
    sec, nsec = divmod(ns, 1_000_000_000)
    if sec >= 1 << 48:
        raise EncodeError(f"timestamp seconds {sec} exceed 48 bits")
    return sec.to_bytes(6, "big") + nsec.to_bytes(4, "big")


def decode_timestamp(buf: bytes, offset: int) -> int:
    sec = int.from_bytes(buf[offset : offset + 6], "big")
    nsec = int.from_bytes(buf[offset + 6 : offset + 10], "big")
    if nsec >= 1_000_000_000:
        raise DecodeError(f"nanoseconds field {nsec} >= 1e9", offset + 6)
    return sec * 1_000_000_000 + nsec


def _encode_port(p: PortIdentity | None) -> bytes:
    p = p or PortIdentity(bytes(8), 0)
    return _PORT_ID.pack(p.clock_identity, p.port_number)


def encode(msg: PtpMessage) -> bytes:
    """Serialize ``msg`` to its wire form."""
    t = MessageType(msg.msg_type)
    _check("domain_number", msg.domain_number, 0, 255)
    _check("sequence_id", msg.sequence_id, 0, 0xFFFF)
    _check("log_message_interval", msg.log_message_interval, -128, 127)
    _check("correction", msg.correction, -(1 << 63), (1 << 63) - 1)
    flags = TWO_STEP_FLAG if msg.two_step else 0
    header = _HEADER.pack(
        t.value & 0x0F,
        PTP_VERSION,
        message_length(t),
        msg.domain_number,
        0,
        flags,
        msg.correction,
        bytes(4),
        msg.source.clock_identity,
        msg.source.port_number,
        msg.sequence_id,
        _CONTROL.get(t, 5),
        msg.log_message_interval,
    )
    body = bytearray()
    if t in _ORIGIN_TS:
        body += encode_timestamp(msg.origin_timestamp or 0)
    if t in _RECEIVE_TS:
        body += encode_timestamp(msg.receive_timestamp or 0)
    if t is MessageType.PDELAY_REQ:
        body += bytes(10)
    elif t is MessageType.ANNOUNCE:
        ds = msg.announce or AnnounceDataset(0, 0, 0, 0, 0, bytes(8), 0)
        _check("utc_offset", msg.utc_offset, -(1 << 15), (1 << 15) - 1)
        for name in ("priority1", "clock_class", "clock_accuracy", "priority2"):
            _check(name, getattr(ds, name), 0, 255)
        _check("variance", ds.variance, 0, 0xFFFF)
        _check("steps_removed", ds.steps_removed, 0, 0xFFFF)
        _check("time_source", msg.time_source, 0, 255)
        if len(ds.clock_identity) != 8:
            raise EncodeError("grandmaster identity must be 8 bytes")
        body += _ANNOUNCE_TAIL.pack(
            msg.utc_offset,
            0,
            ds.priority1,
            ds.clock_class,
            ds.clock_accuracy,
            ds.variance,
            ds.priority2,
            ds.clock_identity,
            ds.steps_removed,
            msg.time_source,
        )
    if t in _REQUESTING:
        body += _encode_port(msg.requesting_port)
    if t is MessageType.MANAGEMENT:
        body += bytes(4)
    return header + bytes(body)


def decode(buf: bytes) -> PtpMessage:
    """Parse one message; raises :class:`DecodeError` on malformed input."""
    buf = bytes(buf)
    if len(buf) < HEADER_LEN:
        raise DecodeError(f"truncated header: {len(buf)} of {HEADER_LEN} bytes", len(buf))
    (
        type_byte,
        version_byte,
        length,
        domain,
        _reserved,
        flags,
        correction,
        _reserved2,
        clock_id,
        port_no,
        seq,
        _control,
        log_interval,
    ) = _HEADER.unpack_from(buf, 0)
    if version_byte & 0x0F != PTP_VERSION:
        raise DecodeError(f"unsupported PTP version {version_byte & 0x0F}", 1)
    try:
        t = MessageType(type_byte & 0x0F)
    except ValueError:
        raise DecodeError(f"unknown message type 0x{type_byte & 0x0F:x}", 0) from None
    expected = message_length(t)
    if length != expected:
        raise DecodeError(f"messageLength {length} != {expected} for {t.name}", 2)
    if len(buf) < expected:
        raise DecodeError(f"truncated {t.name} body: {len(buf)} of {expected} bytes", len(buf))

    msg = PtpMessage(
        msg_type=t,
        source=PortIdentity(clock_id, port_no),
        sequence_id=seq,
        domain_number=domain,
        correction=correction,
        log_message_interval=log_interval,
        two_step=bool(flags & TWO_STEP_FLAG),
    )
    off = HEADER_LEN
    if t in _ORIGIN_TS:
        msg.origin_timestamp = decode_timestamp(buf, off)
        off += TIMESTAMP_LEN
    if t in _RECEIVE_TS:
        msg.receive_timestamp = decode_timestamp(buf, off)
        off += TIMESTAMP_LEN
    if t is MessageType.PDELAY_REQ:
        off += 10
    elif t is MessageType.ANNOUNCE:
        (utc, _r, p1, cls, acc, var, p2, gm, steps, src) = _ANNOUNCE_TAIL.unpack_from(buf, off)
        msg.utc_offset = utc
        msg.time_source = src
        msg.announce = AnnounceDataset(p1, cls, acc, var, p2, gm, steps)
        off += _ANNOUNCE_TAIL.size
    if t in _REQUESTING:
        cid, pn = _PORT_ID.unpack_from(buf, off)
        msg.requesting_port = PortIdentity(cid, pn)
        off += PORT_ID_LEN
    return msg
