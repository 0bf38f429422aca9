"""Framing and canonical JSON codec.

A frame is a 4-byte big-endian body length followed by the body: one JSON
object with sorted keys, compact separators, UTF-8. Canonical form makes
encode(decode(frame)) reproduce the frame byte for byte, which the hub
relies on when logging and replaying traffic.
"""

import json
import struct
from typing import Any, Optional

from ..errors import MalformedFrame, OversizeFrame, SchemaViolation
from .messages import MessageEnvelope, MsgType, validate_payload

MAX_FRAME_BYTES = 1 << 20  # 1 MiB body cap
_PREFIX = struct.Struct(">I")


def _canonical_body(obj: dict[str, Any]) -> bytes:
    try:
        text = json.dumps(obj, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False, allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"payload not JSON-serializable: {exc}") from None
    return text.encode("utf-8")


def encode(envelope: MessageEnvelope) -> bytes:
    """Serialize one envelope to a length-prefixed canonical frame."""
    if not isinstance(envelope.seq, int) or isinstance(envelope.seq, bool) or envelope.seq < 0:
        raise SchemaViolation(f"seq must be a non-negative int, got {envelope.seq!r}")
    validate_payload(envelope.msg_type, envelope.payload)
    body = _canonical_body({
        "msg_type": envelope.msg_type.value,
        "payload": envelope.payload,
        "seq": envelope.seq,
        "timestamp": envelope.timestamp,
    })
    if len(body) > MAX_FRAME_BYTES:
        raise OversizeFrame(f"frame body {len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return _PREFIX.pack(len(body)) + body


def _reject_constant(name: str):
    raise MalformedFrame(f"non-finite JSON constant {name!r}")


def decode(data: bytes) -> tuple[Optional[MessageEnvelope], int]:
    """Decode the first complete frame in data.

    Returns (envelope, bytes_consumed); (None, 0) when the data holds no
    complete frame yet. Raises on frames that can never become valid.
    """
    if len(data) < _PREFIX.size:
        return None, 0
    (length,) = _PREFIX.unpack_from(data)
    if length > MAX_FRAME_BYTES:
        raise OversizeFrame(f"declared frame length {length} exceeds {MAX_FRAME_BYTES}")
    end = _PREFIX.size + length
    if len(data) < end:
        return None, 0
    body = data[_PREFIX.size:end]
    try:
        obj = json.loads(body.decode("utf-8"), parse_constant=_reject_constant)
    except UnicodeDecodeError as exc:
        raise MalformedFrame(f"body is not valid UTF-8: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"body is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedFrame("frame body must be a JSON object")

    for key in ("msg_type", "seq", "timestamp", "payload"):
        if key not in obj:
            raise SchemaViolation(f"envelope missing {key!r}")
    raw_type = obj["msg_type"]
    try:
        msg_type = MsgType(raw_type)
    except ValueError:
        raise SchemaViolation(f"unknown msg_type {raw_type!r}") from None
    seq = obj["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise SchemaViolation(f"seq must be a non-negative int, got {seq!r}")
    timestamp = obj["timestamp"]
    if not isinstance(timestamp, (int, float)) or isinstance(timestamp, bool):
        raise SchemaViolation(f"timestamp must be a number, got {timestamp!r}")
    validate_payload(msg_type, obj["payload"])
    return MessageEnvelope(msg_type, seq, float(timestamp), obj["payload"]), end


class StreamDecoder:
    """Reassembles envelopes from arbitrarily chunked stream data.

    Single-owner: one decoder per connection. Feeding garbage raises and
    poisons the decoder, since a byte stream cannot resynchronize after a
    framing error.
    """

    def __init__(self):
        self._buf = bytearray()
        self._dead = False

    def feed(self, data: bytes) -> list[MessageEnvelope]:
        if self._dead:
            raise MalformedFrame("decoder poisoned by an earlier framing error")
        self._buf.extend(data)
        out: list[MessageEnvelope] = []
        while True:
            try:
                envelope, consumed = decode(bytes(self._buf))
            except Exception:
                self._dead = True
                raise
            if envelope is None:
                return out
            del self._buf[:consumed]
            out.append(envelope)

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
