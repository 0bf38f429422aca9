"""Wire protocol: envelopes, payload schemas, framing codec."""

from .codec import MAX_FRAME_BYTES, StreamDecoder, decode, encode
from .messages import (
    EntityKind,
    MessageEnvelope,
    MsgType,
    instruction_from_wire,
    instruction_to_wire,
    make_error,
    make_heartbeat_ping,
    make_heartbeat_pong,
    make_instruction,
    make_register,
    make_state_pool,
    make_state_update,
    spec_from_wire,
    spec_to_wire,
    state_from_wire,
    state_to_wire,
    validate_payload,
)

__all__ = [
    "MAX_FRAME_BYTES",
    "StreamDecoder",
    "decode",
    "encode",
    "EntityKind",
    "MessageEnvelope",
    "MsgType",
    "instruction_from_wire",
    "instruction_to_wire",
    "make_error",
    "make_heartbeat_ping",
    "make_heartbeat_pong",
    "make_instruction",
    "make_register",
    "make_state_pool",
    "make_state_update",
    "spec_from_wire",
    "spec_to_wire",
    "state_from_wire",
    "state_to_wire",
    "validate_payload",
]
