"""Message envelopes and payload schemas for every link in the system.

One schema set serves both carriers (TCP stream framing and the browser
socket). Payloads are plain dicts on the wire; helpers here convert the
core value types to and from their wire shape and check required fields.
Unknown payload fields pass through untouched so old peers tolerate new
senders.
"""

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

from ..core import (
    ControlInstruction,
    Frame,
    Pose,
    VehicleKind,
    VehicleRole,
    VehicleSpec,
    VehicleState,
)
from ..errors import SchemaViolation


class MsgType(str, enum.Enum):
    REGISTER = "Register"
    REGISTER_ACK = "RegisterAck"
    STATE_UPDATE = "StateUpdate"
    STATE_POOL = "StatePool"
    INSTRUCTION = "Instruction"
    INSTRUCTION_DISPATCH = "InstructionDispatch"
    ADMIN_COMMAND = "AdminCommand"
    ADMIN_ACK = "AdminAck"
    HEARTBEAT = "Heartbeat"
    ERROR = "Error"


class EntityKind(str, enum.Enum):
    VEHICLE_AGENT = "VehicleAgent"
    CONTROLLER = "Controller"
    DRIVER_STATION = "DriverStation"
    OBSERVER = "Observer"
    ADMIN = "Admin"


@dataclass(frozen=True)
class MessageEnvelope:
    msg_type: MsgType
    seq: int
    timestamp: float  # sender clock, seconds
    payload: dict[str, Any] = field(default_factory=dict)


# Shallow required keys per message type; nested shapes are checked by the
# dedicated parsers below.
_REQUIRED: dict[MsgType, tuple[str, ...]] = {
    MsgType.REGISTER: ("entity_kind", "entity_id"),
    MsgType.REGISTER_ACK: ("accepted", "entity_id"),
    MsgType.STATE_UPDATE: ("state",),
    MsgType.STATE_POOL: ("pool_timestamp", "tick", "states"),
    MsgType.INSTRUCTION: ("instruction",),
    MsgType.INSTRUCTION_DISPATCH: ("instruction",),
    MsgType.ADMIN_COMMAND: ("command",),
    MsgType.ADMIN_ACK: ("ok",),
    MsgType.HEARTBEAT: ("kind",),
    MsgType.ERROR: ("code",),
}

_STATE_REQUIRED = ("vehicle_id", "frame", "x", "y", "heading", "speed", "timestamp", "seq")
_INSTRUCTION_REQUIRED = ("target_vehicle_id", "desired_speed", "source_id",
                         "source_frame", "timestamp", "seq")


def validate_payload(msg_type: MsgType, payload: Any) -> None:
    """Raise SchemaViolation unless payload has the required shape."""
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{msg_type.value} payload must be an object")
    missing = [k for k in _REQUIRED[msg_type] if k not in payload]
    if missing:
        raise SchemaViolation(f"{msg_type.value} payload missing {missing}")

    if msg_type == MsgType.REGISTER:
        kind = payload["entity_kind"]
        if kind not in EntityKind._value2member_map_:
            raise SchemaViolation(f"unknown entity_kind {kind!r}")
        if kind == EntityKind.VEHICLE_AGENT.value and "frame" not in payload:
            raise SchemaViolation("VehicleAgent registration needs a frame")
    elif msg_type == MsgType.STATE_UPDATE:
        _check_keys(payload["state"], _STATE_REQUIRED, "state")
    elif msg_type == MsgType.STATE_POOL:
        if not isinstance(payload["states"], list):
            raise SchemaViolation("StatePool states must be a list")
        for entry in payload["states"]:
            _check_keys(entry, _STATE_REQUIRED, "state")
    elif msg_type in (MsgType.INSTRUCTION, MsgType.INSTRUCTION_DISPATCH):
        _check_keys(payload["instruction"], _INSTRUCTION_REQUIRED, "instruction")
    elif msg_type == MsgType.HEARTBEAT:
        if payload["kind"] not in ("ping", "pong"):
            raise SchemaViolation(f"heartbeat kind must be ping or pong, got {payload['kind']!r}")
        if payload["kind"] == "pong" and "echo_timestamp" not in payload:
            raise SchemaViolation("heartbeat pong must echo the ping timestamp")


def _check_keys(obj: Any, required: tuple[str, ...], what: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaViolation(f"{what} must be an object")
    missing = [k for k in required if k not in obj]
    if missing:
        raise SchemaViolation(f"{what} missing {missing}")


def _frame(value: str) -> Frame:
    try:
        return Frame(value)
    except ValueError:
        raise SchemaViolation(f"unknown frame {value!r}") from None


# Wire shape of the core value types

def state_to_wire(state: VehicleState) -> dict[str, Any]:
    return {
        "vehicle_id": state.vehicle_id,
        "frame": state.frame.value,
        "x": state.pose.x,
        "y": state.pose.y,
        "heading": state.pose.heading,
        "speed": state.speed,
        "acceleration": state.acceleration,
        "front_wheel_angle": state.front_wheel_angle,
        "arc_position": state.arc_position,
        "timestamp": state.timestamp,
        "seq": state.seq,
    }


def state_from_wire(data: dict[str, Any]) -> VehicleState:
    _check_keys(data, _STATE_REQUIRED, "state")
    try:
        return VehicleState(
            vehicle_id=data["vehicle_id"],
            frame=_frame(data["frame"]),
            pose=Pose(float(data["x"]), float(data["y"]), float(data["heading"])),
            speed=float(data["speed"]),
            acceleration=float(data.get("acceleration", 0.0)),
            front_wheel_angle=float(data.get("front_wheel_angle", 0.0)),
            arc_position=None if data.get("arc_position") is None else float(data["arc_position"]),
            timestamp=float(data["timestamp"]),
            seq=int(data["seq"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad state field: {exc}") from None


_SPEC_REQUIRED = ("vehicle_id", "kind", "role")


def spec_to_wire(spec: VehicleSpec) -> dict[str, Any]:
    return {
        "vehicle_id": spec.vehicle_id,
        "kind": spec.kind.value,
        "role": spec.role.value,
        "body_length": spec.body_length,
        "wheelbase": spec.wheelbase,
        "max_speed": spec.max_speed,
        "max_accel": spec.max_accel,
        "max_decel": spec.max_decel,
        "max_front_wheel_angle": spec.max_front_wheel_angle,
        "actuator_tau": spec.actuator_tau,
    }


def spec_from_wire(data: dict[str, Any]) -> VehicleSpec:
    _check_keys(data, _SPEC_REQUIRED, "vehicle spec")
    defaults = VehicleSpec("_", VehicleKind.VIRTUAL, VehicleRole.CAV)
    try:
        return VehicleSpec(
            vehicle_id=data["vehicle_id"],
            kind=VehicleKind(data["kind"]),
            role=VehicleRole(data["role"]),
            body_length=float(data.get("body_length", defaults.body_length)),
            wheelbase=float(data.get("wheelbase", defaults.wheelbase)),
            max_speed=float(data.get("max_speed", defaults.max_speed)),
            max_accel=float(data.get("max_accel", defaults.max_accel)),
            max_decel=float(data.get("max_decel", defaults.max_decel)),
            max_front_wheel_angle=float(
                data.get("max_front_wheel_angle", defaults.max_front_wheel_angle)),
            actuator_tau=float(data.get("actuator_tau", defaults.actuator_tau)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad vehicle spec field: {exc}") from None


def instruction_to_wire(instr: ControlInstruction) -> dict[str, Any]:
    return {
        "target_vehicle_id": instr.target_vehicle_id,
        "desired_speed": instr.desired_speed,
        "desired_front_wheel_angle": instr.desired_front_wheel_angle,
        "source_id": instr.source_id,
        "source_frame": instr.source_frame.value,
        "timestamp": instr.timestamp,
        "seq": instr.seq,
    }


def instruction_from_wire(data: dict[str, Any]) -> ControlInstruction:
    _check_keys(data, _INSTRUCTION_REQUIRED, "instruction")
    try:
        return ControlInstruction(
            target_vehicle_id=data["target_vehicle_id"],
            desired_speed=float(data["desired_speed"]),
            desired_front_wheel_angle=float(data.get("desired_front_wheel_angle", 0.0)),
            source_id=data["source_id"],
            source_frame=_frame(data["source_frame"]),
            timestamp=float(data["timestamp"]),
            seq=int(data["seq"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad instruction field: {exc}") from None


# Envelope builders for the common flows

def make_register(seq: int, timestamp: float, entity_kind: EntityKind, entity_id: str,
                  frame: Optional[Frame] = None,
                  capabilities: Optional[list[str]] = None) -> MessageEnvelope:
    payload: dict[str, Any] = {
        "entity_kind": entity_kind.value,
        "entity_id": entity_id,
        "capabilities": capabilities or [],
    }
    if frame is not None:
        payload["frame"] = frame.value
    return MessageEnvelope(MsgType.REGISTER, seq, timestamp, payload)


def make_state_update(seq: int, timestamp: float, state: VehicleState) -> MessageEnvelope:
    return MessageEnvelope(MsgType.STATE_UPDATE, seq, timestamp, {"state": state_to_wire(state)})


def make_state_pool(seq: int, timestamp: float, tick: int,
                    states: list[VehicleState]) -> MessageEnvelope:
    return MessageEnvelope(
        MsgType.STATE_POOL, seq, timestamp,
        {"pool_timestamp": timestamp, "tick": tick,
         "states": [state_to_wire(s) for s in states]},
    )


def make_instruction(seq: int, timestamp: float, instr: ControlInstruction,
                     dispatch: bool = False) -> MessageEnvelope:
    msg_type = MsgType.INSTRUCTION_DISPATCH if dispatch else MsgType.INSTRUCTION
    return MessageEnvelope(msg_type, seq, timestamp, {"instruction": instruction_to_wire(instr)})


def make_heartbeat_ping(seq: int, timestamp: float) -> MessageEnvelope:
    return MessageEnvelope(MsgType.HEARTBEAT, seq, timestamp, {"kind": "ping"})


def make_heartbeat_pong(seq: int, timestamp: float, echo_timestamp: float) -> MessageEnvelope:
    return MessageEnvelope(MsgType.HEARTBEAT, seq, timestamp,
                           {"kind": "pong", "echo_timestamp": echo_timestamp})


def make_error(seq: int, timestamp: float, code: str, detail: str = "") -> MessageEnvelope:
    return MessageEnvelope(MsgType.ERROR, seq, timestamp, {"code": code, "detail": detail})
