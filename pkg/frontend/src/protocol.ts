// Wire protocol for the hub's browser socket: each WebSocket text frame
// carries one JSON envelope {msg_type, payload, seq, timestamp}. Encoding is
// canonical (sorted keys, compact separators, finite numbers only) so a
// round-trip through this module is stable.

export type MsgType =
  | "Register"
  | "RegisterAck"
  | "StateUpdate"
  | "StatePool"
  | "Instruction"
  | "InstructionDispatch"
  | "AdminCommand"
  | "AdminAck"
  | "Heartbeat"
  | "Error";

export type EntityKind =
  | "VehicleAgent"
  | "Controller"
  | "DriverStation"
  | "Observer"
  | "Admin";

export type FrameName = "Physical" | "Virtual" | "InnoLike" | "Unified";

export const MSG_TYPES: readonly MsgType[] = [
  "Register",
  "RegisterAck",
  "StateUpdate",
  "StatePool",
  "Instruction",
  "InstructionDispatch",
  "AdminCommand",
  "AdminAck",
  "Heartbeat",
  "Error",
];

export const ENTITY_KINDS: readonly EntityKind[] = [
  "VehicleAgent",
  "Controller",
  "DriverStation",
  "Observer",
  "Admin",
];

export const FRAME_NAMES: readonly FrameName[] = [
  "Physical",
  "Virtual",
  "InnoLike",
  "Unified",
];

export const MAX_FRAME_BYTES = 1 << 20;

export type Payload = Record<string, unknown>;

export interface Envelope {
  msgType: MsgType;
  seq: number;
  timestamp: number;
  payload: Payload;
}

export class ProtocolError extends Error {}

const REQUIRED: Record<MsgType, readonly string[]> = {
  Register: ["entity_kind", "entity_id"],
  RegisterAck: ["accepted", "entity_id"],
  StateUpdate: ["state"],
  StatePool: ["pool_timestamp", "tick", "states"],
  Instruction: ["instruction"],
  InstructionDispatch: ["instruction"],
  AdminCommand: ["command"],
  AdminAck: ["ok"],
  Heartbeat: ["kind"],
  Error: ["code"],
};

export const STATE_REQUIRED: readonly string[] = [
  "vehicle_id",
  "frame",
  "x",
  "y",
  "heading",
  "speed",
  "timestamp",
  "seq",
];

export const INSTRUCTION_REQUIRED: readonly string[] = [
  "target_vehicle_id",
  "desired_speed",
  "source_id",
  "source_frame",
  "timestamp",
  "seq",
];

function isObject(value: unknown): value is Payload {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function checkKeys(obj: unknown, required: readonly string[], what: string): void {
  if (!isObject(obj)) {
    throw new ProtocolError(`${what} must be an object`);
  }
  const missing = required.filter((k) => !(k in obj));
  if (missing.length > 0) {
    throw new ProtocolError(`${what} missing [${missing.join(", ")}]`);
  }
}

export function validatePayload(msgType: MsgType, payload: unknown): void {
  if (!isObject(payload)) {
    throw new ProtocolError(`${msgType} payload must be an object`);
  }
  checkKeys(payload, REQUIRED[msgType], `${msgType} payload`);

  if (msgType === "Register") {
    const kind = payload["entity_kind"];
    if (!ENTITY_KINDS.includes(kind as EntityKind)) {
      throw new ProtocolError(`unknown entity_kind ${JSON.stringify(kind)}`);
    }
    if (kind === "VehicleAgent" && !("frame" in payload)) {
      throw new ProtocolError("VehicleAgent registration needs a frame");
    }
  } else if (msgType === "StateUpdate") {
    checkKeys(payload["state"], STATE_REQUIRED, "state");
  } else if (msgType === "StatePool") {
    const states = payload["states"];
    if (!Array.isArray(states)) {
      throw new ProtocolError("StatePool states must be a list");
    }
    for (const entry of states) {
      checkKeys(entry, STATE_REQUIRED, "state");
    }
  } else if (msgType === "Instruction" || msgType === "InstructionDispatch") {
    checkKeys(payload["instruction"], INSTRUCTION_REQUIRED, "instruction");
  } else if (msgType === "Heartbeat") {
    const kind = payload["kind"];
    if (kind !== "ping" && kind !== "pong") {
      throw new ProtocolError(`heartbeat kind must be ping or pong, got ${JSON.stringify(kind)}`);
    }
    if (kind === "pong" && !("echo_timestamp" in payload)) {
      throw new ProtocolError("heartbeat pong must echo the ping timestamp");
    }
  }
}

function canonicalJson(value: unknown, where: string): string {
  if (value === null) {
    return "null";
  }
  switch (typeof value) {
    case "boolean":
      return value ? "true" : "false";
    case "number":
      if (!Number.isFinite(value)) {
        throw new ProtocolError(`non-finite number at ${where}`);
      }
      return JSON.stringify(value);
    case "string":
      return JSON.stringify(value);
    case "object": {
      if (Array.isArray(value)) {
        const items = value.map((v, i) => canonicalJson(v, `${where}[${i}]`));
        return `[${items.join(",")}]`;
      }
      const obj = value as Payload;
      const keys = Object.keys(obj)
        .filter((k) => obj[k] !== undefined)
        .sort();
      const parts = keys.map(
        (k) => `${JSON.stringify(k)}:${canonicalJson(obj[k], `${where}.${k}`)}`,
      );
      return `{${parts.join(",")}}`;
    }
    default:
      throw new ProtocolError(`value at ${where} is not JSON-serializable`);
  }
}

export function encodeEnvelope(env: Envelope): string {
  if (!Number.isInteger(env.seq) || env.seq < 0) {
    throw new ProtocolError(`seq must be a non-negative int, got ${env.seq}`);
  }
  if (typeof env.timestamp !== "number" || !Number.isFinite(env.timestamp)) {
    throw new ProtocolError(`timestamp must be a finite number, got ${env.timestamp}`);
  }
  validatePayload(env.msgType, env.payload);
  const text = canonicalJson(
    {
      msg_type: env.msgType,
      payload: env.payload,
      seq: env.seq,
      timestamp: env.timestamp,
    },
    "envelope",
  );
  if (new TextEncoder().encode(text).length > MAX_FRAME_BYTES) {
    throw new ProtocolError(`frame body exceeds ${MAX_FRAME_BYTES} bytes`);
  }
  return text;
}

export function decodeEnvelope(text: string): Envelope {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (exc) {
    throw new ProtocolError(`body is not valid JSON: ${exc}`);
  }
  if (!isObject(obj)) {
    throw new ProtocolError("frame body must be a JSON object");
  }
  for (const key of ["msg_type", "seq", "timestamp", "payload"]) {
    if (!(key in obj)) {
      throw new ProtocolError(`envelope missing ${JSON.stringify(key)}`);
    }
  }
  const rawType = obj["msg_type"];
  if (!MSG_TYPES.includes(rawType as MsgType)) {
    throw new ProtocolError(`unknown msg_type ${JSON.stringify(rawType)}`);
  }
  const msgType = rawType as MsgType;
  const seq = obj["seq"];
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
    throw new ProtocolError(`seq must be a non-negative int, got ${JSON.stringify(seq)}`);
  }
  const timestamp = obj["timestamp"];
  if (typeof timestamp !== "number") {
    throw new ProtocolError(`timestamp must be a number, got ${JSON.stringify(timestamp)}`);
  }
  validatePayload(msgType, obj["payload"]);
  return { msgType, seq, timestamp, payload: obj["payload"] as Payload };
}

// Typed views of the value objects that cross the wire.

export interface VehicleState {
  vehicleId: string;
  frame: FrameName;
  x: number;
  y: number;
  heading: number;
  speed: number;
  acceleration: number;
  frontWheelAngle: number;
  arcPosition: number | null;
  timestamp: number;
  seq: number;
}

export interface WireInstruction {
  target_vehicle_id: string;
  desired_speed: number;
  desired_front_wheel_angle: number;
  source_id: string;
  source_frame: FrameName;
  timestamp: number;
  seq: number;
}

export interface PoolFrame {
  poolTimestamp: number;
  tick: number;
  states: VehicleState[];
}

function num(obj: Payload, key: string, fallback?: number): number {
  const raw = key in obj && obj[key] !== undefined ? obj[key] : fallback;
  if (typeof raw !== "number" || !Number.isFinite(raw)) {
    throw new ProtocolError(`bad state field: ${key} must be a finite number`);
  }
  return raw;
}

function str(obj: Payload, key: string): string {
  const raw = obj[key];
  if (typeof raw !== "string" || raw.length === 0) {
    throw new ProtocolError(`bad state field: ${key} must be a non-empty string`);
  }
  return raw;
}

export function stateFromWire(data: unknown): VehicleState {
  checkKeys(data, STATE_REQUIRED, "state");
  const obj = data as Payload;
  const frame = obj["frame"];
  if (!FRAME_NAMES.includes(frame as FrameName)) {
    throw new ProtocolError(`unknown frame ${JSON.stringify(frame)}`);
  }
  const seq = obj["seq"];
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
    throw new ProtocolError(`bad state field: seq must be a non-negative int`);
  }
  const arc = obj["arc_position"];
  return {
    vehicleId: str(obj, "vehicle_id"),
    frame: frame as FrameName,
    x: num(obj, "x"),
    y: num(obj, "y"),
    heading: num(obj, "heading"),
    speed: num(obj, "speed"),
    acceleration: num(obj, "acceleration", 0),
    frontWheelAngle: num(obj, "front_wheel_angle", 0),
    arcPosition: arc === null || arc === undefined ? null : num(obj, "arc_position"),
    timestamp: num(obj, "timestamp"),
    seq,
  };
}

export function poolFromPayload(payload: Payload): PoolFrame {
  const states = payload["states"];
  if (!Array.isArray(states)) {
    throw new ProtocolError("StatePool states must be a list");
  }
  return {
    poolTimestamp: num(payload, "pool_timestamp"),
    tick: num(payload, "tick"),
    states: states.map(stateFromWire),
  };
}

// Envelope builders for the station's outbound flows.

export function makeRegister(
  seq: number,
  timestamp: number,
  entityKind: EntityKind,
  entityId: string,
  capabilities: string[] = [],
): Envelope {
  return {
    msgType: "Register",
    seq,
    timestamp,
    payload: { entity_kind: entityKind, entity_id: entityId, capabilities },
  };
}

export function makeInstruction(seq: number, timestamp: number, instruction: WireInstruction): Envelope {
  return {
    msgType: "Instruction",
    seq,
    timestamp,
    payload: { instruction: { ...instruction } },
  };
}

export function makeAdminCommand(seq: number, timestamp: number, command: Payload): Envelope {
  return { msgType: "AdminCommand", seq, timestamp, payload: { ...command } };
}

export function makePong(seq: number, timestamp: number, echoTimestamp: number): Envelope {
  return {
    msgType: "Heartbeat",
    seq,
    timestamp,
    payload: { kind: "pong", echo_timestamp: echoTimestamp },
  };
}
