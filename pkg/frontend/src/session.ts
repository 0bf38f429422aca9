// Driver session model: holds which vehicle this station controls, maps the
// operator's normalized controls onto wire instructions, and derives the
// predecessor speed prompt from the latest pool frame.

import type { Payload, VehicleState, WireInstruction } from "./protocol.js";
import { arcGap, Track } from "./track.js";

export interface VehicleLimits {
  maxSpeed: number; // m/s
  maxAccel: number; // m/s^2, throttle integration rate at full pedal
  maxDecel: number; // m/s^2, brake integration rate at full pedal
  maxFrontWheelAngle: number; // rad, full steering deflection
}

// Matches the default vehicle envelope the hub clamps against.
export const DEFAULT_LIMITS: VehicleLimits = {
  maxSpeed: 30 / 3.6,
  maxAccel: 2.0,
  maxDecel: 4.0,
  maxFrontWheelAngle: 0.52,
};

export type ViewMode = "TopDown" | "Chase";

export interface ControlSample {
  steering: number; // [-1, 1], positive steers left
  throttle: number; // [0, 1]
  brake: number; // [0, 1]
}

export interface SpeedPrompt {
  vehicleId: string;
  kmh: number;
  text: string;
}

export const DEFAULT_PROMPT_RANGE_M = 50;

export const NOT_MAPPED_HINT = "no vehicle mapped — request one to start driving";

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

export class DriverSession {
  controlledVehicleId: string | null = null;
  steering = 0;
  throttle = 0;
  brake = 0;
  // The speed setpoint the pedals integrate; seeded from the vehicle's
  // current speed when a swap is granted so control hands over smoothly.
  desiredSpeed = 0;
  viewMode: ViewMode = "TopDown";
  hint: string | null = null;
  pendingSwapVehicleId: string | null = null;

  private instructionSeq = 0;

  constructor(
    readonly entityId: string,
    readonly limits: VehicleLimits = DEFAULT_LIMITS,
  ) {}

  setControls(sample: Partial<ControlSample>): void {
    if (sample.steering !== undefined) {
      this.steering = clamp(sample.steering, -1, 1);
    }
    if (sample.throttle !== undefined) {
      this.throttle = clamp(sample.throttle, 0, 1);
    }
    if (sample.brake !== undefined) {
      this.brake = clamp(sample.brake, 0, 1);
    }
  }

  toggleView(): void {
    this.viewMode = this.viewMode === "TopDown" ? "Chase" : "TopDown";
  }

  // Integrate the pedals into the speed setpoint: neutral pedals hold it,
  // full throttle raises it at maxAccel, full brake lowers it at maxDecel,
  // always bounded by [0, maxSpeed].
  advance(dt: number): void {
    const delta = (this.throttle * this.limits.maxAccel - this.brake * this.limits.maxDecel) * dt;
    this.desiredSpeed = clamp(this.desiredSpeed + delta, 0, this.limits.maxSpeed);
  }

  // One wire instruction for the current controls, or null (with an operator
  // hint) while no vehicle is mapped. Steering maps linearly onto the wheel
  // angle range; the instruction seq increases by one per built instruction.
  buildInstruction(timestamp: number): WireInstruction | null {
    if (this.controlledVehicleId === null) {
      this.hint = NOT_MAPPED_HINT;
      return null;
    }
    this.instructionSeq += 1;
    return {
      target_vehicle_id: this.controlledVehicleId,
      desired_speed: this.desiredSpeed,
      desired_front_wheel_angle: this.steering * this.limits.maxFrontWheelAngle,
      source_id: this.entityId,
      source_frame: "Unified",
      timestamp,
      seq: this.instructionSeq,
    };
  }

  // AdminCommand payload asking the hub to point this station's control
  // channels at vehicleId. With force, an existing holder is displaced.
  swapCommand(vehicleId: string, force = false): Payload {
    this.pendingSwapVehicleId = vehicleId;
    const payload: Payload = {
      command: "remap",
      source_id: this.entityId,
      vehicle_id: vehicleId,
      channel: "both",
    };
    if (force) {
      payload["force"] = true;
    }
    return payload;
  }

  // Apply an AdminAck. Returns true when it granted this session's swap:
  // the controlled vehicle and camera target change, and the speed setpoint
  // reseeds from the vehicle's current pool speed. A refusal surfaces the
  // hub's error text verbatim as the operator hint.
  handleAdminAck(payload: Payload, seedSpeed: (vehicleId: string) => number | null): boolean {
    if (payload["command"] !== "remap" || payload["source_id"] !== this.entityId) {
      return false;
    }
    this.pendingSwapVehicleId = null;
    if (payload["ok"] !== true) {
      this.hint = typeof payload["error"] === "string" ? payload["error"] : "swap refused";
      return false;
    }
    const vehicleId = payload["vehicle_id"];
    if (typeof vehicleId !== "string" || vehicleId.length === 0) {
      this.hint = "swap ack without a vehicle id";
      return false;
    }
    this.controlledVehicleId = vehicleId;
    const seed = seedSpeed(vehicleId);
    if (seed !== null) {
      this.desiredSpeed = clamp(seed, 0, this.limits.maxSpeed);
    }
    this.hint = `driving ${vehicleId}`;
    return true;
  }
}

// The vehicle the prompt speaks about: the nearest vehicle ahead of the
// controlled one along the track within rangeM meters. Poses without a
// hub-projected arc fall back to a local projection.
export function findPredecessor(
  states: Map<string, VehicleState>,
  controlledId: string | null,
  track: Track,
  rangeM: number = DEFAULT_PROMPT_RANGE_M,
): VehicleState | null {
  if (controlledId === null) {
    return null;
  }
  const own = states.get(controlledId);
  if (own === undefined) {
    return null;
  }
  const arcOf = (s: VehicleState): number =>
    s.arcPosition !== null ? s.arcPosition : track.project(s.x, s.y)[0];
  const ownArc = arcOf(own);
  let best: VehicleState | null = null;
  let bestGap = Infinity;
  for (const [id, state] of states) {
    if (id === controlledId) {
      continue;
    }
    const gap = arcGap(ownArc, arcOf(state), track.lapLength);
    if (gap > 0 && gap <= rangeM && gap < bestGap) {
      bestGap = gap;
      best = state;
    }
  }
  return best;
}

// Prompt line for the operator: the predecessor's speed in km/h with one
// decimal, or null (prompt hidden) when no vehicle is ahead within range.
export function promptFor(
  states: Map<string, VehicleState>,
  controlledId: string | null,
  track: Track,
  rangeM: number = DEFAULT_PROMPT_RANGE_M,
): SpeedPrompt | null {
  const ahead = findPredecessor(states, controlledId, track, rangeM);
  if (ahead === null) {
    return null;
  }
  const kmh = ahead.speed * 3.6;
  return { vehicleId: ahead.vehicleId, kmh, text: `${kmh.toFixed(1)} km/h` };
}
