// Pool frame buffering and temporal interpolation. The station renders a
// short, fixed delay behind the newest received pool so each displayed pose
// is either a received sample or a linear blend between the two received
// samples that bracket the target time — never an extrapolation.

import type { PoolFrame, VehicleState } from "./protocol.js";

// Two pool periods at the default 50 Hz tick: enough for one late frame
// without the display overrunning the data.
export const DEFAULT_RENDER_DELAY_S = 0.04;

export const STALE_AFTER_S = 0.5;

// Wrap an angle to (-pi, pi].
export function normalizeHeading(angle: number): number {
  let a = ((((angle + Math.PI) % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI)) - Math.PI;
  if (a === -Math.PI) {
    a = Math.PI;
  }
  return a;
}

export function lerpHeading(a: number, b: number, t: number): number {
  return normalizeHeading(a + normalizeHeading(b - a) * t);
}

export interface TimedPool {
  receivedAt: number;
  frame: PoolFrame;
}

export interface PoolSample {
  states: Map<string, VehicleState>;
  // True when at least one pose is a strict blend of two received frames.
  interpolated: boolean;
  alpha: number;
}

function statesById(frame: PoolFrame): Map<string, VehicleState> {
  const out = new Map<string, VehicleState>();
  for (const state of frame.states) {
    out.set(state.vehicleId, state);
  }
  return out;
}

function blendState(a: VehicleState, b: VehicleState, t: number): VehicleState {
  return {
    vehicleId: b.vehicleId,
    frame: b.frame,
    x: a.x + (b.x - a.x) * t,
    y: a.y + (b.y - a.y) * t,
    heading: lerpHeading(a.heading, b.heading, t),
    speed: a.speed + (b.speed - a.speed) * t,
    acceleration: a.acceleration + (b.acceleration - a.acceleration) * t,
    frontWheelAngle: a.frontWheelAngle + (b.frontWheelAngle - a.frontWheelAngle) * t,
    arcPosition: b.arcPosition,
    timestamp: a.timestamp + (b.timestamp - a.timestamp) * t,
    seq: b.seq,
  };
}

export class PoolBuffer {
  private frames: TimedPool[] = [];

  constructor(readonly capacity = 64) {}

  // receivedAt is a reading of the station's monotonic clock at arrival.
  push(frame: PoolFrame, receivedAt: number): void {
    this.frames.push({ receivedAt, frame });
    if (this.frames.length > this.capacity) {
      this.frames.splice(0, this.frames.length - this.capacity);
    }
  }

  get size(): number {
    return this.frames.length;
  }

  latest(): TimedPool | null {
    return this.frames.length > 0 ? this.frames[this.frames.length - 1] : null;
  }

  staleness(now: number): number {
    const last = this.latest();
    return last === null ? Infinity : now - last.receivedAt;
  }

  // Poses at a target time. Outside the buffered span the nearest received
  // frame is returned verbatim (clamping, never extrapolating); inside it,
  // vehicles present in both bracketing frames blend linearly and vehicles
  // present in only one keep that frame's pose.
  sample(target: number): PoolSample | null {
    if (this.frames.length === 0) {
      return null;
    }
    const first = this.frames[0];
    const last = this.frames[this.frames.length - 1];
    if (target <= first.receivedAt) {
      return { states: statesById(first.frame), interpolated: false, alpha: 0 };
    }
    if (target >= last.receivedAt) {
      return { states: statesById(last.frame), interpolated: false, alpha: 1 };
    }
    let lo = 0;
    let hi = this.frames.length - 1;
    while (lo + 1 < hi) {
      const mid = (lo + hi) >> 1;
      if (this.frames[mid].receivedAt <= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const a = this.frames[lo];
    const b = this.frames[hi];
    const span = b.receivedAt - a.receivedAt;
    if (span <= 0) {
      return { states: statesById(b.frame), interpolated: false, alpha: 1 };
    }
    const alpha = (target - a.receivedAt) / span;
    const aStates = statesById(a.frame);
    const bStates = statesById(b.frame);
    const out = new Map<string, VehicleState>();
    let blended = false;
    for (const [id, sb] of bStates) {
      const sa = aStates.get(id);
      if (sa === undefined) {
        out.set(id, sb);
      } else {
        out.set(id, blendState(sa, sb, alpha));
        blended = true;
      }
    }
    for (const [id, sa] of aStates) {
      if (!bStates.has(id)) {
        out.set(id, sa);
      }
    }
    return { states: out, interpolated: blended && alpha > 0 && alpha < 1, alpha };
  }
}
