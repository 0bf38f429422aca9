import { describe, expect, it } from "vitest";
import {
  DEFAULT_RENDER_DELAY_S,
  lerpHeading,
  normalizeHeading,
  PoolBuffer,
  STALE_AFTER_S,
} from "../src/interpolation.js";
import type { PoolFrame, VehicleState } from "../src/protocol.js";

function state(vehicleId: string, x: number, overrides: Partial<VehicleState> = {}): VehicleState {
  return {
    vehicleId,
    frame: "Unified",
    x,
    y: 0,
    heading: 0,
    speed: 1.4,
    acceleration: 0,
    frontWheelAngle: 0,
    arcPosition: x,
    timestamp: 0,
    seq: 1,
    ...overrides,
  };
}

function pool(tick: number, states: VehicleState[]): PoolFrame {
  return { poolTimestamp: tick * 0.02, tick, states };
}

describe("heading math", () => {
  it("normalizes into (-pi, pi]", () => {
    expect(normalizeHeading(0)).toBe(0);
    expect(normalizeHeading(3 * Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(normalizeHeading(-Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(normalizeHeading(Math.PI + 0.1)).toBeCloseTo(-Math.PI + 0.1, 12);
  });

  it("interpolates across the wrap the short way", () => {
    const mid = lerpHeading(3.1, -3.1, 0.5);
    // Halfway between 3.1 and -3.1 across the wrap lies at the pi seam,
    // not at zero (the long way a naive average would take).
    expect(Math.abs(normalizeHeading(mid - Math.PI))).toBeLessThan(1e-9);
    expect(lerpHeading(0.2, 0.4, 0.5)).toBeCloseTo(0.3, 12);
  });
});

describe("pool buffer sampling", () => {
  it("returns null with no frames and clamps outside the span", () => {
    const buf = new PoolBuffer();
    expect(buf.sample(1)).toBeNull();
    buf.push(pool(1, [state("3", 10)]), 1.0);
    buf.push(pool(2, [state("3", 11)]), 1.02);
    const before = buf.sample(0.5)!;
    expect(before.interpolated).toBe(false);
    expect(before.states.get("3")!.x).toBe(10);
    const after = buf.sample(9)!;
    expect(after.interpolated).toBe(false);
    expect(after.states.get("3")!.x).toBe(11);
  });

  it("blends linearly between bracketing frames", () => {
    const buf = new PoolBuffer();
    buf.push(pool(1, [state("3", 10, { speed: 1.0, heading: 0.1 })]), 1.0);
    buf.push(pool(2, [state("3", 12, { speed: 2.0, heading: 0.3 })]), 1.02);
    const mid = buf.sample(1.015)!;
    expect(mid.interpolated).toBe(true);
    const alpha = (1.015 - 1.0) / 0.02; // independent of the buffer's math
    const s = mid.states.get("3")!;
    expect(s.x).toBeCloseTo(10 + (12 - 10) * alpha, 12);
    expect(s.speed).toBeCloseTo(1.0 + (2.0 - 1.0) * alpha, 12);
    expect(s.heading).toBeCloseTo(0.1 + (0.3 - 0.1) * alpha, 12);
  });

  it("yields at least one strictly interpolated frame at display rate", () => {
    // Two pools 20 ms apart, displayed at 60 fps with the default render
    // delay: some displayed frame must land strictly between them.
    const buf = new PoolBuffer();
    const t0 = 1.0;
    buf.push(pool(1, [state("3", 0)]), t0);
    buf.push(pool(2, [state("3", 1)]), t0 + 0.02);
    let interpolatedFrames = 0;
    for (let k = 0; k < 8; k++) {
      const displayTime = t0 + 0.02 + k * (1 / 60);
      const sample = buf.sample(displayTime - DEFAULT_RENDER_DELAY_S);
      if (sample !== null && sample.interpolated) {
        const target = displayTime - DEFAULT_RENDER_DELAY_S;
        const expected = (target - t0) / 0.02; // x runs 0 -> 1 over the gap
        expect(sample.states.get("3")!.x).toBeCloseTo(expected, 12);
        interpolatedFrames += 1;
      }
    }
    expect(interpolatedFrames).toBeGreaterThanOrEqual(1);
  });

  it("keeps vehicles verbatim when only one frame holds them", () => {
    const buf = new PoolBuffer();
    buf.push(pool(1, [state("3", 10), state("9", 50)]), 1.0);
    buf.push(pool(2, [state("3", 11)]), 1.02);
    const mid = buf.sample(1.01)!;
    expect(mid.states.get("3")!.x).toBeCloseTo(10.5, 12);
    expect(mid.states.get("9")!.x).toBe(50); // no partner frame: no blending
  });

  it("bounds its history", () => {
    const buf = new PoolBuffer(4);
    for (let i = 0; i < 10; i++) {
      buf.push(pool(i, [state("3", i)]), i * 0.02);
    }
    expect(buf.size).toBe(4);
    expect(buf.sample(0)!.states.get("3")!.x).toBe(6); // oldest retained frame
  });

  it("tracks staleness against the newest frame", () => {
    const buf = new PoolBuffer();
    expect(buf.staleness(5)).toBe(Infinity);
    buf.push(pool(1, [state("3", 0)]), 2.0);
    expect(buf.staleness(2.1)).toBeCloseTo(0.1, 12);
    expect(buf.staleness(2.0 + STALE_AFTER_S + 0.01)).toBeGreaterThan(STALE_AFTER_S);
  });
});
