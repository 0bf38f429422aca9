import { describe, expect, it } from "vitest";
import type { VehicleState } from "../src/protocol.js";
import {
  COLOR_CONTROLLED,
  COLOR_PHYSICAL,
  COLOR_PROMPT,
  COLOR_VIRTUAL,
  Renderer,
  STALE_BANNER_TEXT,
  screenAngle,
  worldToScreen,
  type Scene,
} from "../src/render.js";
import { stadiumTrack } from "../src/track.js";
import { RecordingContext } from "./recording_context.js";

const track = stadiumTrack(245, 80);

function vehicle(
  vehicleId: string,
  arc: number,
  overrides: Partial<VehicleState> = {},
): VehicleState {
  const [x, y] = track.pointAt(arc);
  return {
    vehicleId,
    frame: "Unified",
    x,
    y,
    heading: track.headingAt(arc),
    speed: 1.4,
    acceleration: 0,
    frontWheelAngle: 0,
    arcPosition: arc,
    timestamp: 0,
    seq: 1,
    ...overrides,
  };
}

function eightVehicles(): Map<string, VehicleState> {
  const states = new Map<string, VehicleState>();
  for (let i = 1; i <= 8; i++) {
    states.set(String(i), vehicle(String(i), 120 - i * 12));
  }
  return states;
}

function scene(overrides: Partial<Scene> = {}): Scene {
  return {
    states: eightVehicles(),
    controlledId: "3",
    physicalIds: new Set(["1", "2", "5"]),
    viewMode: "TopDown",
    prompt: null,
    stale: false,
    hint: null,
    status: "station.A — ready @ 50 Hz",
    setSpeed: 1.4,
    ...overrides,
  };
}

describe("vehicle glyphs", () => {
  it("draws all eight pool vehicles with id labels", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene());
    expect(r.vehiclesDrawn).toBe(8);
    const texts = ctx.texts();
    for (let i = 1; i <= 8; i++) {
      expect(texts).toContain(String(i));
    }
  });

  it("draws only the track when the pool is empty", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene({ states: new Map(), controlledId: null, setSpeed: null }));
    expect(r.vehiclesDrawn).toBe(0);
    expect(ctx.ops.filter((o) => o.op === "stroke").length).toBeGreaterThanOrEqual(2);
    expect(ctx.texts()).not.toContain("1");
  });

  it("colors the controlled vehicle red, platform vehicles gold, the rest cyan", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene());
    expect(ctx.fillsWith(COLOR_CONTROLLED).length).toBe(1);
    expect(ctx.fillsWith(COLOR_PHYSICAL).length).toBe(3);
    expect(ctx.fillsWith(COLOR_VIRTUAL).length).toBe(4);
  });

  it("honors the state's own frame when no origin set is given", () => {
    const states = new Map([
      ["1", vehicle("1", 10, { frame: "Physical" })],
      ["2", vehicle("2", 22, { frame: "Virtual" })],
    ]);
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene({ states, controlledId: null, physicalIds: new Set() }));
    expect(ctx.fillsWith(COLOR_PHYSICAL).length).toBe(1);
    expect(ctx.fillsWith(COLOR_VIRTUAL).length).toBe(1);
  });
});

describe("cameras", () => {
  it("fits the whole track on screen in top-down view", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    const sc = scene();
    r.render(ctx, sc);
    const cam = r.lastCamera!;
    expect(cam.mode).toBe("TopDown");
    expect(cam.rotation).toBe(0);
    for (const state of sc.states.values()) {
      const [sx, sy] = worldToScreen(cam, state.x, state.y);
      expect(sx).toBeGreaterThanOrEqual(0);
      expect(sx).toBeLessThanOrEqual(800);
      expect(sy).toBeGreaterThanOrEqual(0);
      expect(sy).toBeLessThanOrEqual(600);
    }
  });

  it("centers the controlled vehicle heading-up in chase view", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    const sc = scene({ viewMode: "Chase" });
    r.render(ctx, sc);
    const cam = r.lastCamera!;
    const own = sc.states.get("3")!;
    expect(cam.mode).toBe("Chase");
    expect(cam.cx).toBe(own.x);
    expect(cam.cy).toBe(own.y);
    expect(cam.rotation).toBeCloseTo(Math.PI / 2 - own.heading, 12);
    const [cx, cy] = worldToScreen(cam, own.x, own.y);
    expect(cx).toBeCloseTo(400, 9);
    expect(cy).toBeCloseTo(300, 9);
    // A point straight ahead of the vehicle appears straight up on screen.
    const ahead = worldToScreen(
      cam,
      own.x + 10 * Math.cos(own.heading),
      own.y + 10 * Math.sin(own.heading),
    );
    expect(ahead[0]).toBeCloseTo(400, 9);
    expect(ahead[1]).toBeCloseTo(300 - 10 * cam.scale, 9);
    // And the glyph rotation points the nose up too.
    expect(Math.cos(screenAngle(cam, own.heading))).toBeCloseTo(0, 12);
    expect(Math.sin(screenAngle(cam, own.heading))).toBeCloseTo(-1, 12);
  });

  it("retargets the chase camera when the controlled vehicle changes", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    const sc = scene({ viewMode: "Chase" });
    r.render(ctx, sc);
    const before = r.lastCamera!;
    r.render(new RecordingContext(), { ...sc, controlledId: "4" });
    const after = r.lastCamera!;
    const v4 = sc.states.get("4")!;
    expect(after.cx).toBe(v4.x);
    expect(after.cy).toBe(v4.y);
    expect(after.cx).not.toBe(before.cx);
  });

  it("falls back to top-down when chase has no target", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene({ viewMode: "Chase", controlledId: null }));
    expect(r.lastCamera!.mode).toBe("TopDown");
  });
});

describe("overlays", () => {
  it("paints the speed prompt above the predecessor", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    const sc = scene({ prompt: { vehicleId: "2", kmh: 10.08, text: "10.1 km/h" } });
    r.render(ctx, sc);
    expect(ctx.textWith(COLOR_PROMPT)).toEqual(["10.1 km/h"]);
    const op = ctx.ops.find((o) => o.op === "fillText" && o.args[0] === "10.1 km/h")!;
    const v2 = sc.states.get("2")!;
    const [sx, sy] = worldToScreen(r.lastCamera!, v2.x, v2.y);
    expect(op.args[1]).toBeCloseTo(sx, 9);
    expect(Number(op.args[2])).toBeLessThan(sy); // above the vehicle
  });

  it("omits the prompt when hidden", () => {
    const ctx = new RecordingContext();
    const r = new Renderer(track, 800, 600);
    r.render(ctx, scene({ prompt: null }));
    expect(ctx.textWith(COLOR_PROMPT)).toEqual([]);
  });

  it("raises the stale banner only on stale pools", () => {
    const r = new Renderer(track, 800, 600);
    const fresh = new RecordingContext();
    r.render(fresh, scene({ stale: false }));
    expect(fresh.texts()).not.toContain(STALE_BANNER_TEXT);
    const stale = new RecordingContext();
    r.render(stale, scene({ stale: true }));
    expect(stale.texts()).toContain(STALE_BANNER_TEXT);
  });

  it("shows mapping state and hints in the HUD", () => {
    const r = new Renderer(track, 800, 600);
    const mapped = new RecordingContext();
    r.render(mapped, scene({ hint: "driving 3" }));
    expect(mapped.texts().some((t) => t.startsWith("driving 3"))).toBe(true);
    expect(mapped.texts()).toContain("driving 3");
    const unmapped = new RecordingContext();
    r.render(unmapped, scene({ controlledId: null, setSpeed: null }));
    expect(unmapped.texts()).toContain("not mapped");
  });
});
