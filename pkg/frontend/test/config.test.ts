import { describe, expect, it } from "vitest";
import { DEFAULT_HUB, hubSocketUrl, parseConfig } from "../src/config.js";
import { DEFAULT_RENDER_DELAY_S } from "../src/interpolation.js";
import { DEFAULT_LIMITS, DEFAULT_PROMPT_RANGE_M } from "../src/session.js";

describe("station config", () => {
  it("supplies workable defaults", () => {
    const c = parseConfig("", () => "ab12");
    expect(c.hub).toBe(DEFAULT_HUB);
    expect(c.kind).toBe("DriverStation");
    expect(c.entityId).toBe("station-ab12");
    expect(c.lapLength).toBe(245);
    expect(c.straightLength).toBe(80);
    expect(c.trackPath).toBeNull();
    expect(c.physicalIds.size).toBe(0);
    expect(c.promptRangeM).toBe(DEFAULT_PROMPT_RANGE_M);
    expect(c.renderDelayS).toBe(DEFAULT_RENDER_DELAY_S);
    expect(c.limits).toEqual(DEFAULT_LIMITS);
  });

  it("honors query overrides", () => {
    const c = parseConfig(
      "?hub=10.0.0.5:9000&entity=left-seat&lap=400&straight=170&promptRange=30" +
        "&renderDelay=0.06&chaseScale=14&maxSpeedKmh=36&maxAccel=1.5&maxDecel=3&maxWheel=0.4" +
        "&physical=1, 2,5&track=station_track.json",
    );
    expect(c.hub).toBe("10.0.0.5:9000");
    expect(c.entityId).toBe("left-seat");
    expect(c.lapLength).toBe(400);
    expect(c.straightLength).toBe(170);
    expect(c.promptRangeM).toBe(30);
    expect(c.renderDelayS).toBe(0.06);
    expect(c.chaseScale).toBe(14);
    expect(c.limits.maxSpeed).toBeCloseTo(10, 12);
    expect(c.limits.maxAccel).toBe(1.5);
    expect(c.limits.maxDecel).toBe(3);
    expect(c.limits.maxFrontWheelAngle).toBe(0.4);
    expect(c.physicalIds).toEqual(new Set(["1", "2", "5"]));
    expect(c.trackPath).toBe("station_track.json");
  });

  it("switches to observer mode", () => {
    const c = parseConfig("?mode=observe", () => "zz99");
    expect(c.kind).toBe("Observer");
    expect(c.entityId).toBe("observer-zz99");
  });

  it("falls back on malformed numbers", () => {
    const c = parseConfig("?lap=abc&renderDelay=");
    expect(c.lapLength).toBe(245);
    expect(c.renderDelayS).toBe(DEFAULT_RENDER_DELAY_S);
  });

  it("builds the socket url from the hub address", () => {
    expect(hubSocketUrl(parseConfig("?hub=127.0.0.1:8700"))).toBe("ws://127.0.0.1:8700/");
  });
});
