// Station configuration from the page URL's query string. Everything has a
// workable default so opening index.html against a local hub needs at most
// ?hub=host:port.

import { DEFAULT_RENDER_DELAY_S } from "./interpolation.js";
import { DEFAULT_LIMITS, DEFAULT_PROMPT_RANGE_M, type VehicleLimits } from "./session.js";

export type StationKind = "DriverStation" | "Observer";

export interface StationConfig {
  hub: string; // host:port of the hub's browser socket
  entityId: string;
  kind: StationKind;
  lapLength: number;
  straightLength: number;
  trackPath: string | null; // same-origin JSON path; overrides lap/straight
  // Vehicles publishing from the physical platform, for the gold/cyan color
  // split; pool states are unified-frame on the wire so this comes from the
  // operator (comma-separated ids).
  physicalIds: ReadonlySet<string>;
  promptRangeM: number;
  renderDelayS: number;
  chaseScale: number; // px per meter in Chase view
  limits: VehicleLimits;
}

export const DEFAULT_HUB = "127.0.0.1:8700";

function numParam(params: URLSearchParams, name: string, fallback: number): number {
  const raw = params.get(name);
  if (raw === null || raw.trim() === "") {
    return fallback;
  }
  const value = Number(raw);
  return Number.isFinite(value) ? value : fallback;
}

function randomSuffix(): string {
  return Math.floor(Math.random() * 36 ** 4)
    .toString(36)
    .padStart(4, "0");
}

export function parseConfig(
  query: string | URLSearchParams,
  suffix: () => string = randomSuffix,
): StationConfig {
  const params = typeof query === "string" ? new URLSearchParams(query) : query;
  const mode = params.get("mode");
  const kind: StationKind = mode === "observe" ? "Observer" : "DriverStation";
  const fallbackId = (kind === "Observer" ? "observer-" : "station-") + suffix();
  const maxSpeedKmh = numParam(params, "maxSpeedKmh", DEFAULT_LIMITS.maxSpeed * 3.6);
  const limits: VehicleLimits = {
    maxSpeed: maxSpeedKmh / 3.6,
    maxAccel: numParam(params, "maxAccel", DEFAULT_LIMITS.maxAccel),
    maxDecel: numParam(params, "maxDecel", DEFAULT_LIMITS.maxDecel),
    maxFrontWheelAngle: numParam(params, "maxWheel", DEFAULT_LIMITS.maxFrontWheelAngle),
  };
  const physicalRaw = params.get("physical") ?? "";
  const physicalIds = new Set(
    physicalRaw
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0),
  );
  return {
    hub: params.get("hub") ?? DEFAULT_HUB,
    entityId: params.get("entity") ?? fallbackId,
    kind,
    lapLength: numParam(params, "lap", 245),
    straightLength: numParam(params, "straight", 80),
    trackPath: params.get("track"),
    physicalIds,
    promptRangeM: numParam(params, "promptRange", DEFAULT_PROMPT_RANGE_M),
    renderDelayS: numParam(params, "renderDelay", DEFAULT_RENDER_DELAY_S),
    chaseScale: numParam(params, "chaseScale", 10),
    limits,
  };
}

export function hubSocketUrl(config: StationConfig): string {
  return `ws://${config.hub}/`;
}
