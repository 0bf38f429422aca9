// Canvas renderer for the station. Every pose drawn here comes straight
// from the sampled pool states handed in via Scene — the renderer holds no
// motion model of its own. It draws against a minimal 2D-context surface so
// tests can record the draw stream headlessly.

import type { VehicleState } from "./protocol.js";
import type { SpeedPrompt, ViewMode } from "./session.js";
import { Track } from "./track.js";

export interface Canvas2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  textAlign: string;
  globalAlpha: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(r: number): void;
}

// Vehicle fill colors: the vehicle this station drives is red, vehicles
// publishing from the physical platform are gold, all others cyan.
export const COLOR_CONTROLLED = "#e03131";
export const COLOR_PHYSICAL = "#ffd700";
export const COLOR_VIRTUAL = "#00e5ff";

export const COLOR_BACKGROUND = "#10131a";
export const COLOR_ROAD = "#2a2f3a";
export const COLOR_CENTERLINE = "#3d4454";
export const COLOR_TEXT = "#e8ecf4";
export const COLOR_MUTED = "#8892a8";
export const COLOR_HINT = "#ffd166";
export const COLOR_PROMPT = "#9effa0";
export const COLOR_STALE = "#ff6b6b";

export const BODY_LENGTH_M = 4.6;
export const BODY_WIDTH_M = 1.8;
export const ROAD_WIDTH_M = 7;

export const STALE_BANNER_TEXT = "POOL STALE — awaiting fresh frames";

export interface Camera {
  mode: ViewMode;
  cx: number; // world focus
  cy: number;
  scale: number; // px per meter
  rotation: number; // world pre-rotation before the y-flip
  width: number;
  height: number;
}

export function worldToScreen(cam: Camera, x: number, y: number): [number, number] {
  const dx = x - cam.cx;
  const dy = y - cam.cy;
  const rx = Math.cos(cam.rotation) * dx - Math.sin(cam.rotation) * dy;
  const ry = Math.sin(cam.rotation) * dx + Math.cos(cam.rotation) * dy;
  return [cam.width / 2 + cam.scale * rx, cam.height / 2 - cam.scale * ry];
}

// Angle to rotate the canvas by so a glyph drawn facing +x points along the
// vehicle's world heading on screen (the y-flip mirrors angles).
export function screenAngle(cam: Camera, heading: number): number {
  return -(heading + cam.rotation);
}

export interface Scene {
  states: Map<string, VehicleState>;
  controlledId: string | null;
  // Pool states arrive projected into the unified frame, so the wire no
  // longer says which vehicles publish from the physical platform; the
  // operator supplies that set. Ids not in it fall back to the state's own
  // frame field.
  physicalIds: ReadonlySet<string>;
  viewMode: ViewMode;
  prompt: SpeedPrompt | null;
  stale: boolean;
  hint: string | null;
  status: string;
  setSpeed: number | null; // the session's speed setpoint, m/s
}

export class Renderer {
  lastCamera: Camera | null = null;
  vehiclesDrawn = 0;

  constructor(
    private readonly track: Track,
    private width: number,
    private height: number,
    private readonly chaseScale = 10,
  ) {}

  resize(width: number, height: number): void {
    this.width = width;
    this.height = height;
  }

  private topDownCamera(): Camera {
    const b = this.track.bounds();
    const pad = 14;
    const spanX = b.maxX - b.minX + 2 * pad;
    const spanY = b.maxY - b.minY + 2 * pad;
    const scale = Math.min(this.width / spanX, this.height / spanY);
    return {
      mode: "TopDown",
      cx: (b.minX + b.maxX) / 2,
      cy: (b.minY + b.maxY) / 2,
      scale,
      rotation: 0,
      width: this.width,
      height: this.height,
    };
  }

  private chaseCamera(target: VehicleState): Camera {
    return {
      mode: "Chase",
      cx: target.x,
      cy: target.y,
      scale: this.chaseScale,
      rotation: Math.PI / 2 - target.heading,
      width: this.width,
      height: this.height,
    };
  }

  render(ctx: Canvas2D, scene: Scene): void {
    const controlled =
      scene.controlledId !== null ? scene.states.get(scene.controlledId) : undefined;
    const cam =
      scene.viewMode === "Chase" && controlled !== undefined
        ? this.chaseCamera(controlled)
        : this.topDownCamera();
    this.lastCamera = cam;

    ctx.globalAlpha = 1;
    ctx.fillStyle = COLOR_BACKGROUND;
    ctx.fillRect(0, 0, this.width, this.height);

    this.drawTrack(ctx, cam);

    this.vehiclesDrawn = 0;
    for (const state of scene.states.values()) {
      this.drawVehicle(ctx, cam, state, scene.controlledId, scene.physicalIds);
      this.vehiclesDrawn += 1;
    }

    if (scene.prompt !== null) {
      const ahead = scene.states.get(scene.prompt.vehicleId);
      if (ahead !== undefined) {
        const [sx, sy] = worldToScreen(cam, ahead.x, ahead.y);
        ctx.font = "bold 14px system-ui, sans-serif";
        ctx.textAlign = "center";
        ctx.fillStyle = COLOR_PROMPT;
        ctx.fillText(scene.prompt.text, sx, sy - BODY_WIDTH_M * cam.scale - 22);
      }
    }

    this.drawHud(ctx, scene);

    if (scene.stale) {
      ctx.globalAlpha = 0.85;
      ctx.fillStyle = "#321219";
      ctx.fillRect(0, 0, this.width, 36);
      ctx.globalAlpha = 1;
      ctx.font = "bold 15px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillStyle = COLOR_STALE;
      ctx.fillText(STALE_BANNER_TEXT, this.width / 2, 24);
    }
  }

  private tracePolyline(ctx: Canvas2D, cam: Camera): void {
    ctx.beginPath();
    const pts = this.track.waypoints;
    const [sx0, sy0] = worldToScreen(cam, pts[0][0], pts[0][1]);
    ctx.moveTo(sx0, sy0);
    for (let i = 1; i < pts.length; i++) {
      const [sx, sy] = worldToScreen(cam, pts[i][0], pts[i][1]);
      ctx.lineTo(sx, sy);
    }
    ctx.closePath();
  }

  private drawTrack(ctx: Canvas2D, cam: Camera): void {
    ctx.strokeStyle = COLOR_ROAD;
    ctx.lineWidth = Math.max(ROAD_WIDTH_M * cam.scale, 2);
    this.tracePolyline(ctx, cam);
    ctx.stroke();

    ctx.strokeStyle = COLOR_CENTERLINE;
    ctx.lineWidth = 1;
    this.tracePolyline(ctx, cam);
    ctx.stroke();

    // Start line across the road at arc 0.
    const [x0, y0] = this.track.pointAt(0);
    const h0 = this.track.headingAt(0);
    const half = ROAD_WIDTH_M / 2;
    const [ax, ay] = worldToScreen(cam, x0 - Math.sin(h0) * half, y0 + Math.cos(h0) * half);
    const [bx, by] = worldToScreen(cam, x0 + Math.sin(h0) * half, y0 - Math.cos(h0) * half);
    ctx.strokeStyle = COLOR_MUTED;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();

    ctx.font = "12px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = COLOR_MUTED;
    for (const [name, arc] of Object.entries(this.track.namedPoints)) {
      const [px, py] = this.track.pointAt(arc);
      const [sx, sy] = worldToScreen(cam, px, py);
      ctx.fillText(name, sx, sy - 10);
    }
  }

  private drawVehicle(
    ctx: Canvas2D,
    cam: Camera,
    state: VehicleState,
    controlledId: string | null,
    physicalIds: ReadonlySet<string>,
  ): void {
    const [sx, sy] = worldToScreen(cam, state.x, state.y);
    const physical = physicalIds.has(state.vehicleId) || state.frame === "Physical";
    const color =
      state.vehicleId === controlledId
        ? COLOR_CONTROLLED
        : physical
          ? COLOR_PHYSICAL
          : COLOR_VIRTUAL;
    const len = Math.max(BODY_LENGTH_M * cam.scale, 6);
    const wid = Math.max(BODY_WIDTH_M * cam.scale, 3);

    ctx.save();
    ctx.translate(sx, sy);
    ctx.rotate(screenAngle(cam, state.heading));
    ctx.fillStyle = color;
    ctx.fillRect(-len / 2, -wid / 2, len, wid);
    // Heading tick from center to nose.
    ctx.strokeStyle = COLOR_BACKGROUND;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(0, 0);
    ctx.lineTo(len / 2, 0);
    ctx.stroke();
    ctx.restore();

    ctx.font = "12px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = COLOR_TEXT;
    ctx.fillText(state.vehicleId, sx, sy - wid / 2 - 6);
  }

  private drawHud(ctx: Canvas2D, scene: Scene): void {
    ctx.font = "13px system-ui, sans-serif";
    ctx.textAlign = "left";
    ctx.fillStyle = COLOR_TEXT;
    const lines: string[] = [scene.status];
    if (scene.controlledId !== null) {
      const own = scene.states.get(scene.controlledId);
      const actual = own !== undefined ? `${(own.speed * 3.6).toFixed(1)} km/h` : "—";
      const set = scene.setSpeed !== null ? `${(scene.setSpeed * 3.6).toFixed(1)} km/h` : "—";
      lines.push(`driving ${scene.controlledId}   speed ${actual}   set ${set}`);
    } else {
      lines.push("not mapped");
    }
    lines.push(`view ${scene.viewMode}`);
    let y = 56;
    for (const line of lines) {
      ctx.fillText(line, 12, y);
      y += 18;
    }
    if (scene.hint !== null && scene.hint.length > 0) {
      ctx.textAlign = "center";
      ctx.fillStyle = COLOR_HINT;
      ctx.fillText(scene.hint, this.width / 2, this.height - 16);
    }
  }
}
