// Browser entry point: connect to the hub's browser socket, register as a
// driver station (or observer), and run the input → instruction and pool →
// render loops. All protocol, session, and drawing logic lives in the
// modules this file wires together.

import { hubSocketUrl, parseConfig } from "./config.js";
import { PoolBuffer, STALE_AFTER_S } from "./interpolation.js";
import { GamepadInput, KeyboardInput, mergeSamples } from "./input.js";
import { HubLink, type Transport } from "./link.js";
import { Renderer, type Canvas2D, type Scene } from "./render.js";
import { DriverSession, promptFor, type SpeedPrompt } from "./session.js";
import { stadiumTrack, Track, trackFromJson } from "./track.js";

const PREVENT_DEFAULT_CODES = new Set(["ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown", "Space"]);

async function loadTrack(): Promise<Track> {
  const config = parseConfig(window.location.search);
  if (config.trackPath !== null) {
    const response = await fetch(config.trackPath);
    if (!response.ok) {
      throw new Error(`track fetch failed: ${response.status}`);
    }
    return trackFromJson(await response.json());
  }
  return stadiumTrack(config.lapLength, config.straightLength);
}

function start(track: Track): void {
  const config = parseConfig(window.location.search);
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d") as unknown as Canvas2D;

  const renderer = new Renderer(track, canvas.width, canvas.height, config.chaseScale);
  const resize = (): void => {
    canvas.width = window.innerWidth;
    canvas.height = window.innerHeight;
    renderer.resize(canvas.width, canvas.height);
  };
  window.addEventListener("resize", resize);
  resize();

  const session = new DriverSession(config.entityId, config.limits);
  const buffer = new PoolBuffer();
  const keyboard = new KeyboardInput();
  const gamepad = new GamepadInput();
  const driving = config.kind === "DriverStation";

  const ws = new WebSocket(hubSocketUrl(config));
  const transport: Transport = {
    send: (text) => ws.send(text),
    close: () => ws.close(),
  };
  const link = new HubLink(transport);

  ws.addEventListener("open", () => link.register(config.kind, config.entityId));
  ws.addEventListener("message", (event) => {
    if (typeof event.data === "string") {
      link.handleMessage(event.data);
    }
  });
  ws.addEventListener("close", () => link.handleClose());

  link.onRejected = (reason) => {
    session.hint = `registration refused: ${reason}`;
  };
  link.onError = (payload) => {
    const code = typeof payload["code"] === "string" ? payload["code"] : "error";
    const detail = typeof payload["detail"] === "string" ? payload["detail"] : "";
    session.hint = code === "agent_lost" ? `vehicle ${detail} lost` : `${code} ${detail}`.trim();
  };
  link.onAdminAck = (payload) => {
    session.handleAdminAck(payload, (vehicleId) => {
      const latest = buffer.latest();
      if (latest === null) {
        return null;
      }
      const state = latest.frame.states.find((s) => s.vehicleId === vehicleId);
      return state !== undefined ? state.speed : null;
    });
  };

  let prompt: SpeedPrompt | null = null;
  let lastEmitAt: number | null = null;
  link.onPool = (pool, receivedAt) => {
    buffer.push(pool, receivedAt);
    const states = new Map(pool.states.map((s) => [s.vehicleId, s]));
    prompt = driving
      ? promptFor(states, session.controlledVehicleId, track, config.promptRangeM)
      : null;
    if (driving) {
      session.setControls(mergeSamples(keyboard.getState(), gamepad.getState()));
      const now = link.now();
      const dt = lastEmitAt === null ? 0.02 : Math.min(Math.max(now - lastEmitAt, 0), 0.1);
      lastEmitAt = now;
      session.advance(dt);
      const instruction = session.buildInstruction(now);
      if (instruction !== null) {
        link.sendInstruction(instruction);
      }
    }
  };

  window.addEventListener("keydown", (event) => {
    if (PREVENT_DEFAULT_CODES.has(event.code)) {
      event.preventDefault();
    }
    if (event.repeat) {
      return;
    }
    if (event.code === "KeyV") {
      session.toggleView();
      return;
    }
    const digit = /^Digit([1-9])$/.exec(event.code);
    if (digit !== null && driving && link.status === "ready") {
      link.sendAdmin(session.swapCommand(digit[1], event.shiftKey));
      return;
    }
    keyboard.press(event.code);
  });
  window.addEventListener("keyup", (event) => {
    keyboard.release(event.code);
  });
  window.addEventListener("blur", () => keyboard.clear());

  const frame = (): void => {
    const now = link.now();
    const sample = buffer.sample(now - config.renderDelayS);
    const scene: Scene = {
      states: sample !== null ? sample.states : new Map(),
      controlledId: session.controlledVehicleId,
      physicalIds: config.physicalIds,
      viewMode: session.viewMode,
      prompt,
      stale: buffer.staleness(now) > STALE_AFTER_S,
      hint: session.hint,
      status:
        `${config.entityId} — ${link.status}` +
        (link.tickHz !== null ? ` @ ${link.tickHz} Hz` : ""),
      setSpeed: driving && session.controlledVehicleId !== null ? session.desiredSpeed : null,
    };
    renderer.render(ctx, scene);
    window.requestAnimationFrame(frame);
  };
  window.requestAnimationFrame(frame);
}

loadTrack()
  .then(start)
  .catch((exc) => {
    const el = document.getElementById("fatal");
    if (el !== null) {
      el.textContent = String(exc);
    }
  });
