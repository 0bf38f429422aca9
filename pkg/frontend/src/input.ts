// Operator input sources. Keyboard and gamepad both produce the same
// normalized ControlSample; the station merges them so whichever device is
// actually being used wins, and both feed the identical session fields.

import type { ControlSample } from "./session.js";

export interface KeyMap {
  steerLeft: string[];
  steerRight: string[];
  throttle: string[];
  brake: string[];
}

// KeyboardEvent.code values: arrows and WASD both drive, Space is full brake.
export const DEFAULT_KEY_MAP: KeyMap = {
  steerLeft: ["ArrowLeft", "KeyA"],
  steerRight: ["ArrowRight", "KeyD"],
  throttle: ["ArrowUp", "KeyW"],
  brake: ["ArrowDown", "KeyS", "Space"],
};

export class KeyboardInput {
  private readonly pressed = new Set<string>();

  constructor(private readonly map: KeyMap = DEFAULT_KEY_MAP) {}

  press(code: string): void {
    this.pressed.add(code);
  }

  release(code: string): void {
    this.pressed.delete(code);
  }

  clear(): void {
    this.pressed.clear();
  }

  private any(codes: string[]): boolean {
    return codes.some((c) => this.pressed.has(c));
  }

  getState(): ControlSample {
    const left = this.any(this.map.steerLeft) ? 1 : 0;
    const right = this.any(this.map.steerRight) ? 1 : 0;
    return {
      steering: left - right,
      throttle: this.any(this.map.throttle) ? 1 : 0,
      brake: this.any(this.map.brake) ? 1 : 0,
    };
  }
}

// The slice of the Gamepad API the station reads; injectable for tests.
export interface PadSnapshot {
  axes: readonly number[];
  buttons: readonly { value: number }[];
}

export const STICK_DEADZONE = 0.12;

function defaultPadPoll(): (PadSnapshot | null)[] {
  if (typeof navigator === "undefined" || typeof navigator.getGamepads !== "function") {
    return [];
  }
  return Array.from(navigator.getGamepads());
}

export class GamepadInput {
  constructor(private readonly poll: () => (PadSnapshot | null)[] = defaultPadPoll) {}

  // Left stick X steers (stick right is screen right, so negate for the
  // positive-left steering convention); right/left triggers are the pedals.
  getState(): ControlSample | null {
    const pad = this.poll().find((p) => p !== null);
    if (pad === undefined || pad === null) {
      return null;
    }
    const rawX = pad.axes.length > 0 ? pad.axes[0] : 0;
    const x = Math.abs(rawX) < STICK_DEADZONE ? 0 : rawX;
    const throttle = pad.buttons.length > 7 ? pad.buttons[7].value : 0;
    const brake = pad.buttons.length > 6 ? pad.buttons[6].value : 0;
    return {
      steering: Math.min(Math.max(-x, -1), 1),
      throttle: Math.min(Math.max(throttle, 0), 1),
      brake: Math.min(Math.max(brake, 0), 1),
    };
  }
}

// Per-axis merge: the stronger deflection wins, so an idle device never
// masks an active one.
export function mergeSamples(keyboard: ControlSample, pad: ControlSample | null): ControlSample {
  if (pad === null) {
    return keyboard;
  }
  return {
    steering: Math.abs(pad.steering) > Math.abs(keyboard.steering) ? pad.steering : keyboard.steering,
    throttle: Math.max(keyboard.throttle, pad.throttle),
    brake: Math.max(keyboard.brake, pad.brake),
  };
}
