// Session layer over one hub connection. The transport is injected (a real
// WebSocket in the browser, anything with send/close in tests), so this
// module owns exactly the protocol discipline: register first, envelope seq
// strictly increasing from 1, answer every ping with a pong echoing the
// ping's envelope timestamp, and route inbound envelopes to handlers.

import {
  decodeEnvelope,
  encodeEnvelope,
  makeAdminCommand,
  makeInstruction,
  makePong,
  makeRegister,
  poolFromPayload,
  type Envelope,
  type EntityKind,
  type Payload,
  type PoolFrame,
  type WireInstruction,
} from "./protocol.js";

export interface Transport {
  send(text: string): void;
  close(): void;
}

export type LinkStatus = "connecting" | "registering" | "ready" | "rejected" | "closed";

function monotonicSeconds(): number {
  return performance.now() / 1000;
}

export class HubLink {
  status: LinkStatus = "connecting";
  entityId = "";
  tickHz: number | null = null;
  rejectReason: string | null = null;

  poolsReceived = 0;
  decodeErrors = 0;
  lastDecodeError: string | null = null;

  onReady: ((tickHz: number | null) => void) | null = null;
  onRejected: ((reason: string) => void) | null = null;
  onPool: ((pool: PoolFrame, receivedAt: number, envelope: Envelope) => void) | null = null;
  onAdminAck: ((payload: Payload) => void) | null = null;
  onError: ((payload: Payload) => void) | null = null;
  onDispatch: ((payload: Payload) => void) | null = null;
  onClosed: (() => void) | null = null;

  private seq = 0;
  private readonly epoch: number;

  constructor(
    private readonly transport: Transport,
    private readonly clock: () => number = monotonicSeconds,
  ) {
    this.epoch = clock();
  }

  // Seconds since this link was opened; the timestamp base for everything
  // this station sends.
  now(): number {
    return this.clock() - this.epoch;
  }

  private nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  private sendEnvelope(env: Envelope): void {
    this.transport.send(encodeEnvelope(env));
  }

  register(entityKind: EntityKind, entityId: string, capabilities: string[] = []): void {
    this.entityId = entityId;
    this.status = "registering";
    this.sendEnvelope(makeRegister(this.nextSeq(), this.now(), entityKind, entityId, capabilities));
  }

  sendInstruction(instruction: WireInstruction): boolean {
    if (this.status !== "ready") {
      return false;
    }
    this.sendEnvelope(makeInstruction(this.nextSeq(), this.now(), instruction));
    return true;
  }

  sendAdmin(command: Payload): boolean {
    if (this.status !== "ready") {
      return false;
    }
    this.sendEnvelope(makeAdminCommand(this.nextSeq(), this.now(), command));
    return true;
  }

  // Feed one inbound text frame from the transport.
  handleMessage(text: string): void {
    let env: Envelope;
    try {
      env = decodeEnvelope(text);
    } catch (exc) {
      this.decodeErrors += 1;
      this.lastDecodeError = String(exc);
      return;
    }
    switch (env.msgType) {
      case "Heartbeat": {
        if (env.payload["kind"] === "ping" && this.status !== "closed") {
          this.sendEnvelope(makePong(this.nextSeq(), this.now(), env.timestamp));
        }
        return;
      }
      case "RegisterAck": {
        if (env.payload["accepted"] === true) {
          this.status = "ready";
          const hz = env.payload["tick_hz"];
          this.tickHz = typeof hz === "number" ? hz : null;
          this.onReady?.(this.tickHz);
        } else {
          this.status = "rejected";
          const reason = env.payload["reason"];
          this.rejectReason = typeof reason === "string" ? reason : "registration refused";
          this.onRejected?.(this.rejectReason);
        }
        return;
      }
      case "StatePool": {
        this.poolsReceived += 1;
        this.onPool?.(poolFromPayload(env.payload), this.now(), env);
        return;
      }
      case "AdminAck": {
        this.onAdminAck?.(env.payload);
        return;
      }
      case "Error": {
        this.onError?.(env.payload);
        return;
      }
      case "InstructionDispatch": {
        this.onDispatch?.(env.payload);
        return;
      }
      default:
        return;
    }
  }

  handleClose(): void {
    if (this.status !== "closed") {
      this.status = "closed";
      this.onClosed?.();
    }
  }

  close(): void {
    this.transport.close();
    this.handleClose();
  }
}
