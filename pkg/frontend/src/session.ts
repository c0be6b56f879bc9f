import { decode, encode, ReportMsg, ServerMsg } from "./protocol.js";

export type Phase = "connecting" | "running" | "finished" | "error";

export interface Transport {
  send(data: string): void;
}

export interface TracePoint {
  t: number;
  x: number;
}

// Error codes after which the server will not continue the session.
const TERMINAL_ERRORS = new Set(["expected_hello", "unknown_preset", "too_short"]);

/**
 * Client-side session state machine.
 *
 * The display loop calls `frame(nowMs)` once per animation frame; that is the
 * only place an `hp` message can leave, so outgoing samples are at most one
 * per frame and their timestamps are strictly increasing.  Incoming `vp`
 * positions are buffered for rendering and kept verbatim for the trace view.
 */
export class ClientSession {
  phase: Phase = "connecting";
  tickPeriod = 0.04;
  domain: [number, number] = [-0.5, 0.5];
  hpPosition = 0;
  lastVp: TracePoint | null = null;
  hpTrace: TracePoint[] = [];
  vpTrace: TracePoint[] = [];
  report: ReportMsg | null = null;
  errorCode: string | null = null;

  private lastSentT = -Infinity;
  private startMs: number | null = null;

  constructor(private transport: Transport, readonly preset: string) {}

  hello(): void {
    this.transport.send(encode({ type: "hello", config_preset: this.preset }));
  }

  stop(): void {
    this.transport.send(encode({ type: "stop" }));
  }

  /** Update the local human position (already normalized by the track map). */
  onPointer(x: number): void {
    const [lo, hi] = this.domain;
    this.hpPosition = Math.min(Math.max(x, lo), hi);
  }

  /** Once per display frame: send the current human position. */
  frame(nowMs: number): void {
    if (this.phase !== "running") return;
    if (this.startMs === null) this.startMs = nowMs;
    const t = (nowMs - this.startMs) / 1000;
    if (t <= this.lastSentT) return;
    this.lastSentT = t;
    this.transport.send(encode({ type: "hp", t, x: this.hpPosition }));
    this.hpTrace.push({ t, x: this.hpPosition });
  }

  onMessage(raw: string): ServerMsg | null {
    const msg = decode(raw);
    if (!msg) return null;
    switch (msg.type) {
      case "ready":
        this.tickPeriod = msg.T;
        this.domain = msg.domain;
        this.phase = "running";
        break;
      case "vp":
        this.lastVp = { t: msg.t, x: msg.x };
        this.vpTrace.push({ t: msg.t, x: msg.x });
        break;
      case "report":
        this.report = msg;
        this.phase = "finished";
        break;
      case "error":
        this.errorCode = msg.code;
        if (TERMINAL_ERRORS.has(msg.code)) this.phase = "error";
        break;
    }
    return msg;
  }

  onDisconnect(): void {
    if (this.phase !== "finished") {
      this.phase = "error";
      this.errorCode = this.errorCode ?? "disconnected";
    }
  }
}
