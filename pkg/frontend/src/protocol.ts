// Wire protocol of the live server: newline-delimited JSON, one object per
// websocket frame.

export interface HelloMsg {
  type: "hello";
  config_preset: string;
}

export interface HpMsg {
  type: "hp";
  t: number;
  x: number;
}

export interface StopMsg {
  type: "stop";
}

export type ClientMsg = HelloMsg | HpMsg | StopMsg;

export interface ReadyMsg {
  type: "ready";
  T: number;
  domain: [number, number];
}

export interface VpMsg {
  type: "vp";
  t: number;
  x: number;
}

export interface ReportMsg {
  type: "report";
  [key: string]: unknown;
}

export interface ErrorMsg {
  type: "error";
  code: string;
}

export type ServerMsg = ReadyMsg | VpMsg | ReportMsg | ErrorMsg;

export function encode(msg: ClientMsg): string {
  return JSON.stringify(msg) + "\n";
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function decode(raw: string): ServerMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const msg = obj as Record<string, unknown>;
  switch (msg.type) {
    case "ready": {
      const domain = msg.domain;
      if (
        isFiniteNumber(msg.T) &&
        Array.isArray(domain) &&
        domain.length === 2 &&
        domain.every(isFiniteNumber)
      ) {
        return { type: "ready", T: msg.T, domain: [domain[0], domain[1]] };
      }
      return null;
    }
    case "vp":
      if (isFiniteNumber(msg.t) && isFiniteNumber(msg.x)) {
        return { type: "vp", t: msg.t, x: msg.x };
      }
      return null;
    case "report":
      return msg as unknown as ReportMsg;
    case "error":
      if (typeof msg.code === "string") return { type: "error", code: msg.code };
      return null;
    default:
      return null;
  }
}
