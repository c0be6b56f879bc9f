import { ClientSession } from "./session.js";
import { positionToPixel, TrackGeometry } from "./track.js";

// Subset of CanvasRenderingContext2D the renderer touches, so tests can pass
// a recording stub.
export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  textAlign: CanvasTextAlign;
}

export interface FrameLayout {
  width: number;
  height: number;
  track: TrackGeometry;
  trackY: number;
  radius: number;
}

export const HP_COLOR = "#2b6fd4";
export const VP_COLOR = "#2da14c";

function circle(ctx: DrawContext, x: number, y: number, r: number, color: string): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fillStyle = color;
  ctx.fill();
}

/**
 * Draw one frame: the track, the human circle at the local position and the
 * model circle at the last received position (at 0 until one arrives).  On a
 * dropped connection the circles grey out under an error banner; after the
 * session finishes the last frame stays up while the report panel takes over.
 */
export function renderFrame(ctx: DrawContext, layout: FrameLayout, session: ClientSession): void {
  const { track, trackY, radius } = layout;
  ctx.clearRect(0, 0, layout.width, layout.height);

  ctx.globalAlpha = session.phase === "error" ? 0.35 : 1.0;
  ctx.beginPath();
  ctx.moveTo(track.left, trackY);
  ctx.lineTo(track.left + track.width, trackY);
  ctx.strokeStyle = "#888";
  ctx.lineWidth = 2;
  ctx.stroke();

  const vpX = session.lastVp ? session.lastVp.x : 0;
  circle(ctx, positionToPixel(vpX, track), trackY, radius, VP_COLOR);
  circle(ctx, positionToPixel(session.hpPosition, track), trackY, radius, HP_COLOR);
  ctx.globalAlpha = 1.0;

  if (session.phase === "error") {
    ctx.fillStyle = "#b3261e";
    ctx.font = "16px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(`connection error: ${session.errorCode ?? "unknown"}`, layout.width / 2, trackY - 3 * radius);
  }
}
