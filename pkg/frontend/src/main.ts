import { buildReportView, renderReport } from "./report.js";
import { FrameLayout, renderFrame } from "./render.js";
import { ClientSession } from "./session.js";
import { pointerToPosition } from "./track.js";

function layoutFor(canvas: HTMLCanvasElement): FrameLayout {
  const margin = 40;
  return {
    width: canvas.width,
    height: canvas.height,
    track: { left: margin, width: canvas.width - 2 * margin },
    trackY: canvas.height / 2,
    radius: 14,
  };
}

function statusLine(text: string): void {
  document.getElementById("status")!.textContent = text;
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const defaultServer = `${window.location.protocol === "https:" ? "wss" : "ws"}://${window.location.host}/ws`;
  const server = params.get("server") ?? defaultServer;
  const preset = params.get("preset") ?? "default";

  const canvas = document.getElementById("game") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const reportEl = document.getElementById("report")!;
  let layout = layoutFor(canvas);

  const ws = new WebSocket(server);
  const session = new ClientSession({ send: (d) => ws.send(d) }, preset);

  ws.addEventListener("open", () => {
    session.hello();
    statusLine(`connected to ${server} (preset ${preset}) — drag the blue circle`);
  });
  ws.addEventListener("message", (ev) => {
    const msg = session.onMessage(String(ev.data));
    if (msg?.type === "report") {
      statusLine("session finished");
      renderReport(reportEl as HTMLElement, buildReportView(session.report));
    } else if (msg?.type === "error" && session.phase === "error") {
      statusLine(`server error: ${msg.code}`);
    }
  });
  ws.addEventListener("close", () => {
    session.onDisconnect();
    if (session.phase === "error") statusLine("disconnected");
  });

  let dragging = false;
  const updatePointer = (ev: PointerEvent) => {
    const rect = canvas.getBoundingClientRect();
    // vertical pointer motion is ignored; the game is one-dimensional
    session.onPointer(pointerToPosition(ev.clientX - rect.left, layout.track));
  };
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    canvas.setPointerCapture(ev.pointerId);
    updatePointer(ev);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragging) updatePointer(ev);
  });
  const release = () => {
    dragging = false;
  };
  canvas.addEventListener("pointerup", release);
  canvas.addEventListener("pointercancel", release);

  document.getElementById("stop")!.addEventListener("click", () => session.stop());

  const loop = (nowMs: number) => {
    session.frame(nowMs);
    renderFrame(ctx, layout, session);
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);

  window.addEventListener("resize", () => {
    layout = layoutFor(canvas);
  });
}

main();
