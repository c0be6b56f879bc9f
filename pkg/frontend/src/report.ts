// Post-session report: scalar metrics, a polar histogram of the relative
// phase density, and a 2-D scatter of the MDS embedding.

export interface PolarPoint {
  angle: number;
  density: number;
}

export interface MdsPoint {
  x: number;
  y: number;
  label: string;
}

export interface ReportViewModel {
  fields: { label: string; value: string }[];
  phase: PolarPoint[];
  mds: MdsPoint[];
  /** Pretty-printed source JSON when the report is malformed; null otherwise. */
  raw: string | null;
}

const MDS_LABEL_NAMES: Record<string, string> = {
  sigma_vp: "σ_VP",
  sigma_hp: "σ_HP",
  nu: "ν",
  mu: "μ",
  sigma1: "σ₁",
  sigma2: "σ₂",
  nu1: "ν₁",
  nu2: "ν₂",
};

function fmt(v: number): string {
  return v.toFixed(3);
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function numberArray(v: unknown): number[] | null {
  if (!Array.isArray(v) || !v.every(isNum)) return null;
  return v as number[];
}

function fallback(report: unknown): ReportViewModel {
  return { fields: [], phase: [], mds: [], raw: JSON.stringify(report, null, 2) };
}

/** Extract a renderable view of a report message; malformed input falls back to raw JSON. */
export function buildReportView(report: unknown): ReportViewModel {
  if (typeof report !== "object" || report === null) return fallback(report);
  const r = report as Record<string, unknown>;

  const scalars: [string, string][] = [
    ["e_p", "position error e_p"],
    ["emd_sigma1_nu1", "EMD σ₁ vs played"],
    ["emd_sigma2_nu2", "EMD σ₂ vs played"],
    ["emd_nu1_nu2", "EMD between players"],
  ];
  const fields: { label: string; value: string }[] = [];
  for (const [key, label] of scalars) {
    const v = r[key];
    if (v === null && key === "emd_sigma2_nu2") {
      fields.push({ label, value: "n/a" });
      continue;
    }
    if (!isNum(v)) return fallback(report);
    fields.push({ label, value: fmt(v) });
  }
  if (isNum(r.phase_emd_vs_ref)) {
    fields.push({ label: "phase EMD vs reference", value: fmt(r.phase_emd_vs_ref) });
  }

  const pp = r.phase_pdf as Record<string, unknown> | undefined;
  const grid = pp ? numberArray(pp.grid) : null;
  const density = pp ? numberArray(pp.density) : null;
  if (!grid || !density || grid.length !== density.length || grid.length === 0) {
    return fallback(report);
  }
  const phase = grid.map((angle, i) => ({ angle, density: density[i] }));

  const mdsRaw = r.mds;
  if (!Array.isArray(mdsRaw) || mdsRaw.length === 0) return fallback(report);
  const labels = Array.isArray(r.mds_labels) ? (r.mds_labels as unknown[]) : [];
  const mds: MdsPoint[] = [];
  for (let i = 0; i < mdsRaw.length; i++) {
    const row = numberArray(mdsRaw[i]);
    if (!row || row.length !== 2) return fallback(report);
    const key = typeof labels[i] === "string" ? (labels[i] as string) : `p${i + 1}`;
    mds.push({ x: row[0], y: row[1], label: MDS_LABEL_NAMES[key] ?? key });
  }
  return { fields, phase, mds, raw: null };
}

function polarCanvas(vm: ReportViewModel, size = 220): HTMLCanvasElement {
  const canvas = document.createElement("canvas");
  canvas.width = size;
  canvas.height = size;
  const ctx = canvas.getContext("2d")!;
  const cx = size / 2;
  const cy = size / 2;
  const r0 = 18;
  const rMax = size / 2 - 8;
  const peak = Math.max(...vm.phase.map((p) => p.density), 1e-12);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.arc(cx, cy, r0, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.strokeStyle = "#4a6fa5";
  ctx.beginPath();
  for (let i = 0; i < vm.phase.length; i++) {
    const { angle, density } = vm.phase[i];
    const r = r0 + ((rMax - r0) * density) / peak;
    const x = cx + r * Math.cos(angle);
    const y = cy - r * Math.sin(angle);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.stroke();
  return canvas;
}

function scatterCanvas(vm: ReportViewModel, size = 220): HTMLCanvasElement {
  const canvas = document.createElement("canvas");
  canvas.width = size;
  canvas.height = size;
  const ctx = canvas.getContext("2d")!;
  const xs = vm.mds.map((p) => p.x);
  const ys = vm.mds.map((p) => p.y);
  const span = Math.max(
    Math.max(...xs) - Math.min(...xs),
    Math.max(...ys) - Math.min(...ys),
    1e-9,
  );
  const pad = 28;
  const scale = (size - 2 * pad) / span;
  const x0 = (Math.max(...xs) + Math.min(...xs)) / 2;
  const y0 = (Math.max(...ys) + Math.min(...ys)) / 2;
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  for (const p of vm.mds) {
    const px = size / 2 + (p.x - x0) * scale;
    const py = size / 2 - (p.y - y0) * scale;
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, 2 * Math.PI);
    ctx.fillStyle = p.label.includes("σ") ? "#c04a4a" : "#4a6fa5";
    ctx.fill();
    ctx.fillStyle = "#222";
    ctx.fillText(p.label, px, py - 9);
  }
  return canvas;
}

/** Render the report into a container element (cleared first). */
export function renderReport(container: HTMLElement, vm: ReportViewModel): void {
  container.textContent = "";
  if (vm.raw !== null) {
    const pre = document.createElement("pre");
    pre.className = "report-raw";
    pre.textContent = vm.raw;
    container.appendChild(pre);
    return;
  }
  const table = document.createElement("table");
  table.className = "report-fields";
  for (const field of vm.fields) {
    const row = table.insertRow();
    row.insertCell().textContent = field.label;
    row.insertCell().textContent = field.value;
  }
  container.appendChild(table);

  const plots = document.createElement("div");
  plots.className = "report-plots";
  const phaseBox = document.createElement("figure");
  phaseBox.appendChild(polarCanvas(vm));
  const phaseCaption = document.createElement("figcaption");
  phaseCaption.textContent = "relative phase density";
  phaseBox.appendChild(phaseCaption);
  const mdsBox = document.createElement("figure");
  mdsBox.appendChild(scatterCanvas(vm));
  const mdsCaption = document.createElement("figcaption");
  mdsCaption.textContent = "velocity PDFs (MDS)";
  mdsBox.appendChild(mdsCaption);
  plots.appendChild(phaseBox);
  plots.appendChild(mdsBox);
  container.appendChild(plots);
}
