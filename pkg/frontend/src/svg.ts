/**
 * Minimal deterministic SVG line-chart builder.
 *
 * No dependencies, no randomness, no timestamps: equal inputs produce
 * byte-identical output.  Numbers are serialized with fixed precision.
 */

export interface Series {
  label: string;
  points: Array<[number, number]>; // x, y in data coordinates
  color: string;
  dashed: boolean;
  marker?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logX?: boolean;
  width?: number;
  height?: number;
}

const MARGIN = { top: 44, right: 24, bottom: 52, left: 64 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];

function fmt(v: number): string {
  // fixed, locale-independent coordinate formatting
  return v.toFixed(2).replace(/\.00$/, "").replace(/(\.\d)0$/, "$1");
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1).replace("e+", "e");
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/0+$/, "").replace(/\.$/, "") : s;
}

/** Round limits out to a "nice" step: 1/2/2.5/5 times a power of ten. */
export function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) {
    hi = lo + 1;
    lo -= 1;
  }
  const span = hi - lo;
  const rawStep = span / Math.max(target - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = 10 * mag;
  for (const m of [1, 2, 2.5, 5]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const width = spec.width ?? 720;
  const height = spec.height ?? 480;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = spec.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p[1]));
  if (xs.length === 0) {
    throw new Error("nothing to plot: every series is empty");
  }
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  const yPad = (yHi - yLo || Math.abs(yHi) || 1) * 0.08;
  yLo -= yPad;
  yHi += yPad;
  if (xLo === xHi) {
    xLo -= 1;
    xHi += 1;
  }

  const xTicks = niceTicks(xLo, xHi);
  const yTicks = niceTicks(yLo, yHi);
  // ticks may widen the visible range
  xLo = Math.min(xLo, xTicks[0]);
  xHi = Math.max(xHi, xTicks[xTicks.length - 1]);
  yLo = Math.min(yLo, yTicks[0]);
  yHi = Math.max(yHi, yTicks[yTicks.length - 1]);

  const px = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const py = (y: number) => MARGIN.top + (1 - (y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16" fill="#222">${esc(spec.title)}</text>`,
  );

  // grid and ticks
  for (const t of xTicks) {
    const x = fmt(px(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#e5e5e5" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-family="sans-serif" font-size="11" fill="#444">${fmtTick(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const y = fmt(py(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#e5e5e5" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(py(t) + 4)}" text-anchor="end" font-family="sans-serif" font-size="11" fill="#444">${fmtTick(t)}</text>`,
    );
  }
  // frame
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  // axis labels
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 14}" text-anchor="middle" font-family="sans-serif" font-size="13" fill="#222">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" fill="#222" transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${esc(spec.yLabel)}</text>`,
  );

  for (const s of spec.series) {
    const pts = [...s.points].sort((a, b) => a[0] - b[0]);
    const path = pts.map((p) => `${fmt(px(p[0]))},${fmt(py(p[1]))}`).join(" ");
    const dash = s.dashed ? ' stroke-dasharray="7 4"' : "";
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${s.color}" stroke-width="1.8"${dash}/>`,
    );
    if (s.marker !== false) {
      for (const p of pts) {
        parts.push(
          `<circle cx="${fmt(px(p[0]))}" cy="${fmt(py(p[1]))}" r="2.6" fill="${s.color}"/>`,
        );
      }
    }
  }

  // legend, top-right inside the frame
  let ly = MARGIN.top + 16;
  for (const s of spec.series) {
    const x0 = MARGIN.left + plotW - 190;
    const dash = s.dashed ? ' stroke-dasharray="7 4"' : "";
    parts.push(
      `<line x1="${x0}" y1="${ly - 4}" x2="${x0 + 28}" y2="${ly - 4}" stroke="${s.color}" stroke-width="1.8"${dash}/>`,
    );
    parts.push(
      `<text x="${x0 + 34}" y="${ly}" font-family="sans-serif" font-size="11" fill="#222">${esc(s.label)}</text>`,
    );
    ly += 16;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
