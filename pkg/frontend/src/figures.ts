/**
 * Figure builders for the four sweep plot kinds.
 *
 * Everything here is presentation: rows are grouped, averaged over seeds,
 * and drawn.  Rate metrics are never recomputed; the only arithmetic beyond
 * averaging is differencing columns that the figure itself is defined as
 * (shaping gain = US minus PS required SNR, delta GMI = all-symbols minus
 * pilot-only GMI).
 *
 * Line style follows the usual convention for these plots: shaped (PS)
 * formats dashed, uniform (US) formats solid.
 */

import { SweepRow } from "./csv.js";
import { ChartSpec, PALETTE, Series, renderChart } from "./svg.js";

export const FIGURE_KINDS = [
  "snr-vs-linewidth",
  "gain-vs-linewidth",
  "air-vs-pilot-ratio",
  "dgmi-vs-pilot-ratio",
  "snr-vs-pilot-ratio",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export class FigureError extends Error {}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function groupBy<T>(items: T[], key: (item: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const list = out.get(k);
    if (list) list.push(item);
    else out.set(k, [item]);
  }
  return out;
}

function isShaped(label: string): boolean {
  return label.startsWith("PS");
}

function kHz(hz: number): number {
  return hz / 1000;
}

function pct(ratio: number): number {
  return 100 * ratio;
}

function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

/** Mean of `value` per (series key, x), one line per series key. */
function linesFrom(
  rows: SweepRow[],
  seriesKey: (r: SweepRow) => string,
  x: (r: SweepRow) => number,
  y: (r: SweepRow) => number,
): Series[] {
  const bySeries = groupBy(rows, seriesKey);
  const labels = [...bySeries.keys()].sort();
  return labels.map((label, i) => {
    const byX = groupBy(bySeries.get(label)!, (r) => String(x(r)));
    const points: Array<[number, number]> = [...byX.values()].map((group) => [
      x(group[0]),
      mean(group.map(y)),
    ]);
    return {
      label,
      points,
      color: seriesColor(i),
      dashed: isShaped(label),
    };
  });
}

function snrVsLinewidth(rows: SweepRow[]): ChartSpec {
  return {
    title: "Required SNR at the FEC threshold vs laser linewidth",
    xLabel: "combined linewidth (kHz)",
    yLabel: "required SNR (dB)",
    series: linesFrom(rows, (r) => r.format, (r) => kHz(r.linewidth_hz), (r) => r.snr_db),
  };
}

/** Pairs formats by equal information rate and plots US minus PS SNR. */
function gainVsLinewidth(rows: SweepRow[]): ChartSpec {
  const byIr = groupBy(rows, (r) => r.ir_bits.toPrecision(9));
  const series: Series[] = [];
  let colorIndex = 0;
  for (const key of [...byIr.keys()].sort()) {
    const group = byIr.get(key)!;
    const ps = group.filter((r) => isShaped(r.format));
    const us = group.filter((r) => !isShaped(r.format));
    if (ps.length === 0 || us.length === 0) continue;
    const psName = ps[0].format;
    const usName = us[0].format;
    const psByLw = groupBy(ps, (r) => String(r.linewidth_hz));
    const usByLw = groupBy(us, (r) => String(r.linewidth_hz));
    const points: Array<[number, number]> = [];
    for (const lw of psByLw.keys()) {
      const other = usByLw.get(lw);
      if (!other) continue;
      points.push([
        kHz(Number(lw)),
        mean(other.map((r) => r.snr_db)) - mean(psByLw.get(lw)!.map((r) => r.snr_db)),
      ]);
    }
    if (points.length > 0) {
      series.push({
        label: `${psName} vs ${usName}`,
        points,
        color: seriesColor(colorIndex),
        dashed: true,
      });
      colorIndex += 1;
    }
  }
  if (series.length === 0) {
    throw new FigureError(
      "no equal-information-rate PS/US pairs found; is this a linewidth sweep CSV?",
    );
  }
  return {
    title: "Shaping gain vs laser linewidth",
    xLabel: "combined linewidth (kHz)",
    yLabel: "shaping gain (dB)",
    series,
  };
}

function fmtLw(hz: number): string {
  return `${kHz(hz)} kHz`;
}

function airVsPilotRatio(rows: SweepRow[]): ChartSpec {
  return {
    title: "Achievable information rate vs pilot ratio",
    xLabel: "pilot ratio (%)",
    yLabel: "AIR (bit/QAM symbol)",
    series: linesFrom(
      rows,
      (r) => `${r.format} ${fmtLw(r.linewidth_hz)}`,
      (r) => pct(r.pilot_ratio),
      (r) => r.air,
    ),
  };
}

function snrVsPilotRatio(rows: SweepRow[]): ChartSpec {
  return {
    title: "Required SNR at the FEC threshold vs pilot ratio",
    xLabel: "pilot ratio (%)",
    yLabel: "required SNR (dB)",
    series: linesFrom(
      rows,
      (r) => `${r.format} ${fmtLw(r.linewidth_hz)}`,
      (r) => pct(r.pilot_ratio),
      (r) => r.snr_db,
    ),
  };
}

/** GMI(update at all symbols) minus GMI(update at pilots only), per seed. */
function dgmiVsPilotRatio(rows: SweepRow[]): ChartSpec {
  const havePolicies = new Set(rows.map((r) => r.policy));
  if (!havePolicies.has("all") || !havePolicies.has("pilot-only")) {
    throw new FigureError(
      "delta-GMI figure needs rows for both 'all' and 'pilot-only' policies",
    );
  }
  const paired = groupBy(
    rows,
    (r) => `${r.format}|${r.linewidth_hz}|${r.pilot_ratio}|${r.seed}`,
  );
  type DeltaRow = { format: string; linewidth_hz: number; pilot_ratio: number; delta: number };
  const deltas: DeltaRow[] = [];
  for (const group of paired.values()) {
    const all = group.filter((r) => r.policy === "all");
    const po = group.filter((r) => r.policy === "pilot-only");
    if (all.length !== 1 || po.length !== 1) continue;
    deltas.push({
      format: all[0].format,
      linewidth_hz: all[0].linewidth_hz,
      pilot_ratio: all[0].pilot_ratio,
      delta: all[0].gmi - po[0].gmi,
    });
  }
  if (deltas.length === 0) {
    throw new FigureError("no (all, pilot-only) row pairs share format/linewidth/ratio/seed");
  }
  const bySeries = groupBy(deltas, (d) => `${d.format} ${fmtLw(d.linewidth_hz)}`);
  const labels = [...bySeries.keys()].sort();
  const series: Series[] = labels.map((label, i) => {
    const byX = groupBy(bySeries.get(label)!, (d) => String(d.pilot_ratio));
    const points: Array<[number, number]> = [...byX.values()].map((group) => [
      pct(group[0].pilot_ratio),
      mean(group.map((d) => d.delta)),
    ]);
    return { label, points, color: seriesColor(i), dashed: isShaped(label) };
  });
  return {
    title: "GMI advantage of updating at all symbols vs pilot ratio",
    xLabel: "pilot ratio (%)",
    yLabel: "delta GMI (bit/QAM symbol)",
    series,
  };
}

export function buildFigure(kind: FigureKind, rows: SweepRow[]): ChartSpec {
  if (rows.length === 0) {
    throw new FigureError("no rows to plot");
  }
  switch (kind) {
    case "snr-vs-linewidth":
      return snrVsLinewidth(rows);
    case "gain-vs-linewidth":
      return gainVsLinewidth(rows);
    case "air-vs-pilot-ratio":
      return airVsPilotRatio(rows);
    case "snr-vs-pilot-ratio":
      return snrVsPilotRatio(rows);
    case "dgmi-vs-pilot-ratio":
      return dgmiVsPilotRatio(rows);
  }
}

export function renderFigure(kind: FigureKind, rows: SweepRow[]): string {
  return renderChart(buildFigure(kind, rows));
}
