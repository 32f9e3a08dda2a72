/**
 * Semilog error-rate figure rendering.  Pure: the SVG string is a function
 * of the parsed curve data and the plot options only; nothing is recomputed
 * from the underlying physics.
 */

import { CurveData, CurvePoint } from "./schema";

export interface PlotOptions {
  title?: string;
  slopeRef?: number;          // draws a dashed reference line of slope -d
  width?: number;
  height?: number;
}

export class PlotError extends Error {}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { left: 64, right: 200, top: 44, bottom: 48 };

export function curveLabel(curve: CurveData): string {
  return `${curve.scheme}/${curve.decoder}`;
}

export function fitSlope(points: CurvePoint[]): number | null {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const pt of points) {
    if (pt.failures > 0) {
      xs.push(pt.snrDb / 10);
      ys.push(Math.log10(pt.probability));
    }
  }
  if (xs.length < 2) {
    return null;
  }
  const n = xs.length;
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < n; i++) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx === 0 ? null : sxy / sxx;
}

function niceTicks(lo: number, hi: number): number[] {
  const span = hi - lo;
  const step = span > 30 ? 10 : span > 12 ? 5 : span > 4 ? 2 : 1;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-9; t += step) {
    ticks.push(t);
  }
  return ticks;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderSvg(curves: CurveData[], options: PlotOptions = {}): string {
  if (curves.length === 0) {
    throw new PlotError("no curves to plot");
  }
  const width = options.width ?? 760;
  const height = options.height ?? 520;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const dropped: string[] = [];
  const plottable = curves.map((curve) => {
    const kept = curve.points.filter((pt) => pt.probability > 0);
    for (const pt of curve.points) {
      if (pt.probability <= 0) {
        dropped.push(`${curveLabel(curve)} @ ${pt.snrDb} dB (0/${pt.trials})`);
      }
    }
    return { curve, kept };
  });
  const allKept = plottable.flatMap((c) => c.kept);
  if (allKept.length === 0) {
    throw new PlotError("every point has zero failures; nothing to draw on a log axis");
  }

  const xLo = Math.min(...allKept.map((p) => p.snrDb));
  const xHi = Math.max(...allKept.map((p) => p.snrDb));
  const xPad = xLo === xHi ? 1 : 0;
  const yLoDecade = Math.floor(Math.log10(Math.min(...allKept.map((p) => p.probability))));
  const yHiDecade = Math.ceil(Math.log10(Math.max(...allKept.map((p) => p.probability))));
  const yHi = Math.max(yHiDecade, yLoDecade + 1);

  const sx = (snr: number) =>
    MARGIN.left + ((snr - (xLo - xPad)) / ((xHi + xPad) - (xLo - xPad))) * plotW;
  const sy = (p: number) =>
    MARGIN.top + ((yHi - Math.log10(p)) / (yHi - yLoDecade)) * plotH;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (options.title) {
    parts.push(`<text x="${MARGIN.left}" y="24" font-family="sans-serif" font-size="15" font-weight="bold">${esc(options.title)}</text>`);
  }

  // gridlines and axes
  for (let d = yLoDecade; d <= yHi; d++) {
    const y = sy(Math.pow(10, d));
    parts.push(`<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#ddd" stroke-width="1"/>`);
    parts.push(`<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end" font-family="sans-serif" font-size="11">1e${d}</text>`);
  }
  for (const t of niceTicks(xLo - xPad, xHi + xPad)) {
    const x = sx(t);
    parts.push(`<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#eee" stroke-width="1"/>`);
    parts.push(`<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">${t}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`);
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">SNR (dB)</text>`);
  parts.push(`<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">probability</text>`);

  // slope reference line, anchored at the first plotted point
  if (options.slopeRef !== undefined && options.slopeRef > 0) {
    const anchor = plottable.find((c) => c.kept.length > 0)!.kept[0];
    const d = options.slopeRef;
    const p2 = anchor.probability * Math.pow(10, (-d * (xHi - anchor.snrDb)) / 10);
    const p2c = Math.max(p2, Math.pow(10, yLoDecade));
    const snr2 = anchor.snrDb + (Math.log10(anchor.probability / p2c) * 10) / d;
    parts.push(`<line x1="${sx(anchor.snrDb)}" y1="${sy(anchor.probability)}" x2="${sx(snr2)}" y2="${sy(p2c)}" stroke="#555" stroke-width="1.5" stroke-dasharray="6 4" class="slope-ref"/>`);
    parts.push(`<text x="${sx(snr2) + 4}" y="${sy(p2c)}" font-family="sans-serif" font-size="11" fill="#555">slope -${d}</text>`);
  }

  // curves
  plottable.forEach(({ curve, kept }, idx) => {
    if (kept.length === 0) {
      return;
    }
    const color = COLORS[idx % COLORS.length];
    const pts = kept.map((p) => `${sx(p.snrDb)},${sy(p.probability)}`).join(" ");
    parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2" class="curve"/>`);
    for (const p of kept) {
      parts.push(`<circle cx="${sx(p.snrDb)}" cy="${sy(p.probability)}" r="3.5" fill="${color}"/>`);
    }
    const slope = fitSlope(kept);
    const slopeTxt = slope === null ? "" : `  (slope ${slope.toFixed(2)})`;
    const ly = MARGIN.top + 16 + idx * 18;
    const lx = MARGIN.left + plotW + 12;
    parts.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 28}" y="${ly}" font-family="sans-serif" font-size="12">${esc(curveLabel(curve) + slopeTxt)}</text>`);
  });

  // sidebar note for zero-failure points dropped from the log plot
  if (dropped.length > 0) {
    const baseY = MARGIN.top + 16 + plottable.length * 18 + 14;
    parts.push(`<text x="${MARGIN.left + plotW + 12}" y="${baseY}" font-family="sans-serif" font-size="11" fill="#666" class="dropped-note">zero-failure points omitted:</text>`);
    dropped.forEach((note, i) => {
      parts.push(`<text x="${MARGIN.left + plotW + 12}" y="${baseY + 14 + i * 14}" font-family="sans-serif" font-size="10" fill="#666">${esc(note)}</text>`);
    });
  }

  parts.push("</svg>");
  return parts.join("\n");
}
