/**
 * Scatter-plus-fitted-line geometry for the dataset preview.  All the
 * numbers here are affine rescalings of the service payload into pixel
 * space; nothing statistical is computed on the client.
 */

import { PreviewPayload } from "./api.js";

export interface Pt {
  x: number;
  y: number;
}

export interface Tick {
  px: number;
  label: string;
}

export interface PlotGeometry {
  width: number;
  height: number;
  /** Pixel bounds of the data region: left, top, right, bottom. */
  frame: [number, number, number, number];
  points: Pt[];
  line: Pt[];
  psiMarkerX: number | null;
  xTicks: Tick[];
  yTicks: Tick[];
}

const MARGIN = { left: 52, right: 16, top: 14, bottom: 34 };

/** Round tick positions for a linear axis covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const residual = rawStep / magnitude;
  const step = magnitude * (residual < 1.5 ? 1 : residual < 3.5 ? 2 : residual < 7.5 ? 5 : 10);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    ticks.push(Number(t.toFixed(12)));
  }
  return ticks;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (hi === lo) return [lo - 1, hi + 1];
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}

export function computeGeometry(payload: PreviewPayload, width = 560, height = 360): PlotGeometry {
  const segs = payload.fit.segments;
  const [xLo, xHi] = extent([...payload.z, ...segs.map((s) => s[0])]);
  const [yLo, yHi] = extent([...payload.y, ...segs.map((s) => s[1])]);

  const left = MARGIN.left;
  const right = width - MARGIN.right;
  const top = MARGIN.top;
  const bottom = height - MARGIN.bottom;
  const sx = (v: number) => left + ((v - xLo) / (xHi - xLo)) * (right - left);
  const sy = (v: number) => bottom - ((v - yLo) / (yHi - yLo)) * (bottom - top);

  return {
    width,
    height,
    frame: [left, top, right, bottom],
    points: payload.z.map((z, i) => ({ x: sx(z), y: sy(payload.y[i] ?? 0) })),
    line: segs.map(([x, y]) => ({ x: sx(x), y: sy(y) })),
    psiMarkerX: payload.fit.psi_hat === null ? null : sx(payload.fit.psi_hat),
    xTicks: niceTicks(xLo, xHi).map((t) => ({ px: sx(t), label: String(t) })),
    yTicks: niceTicks(yLo, yHi).map((t) => ({ px: sy(t), label: String(t) })),
  };
}

/**
 * Vertical pixel distance from a point to the polyline, treating the
 * polyline as a function of x.  Infinity outside its x-range.
 */
export function verticalGapToPolyline(pt: Pt, line: Pt[]): number {
  for (let i = 0; i + 1 < line.length; i++) {
    const a = line[i]!;
    const b = line[i + 1]!;
    const [lo, hi] = a.x <= b.x ? [a.x, b.x] : [b.x, a.x];
    if (pt.x < lo - 1e-9 || pt.x > hi + 1e-9) continue;
    const t = b.x === a.x ? 0 : (pt.x - a.x) / (b.x - a.x);
    return Math.abs(a.y + t * (b.y - a.y) - pt.y);
  }
  return Infinity;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Render the geometry as standalone SVG markup. */
export function renderSvg(geom: PlotGeometry): string {
  const [left, top, right, bottom] = geom.frame;
  const parts: string[] = [];
  parts.push(
    `<svg class="preview-plot" viewBox="0 0 ${geom.width} ${geom.height}" ` +
      `width="${geom.width}" height="${geom.height}" role="img" ` +
      `aria-label="simulated dataset with fitted segmented line">`,
  );

  parts.push(`<g class="axis">`);
  parts.push(
    `<line x1="${left}" y1="${bottom}" x2="${right}" y2="${bottom}"/>`,
    `<line x1="${left}" y1="${top}" x2="${left}" y2="${bottom}"/>`,
  );
  for (const t of geom.xTicks) {
    parts.push(
      `<line x1="${t.px}" y1="${bottom}" x2="${t.px}" y2="${bottom + 5}"/>`,
      `<text x="${t.px}" y="${bottom + 18}" text-anchor="middle">${esc(t.label)}</text>`,
    );
  }
  for (const t of geom.yTicks) {
    parts.push(
      `<line x1="${left - 5}" y1="${t.px}" x2="${left}" y2="${t.px}"/>`,
      `<text x="${left - 8}" y="${t.px + 4}" text-anchor="end">${esc(t.label)}</text>`,
    );
  }
  parts.push(`</g>`);

  if (geom.psiMarkerX !== null) {
    parts.push(
      `<line class="psi-marker" x1="${geom.psiMarkerX}" y1="${top}" ` +
        `x2="${geom.psiMarkerX}" y2="${bottom}"/>`,
    );
  }

  const linePts = geom.line.map((p) => `${p.x},${p.y}`).join(" ");
  parts.push(`<polyline class="fit-line" fill="none" points="${linePts}"/>`);

  for (const p of geom.points) {
    parts.push(`<circle class="data-point" cx="${p.x}" cy="${p.y}" r="3"/>`);
  }

  parts.push(`</svg>`);
  return parts.join("");
}
