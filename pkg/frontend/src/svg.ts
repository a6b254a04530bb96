/** Minimal deterministic SVG plotting: fixed palette, no randomness, so a
 * given input always renders byte-identical output. */

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
  "#bcbd22",
  "#e377c2",
];

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const MARGIN: Margin = { top: 30, right: 20, bottom: 45, left: 60 };

export interface Scale {
  (value: number): number;
  ticks: number[];
}

function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * factor;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  if (hi === lo) {
    hi = lo + 1;
  }
  const f = ((value: number) => outLo + ((value - lo) / (hi - lo)) * (outHi - outLo)) as Scale;
  f.ticks = niceTicks(lo, hi);
  return f;
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const safeLo = Math.max(lo, 1e-300);
  const safeHi = Math.max(hi, safeLo * 10);
  const a = Math.log10(safeLo);
  const b = Math.log10(safeHi);
  const f = ((value: number) =>
    outLo + ((Math.log10(Math.max(value, 1e-300)) - a) / (b - a)) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.floor(a); e <= Math.ceil(b); e += 1) {
    ticks.push(Math.pow(10, e));
  }
  f.ticks = ticks;
  return f;
}

export function fmt(value: number): string {
  if (value === 0) {
    return "0";
  }
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-3) {
    return value.toExponential(0);
  }
  return Number(value.toPrecision(6)).toString();
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
  step?: boolean;
  markers?: boolean;
}

export interface AxesSpec {
  width?: number;
  height?: number;
  title: string;
  xLabel: string;
  yLabel: string;
  logY?: boolean;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: AxesSpec, series: Series[]): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 440;
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;

  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y).filter((v) => Number.isFinite(v) && (!spec.logY || v > 0));
  const xScale = linearScale(Math.min(...xs), Math.max(...xs), x0, x1);
  const yScale = spec.logY
    ? logScale(Math.min(...ys), Math.max(...ys), y0, y1)
    : linearScale(Math.min(0, ...ys), Math.max(...ys), y0, y1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`);

  for (const t of xScale.ticks) {
    const px = xScale(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y1}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${px}" y="${y0 + 16}" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of yScale.ticks) {
    const py = yScale(t);
    parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${x0 - 6}" y="${py + 4}" text-anchor="end">${fmt(t)}</text>`);
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${height - 8}" text-anchor="middle">${esc(spec.xLabel)}</text>`
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`
  );

  series.forEach((s) => {
    const points: string[] = [];
    for (let i = 0; i < s.x.length; i += 1) {
      if (!Number.isFinite(s.y[i]) || (spec.logY && s.y[i] <= 0)) {
        continue;
      }
      const px = xScale(s.x[i]);
      const py = yScale(s.y[i]);
      if (s.step && points.length > 0) {
        const prev = points[points.length - 1].split(",");
        points.push(`${px},${prev[1]}`);
      }
      points.push(`${px},${py}`);
    }
    const dash = s.dashed ? ' stroke-dasharray="6 4"' : "";
    parts.push(
      `<polyline fill="none" stroke="${s.color}" stroke-width="1.8"${dash} points="${points.join(" ")}"/>`
    );
    if (s.markers) {
      for (let i = 0; i < s.x.length; i += 1) {
        if (!Number.isFinite(s.y[i])) {
          continue;
        }
        parts.push(
          `<circle cx="${xScale(s.x[i])}" cy="${yScale(s.y[i])}" r="3" fill="${s.color}"/>`
        );
      }
    }
  });

  series.forEach((s, i) => {
    const ly = y1 + 14 + 16 * i;
    const dash = s.dashed ? ' stroke-dasharray="6 4"' : "";
    parts.push(`<line x1="${x1 - 150}" y1="${ly - 4}" x2="${x1 - 120}" y2="${ly - 4}" stroke="${s.color}" stroke-width="1.8"${dash}/>`);
    parts.push(`<text x="${x1 - 114}" y="${ly}">${esc(s.label)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}

export interface MapPoint {
  x: number;
  y: number;
  cluster: number;
  role: "bs" | "ms";
}

export interface MapEdge {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  interCluster: boolean;
}

/** Network map: triangles for sites, circles for users, colored by cluster;
 * intra-cluster cooperation drawn solid, inter-cluster dashed with arrows. */
export function renderMap(title: string, points: MapPoint[], edges: MapEdge[]): string {
  const width = 640;
  const height = 640;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const pad = 0.08 * Math.max(Math.max(...xs) - Math.min(...xs), Math.max(...ys) - Math.min(...ys));
  const xScale = linearScale(Math.min(...xs) - pad, Math.max(...xs) + pad, 40, width - 20);
  const yScale = linearScale(Math.min(...ys) - pad, Math.max(...ys) + pad, height - 40, 30);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="3" orient="auto"><path d="M0,0 L7,3 L0,6 z" fill="#555555"/></marker></defs>`
  );
  parts.push(`<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">${esc(title)}</text>`);

  for (const e of edges) {
    const attrs = e.interCluster
      ? ' stroke="#555555" stroke-dasharray="5 4" marker-end="url(#arrow)"'
      : ' stroke="#bbbbbb"';
    parts.push(
      `<line x1="${xScale(e.x1)}" y1="${yScale(e.y1)}" x2="${xScale(e.x2)}" y2="${yScale(e.y2)}"${attrs}/>`
    );
  }
  for (const p of points) {
    const color = PALETTE[p.cluster % PALETTE.length];
    const px = xScale(p.x);
    const py = yScale(p.y);
    if (p.role === "bs") {
      parts.push(
        `<path d="M${px},${py - 8} L${px - 7},${py + 5} L${px + 7},${py + 5} z" fill="${color}" stroke="black"/>`
      );
    } else {
      parts.push(`<circle cx="${px}" cy="${py}" r="4" fill="${color}" fill-opacity="0.7"/>`);
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}
