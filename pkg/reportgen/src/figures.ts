/**
 * Contention-regime figures: aggregate throughput against thread count,
 * one line per algorithm, on a logarithmic Y axis whose baseline sits at
 * the minimum score rather than zero.
 *
 * Output is plain SVG assembled from the data alone (fixed ordering, no
 * timestamps), so identical CSV bytes always produce identical files.
 */

import type { BenchRow } from "./csv.js";

export interface Regime {
  key: "max" | "moderate" | "light";
  title: string;
  csl: number;
  ncsl: number;
}

export const REGIMES: readonly Regime[] = [
  { key: "max", title: "Maximum Contention", csl: 0, ncsl: 0 },
  { key: "moderate", title: "Moderate Contention", csl: 1, ncsl: 200 },
  { key: "light", title: "Light Contention", csl: 1, ncsl: 1000 },
];

export function rowsForRegime(rows: readonly BenchRow[], regime: Regime): BenchRow[] {
  return rows.filter((r) => r.csl === regime.csl && r.ncsl === regime.ncsl);
}

/** Algorithms in first-appearance order; the CSV's ordering is the spec. */
export function algoOrder(rows: readonly BenchRow[]): string[] {
  const seen: string[] = [];
  for (const row of rows) {
    if (!seen.includes(row.algo)) seen.push(row.algo);
  }
  return seen;
}

/** Lower middle for even counts, matching the producer's convention. */
function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  return sorted[(sorted.length - 1) >> 1] as number;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
] as const;

const WIDTH = 760;
const HEIGHT = 500;
const MARGIN = { top: 48, right: 196, bottom: 58, left: 76 } as const;
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

function fx(value: number): string {
  return value.toFixed(2);
}

function fmtTick(value: number): string {
  if (value >= 100) return String(Math.round(value));
  return String(Number(value.toPrecision(3)));
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface SeriesPoint {
  threads: number;
  score: number;
}

/**
 * Build one figure, or return null when the regime has no rows at all.
 * Repeated cells for the same (algo, threads) collapse to their median.
 */
export function buildFigure(allRows: readonly BenchRow[], regime: Regime): string | null {
  const rows = rowsForRegime(allRows, regime);
  if (rows.length === 0) return null;

  const algos = algoOrder(rows);
  const series = algos.map((algo) => {
    const byThreads = new Map<number, number[]>();
    for (const row of rows) {
      if (row.algo !== algo) continue;
      const bucket = byThreads.get(row.threads);
      if (bucket === undefined) byThreads.set(row.threads, [row.medianThruput]);
      else bucket.push(row.medianThruput);
    }
    const points: SeriesPoint[] = [...byThreads.entries()]
      .map(([threads, scores]) => ({ threads, score: median(scores) }))
      .sort((a, b) => a.threads - b.threads);
    return { algo, points };
  });

  const threadValues = [...new Set(rows.map((r) => r.threads))].sort((a, b) => a - b);
  const scores = series.flatMap((s) => s.points.map((p) => p.score));
  let yMin = Math.min(...scores);
  let yMax = Math.max(...scores);
  if (yMin === yMax) {
    // a flat data set still needs a drawable span
    yMin /= 2;
    yMax *= 2;
  }
  const tMin = threadValues[0] as number;
  const tMax = threadValues[threadValues.length - 1] as number;

  const xPos = (threads: number): number =>
    tMax === tMin
      ? MARGIN.left + PLOT_W / 2
      : MARGIN.left + ((threads - tMin) / (tMax - tMin)) * PLOT_W;
  const yPos = (score: number): number =>
    MARGIN.top + PLOT_H - ((Math.log(score) - Math.log(yMin)) / (Math.log(yMax) - Math.log(yMin))) * PLOT_H;

  const yTicks: number[] = [yMin];
  for (
    let decade = Math.pow(10, Math.ceil(Math.log10(yMin) + 1e-12));
    decade < yMax * (1 - 1e-12);
    decade *= 10
  ) {
    if (decade > yMin * (1 + 1e-12)) yTicks.push(decade);
  }
  yTicks.push(yMax);

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`
  );
  out.push(`<title>${escapeXml(regime.title)}</title>`);
  out.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  out.push(
    `<text x="${fx(WIDTH / 2)}" y="28" text-anchor="middle" font-size="18">` +
      `${escapeXml(regime.title)} (csl=${regime.csl}, ncsl=${regime.ncsl})</text>`
  );

  for (const tick of yTicks) {
    const y = fx(yPos(tick));
    out.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + PLOT_W}" y2="${y}" ` +
        `stroke="#dddddd" stroke-width="1"/>`
    );
    out.push(
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
        `font-size="11">${fmtTick(tick)}</text>`
    );
  }
  for (const threads of threadValues) {
    const x = fx(xPos(threads));
    out.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + PLOT_H}" ` +
        `stroke="#eeeeee" stroke-width="1"/>`
    );
    out.push(
      `<text x="${x}" y="${MARGIN.top + PLOT_H + 18}" text-anchor="middle" font-size="11">` +
        `${threads}</text>`
    );
  }

  // the plot floor is the minimum score, not zero: the x axis sits there
  out.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + PLOT_H}" x2="${MARGIN.left + PLOT_W}" ` +
      `y2="${MARGIN.top + PLOT_H}" stroke="#000000" stroke-width="1"/>`
  );
  out.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
      `y2="${MARGIN.top + PLOT_H}" stroke="#000000" stroke-width="1"/>`
  );
  out.push(
    `<text x="${fx(MARGIN.left + PLOT_W / 2)}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="13">threads</text>`
  );
  out.push(
    `<text x="18" y="${fx(MARGIN.top + PLOT_H / 2)}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 18 ${fx(MARGIN.top + PLOT_H / 2)})">` +
      `aggregate throughput per second (log scale, from minimum score)</text>`
  );

  series.forEach(({ algo, points }, index) => {
    const color = PALETTE[index % PALETTE.length] as string;
    if (points.length > 1) {
      const path = points.map((p) => `${fx(xPos(p.threads))},${fx(yPos(p.score))}`).join(" ");
      out.push(
        `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`
      );
    }
    for (const point of points) {
      out.push(
        `<circle cx="${fx(xPos(point.threads))}" cy="${fx(yPos(point.score))}" r="3.2" ` +
          `fill="${color}"/>`
      );
    }
    const legendY = MARGIN.top + 10 + index * 20;
    out.push(
      `<rect x="${MARGIN.left + PLOT_W + 16}" y="${legendY - 9}" width="14" height="14" ` +
        `fill="${color}"/>`
    );
    out.push(
      `<text x="${MARGIN.left + PLOT_W + 36}" y="${legendY + 2}" font-size="12">` +
        `${escapeXml(algo)}</text>`
    );
  });

  out.push("</svg>");
  return out.join("\n") + "\n";
}
