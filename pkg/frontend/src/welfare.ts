/**
 * Welfare-vs-round curves: cumulative clicks per strategy, seed-averaged
 * with a shaded standard-error band.
 */

import { numericColumn, readCsv, requireColumns } from "./csv.js";
import { drawAxes, LinearScale, PALETTE, SvgDoc } from "./svg.js";

export interface WelfareSeries {
  label: string;
  rounds: number[];
  mean: number[];
  se: number[];
}

export function loadWelfareSeries(label: string, paths: string[]): WelfareSeries {
  if (paths.length === 0) {
    throw new Error(`series "${label}": no csv paths given`);
  }
  const perSeed: number[][] = [];
  let rounds: number[] | null = null;
  for (const path of paths) {
    const table = readCsv(path);
    requireColumns(table, ["round", "cumulative_clicks"], path);
    const r = numericColumn(table, "round", path);
    if (r.length === 0) {
      throw new Error(`${path}: no data rows`);
    }
    if (rounds === null) {
      rounds = r;
    } else if (rounds.length !== r.length || rounds.some((v, i) => v !== r[i])) {
      throw new Error(`${path}: round column differs from the other seeds' csvs`);
    }
    perSeed.push(numericColumn(table, "cumulative_clicks", path));
  }
  const n = perSeed.length;
  const mean = rounds!.map((_, i) => perSeed.reduce((acc, s) => acc + s[i], 0) / n);
  const se = rounds!.map((_, i) => {
    if (n < 2) return 0;
    const m = mean[i];
    const varSum = perSeed.reduce((acc, s) => acc + (s[i] - m) ** 2, 0);
    return Math.sqrt(varSum / (n - 1)) / Math.sqrt(n);
  });
  return { label, rounds: rounds!, mean, se };
}

export function renderWelfare(series: WelfareSeries[], width = 640, height = 420): string {
  if (series.length === 0) {
    throw new Error("no series to plot");
  }
  const margin = { top: 28, right: 20, bottom: 40, left: 64 };
  const doc = new SvgDoc(width, height);
  const xMax = Math.max(...series.map((s) => Math.max(...s.rounds)));
  const xMin = Math.min(...series.map((s) => Math.min(...s.rounds)));
  const yMax = Math.max(...series.map((s) => Math.max(...s.mean.map((m, i) => m + s.se[i]))));
  const x = new LinearScale(xMin, xMax, margin.left, width - margin.right);
  const y = new LinearScale(0, yMax || 1, height - margin.bottom, margin.top);
  drawAxes(doc, margin, x, y, "round", "cumulative clicks");

  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    if (s.rounds.length > 1 && s.se.some((v) => v > 0)) {
      const upper: [number, number][] = s.rounds.map((r, i) => [x.map(r), y.map(s.mean[i] + s.se[i])]);
      const lower: [number, number][] = s.rounds
        .map((r, i): [number, number] => [x.map(r), y.map(s.mean[i] - s.se[i])])
        .reverse();
      doc.polygon([...upper, ...lower], color);
    }
    doc.polyline(
      s.rounds.map((r, i) => [x.map(r), y.map(s.mean[i])]),
      color,
    );
    doc.text(width - margin.right - 4, margin.top + 14 * (idx + 1), s.label, { anchor: "end" });
    doc.line(
      width - margin.right - 60,
      margin.top + 14 * (idx + 1) - 4,
      width - margin.right - 48,
      margin.top + 14 * (idx + 1) - 4,
      color,
      3,
    );
  });
  return doc.render();
}
