/**
 * Genres-per-creator bars: distinct-genre counts by creator id, one bar
 * series per strategy.
 */

import { numericColumn, readCsv, requireColumns } from "./csv.js";
import { drawAxes, LinearScale, PALETTE, SvgDoc } from "./svg.js";

export interface SpreadSeries {
  strategy: string;
  byCreator: Map<number, number>;
}

export function loadSpread(paths: string[]): SpreadSeries[] {
  if (paths.length === 0) {
    throw new Error("no genre-spread csv paths given");
  }
  const byStrategy = new Map<string, Map<number, number>>();
  for (const path of paths) {
    const table = readCsv(path);
    requireColumns(table, ["strategy", "creator", "distinct_genres"], path);
    if (table.rows.length === 0) {
      throw new Error(`${path}: no data rows`);
    }
    const creators = numericColumn(table, "creator", path);
    const counts = numericColumn(table, "distinct_genres", path);
    table.rows.forEach((row, i) => {
      const strategy = row["strategy"];
      if (!byStrategy.has(strategy)) byStrategy.set(strategy, new Map());
      byStrategy.get(strategy)!.set(creators[i], counts[i]);
    });
  }
  return [...byStrategy.entries()].map(([strategy, byCreator]) => ({ strategy, byCreator }));
}

export function renderSpread(series: SpreadSeries[], width = 720, height = 360): string {
  if (series.length === 0) {
    throw new Error("no series to plot");
  }
  const margin = { top: 28, right: 20, bottom: 40, left: 48 };
  const doc = new SvgDoc(width, height);
  const creatorIds = [...new Set(series.flatMap((s) => [...s.byCreator.keys()]))].sort((a, b) => a - b);
  const yMax = Math.max(...series.flatMap((s) => [...s.byCreator.values()]), 1);
  const x = new LinearScale(-0.5, creatorIds.length - 0.5, margin.left, width - margin.right);
  const y = new LinearScale(0, yMax, height - margin.bottom, margin.top);
  drawAxes(doc, margin, x, y, "creator id", "distinct genres created");

  const slot = (width - margin.left - margin.right) / creatorIds.length;
  const barWidth = (slot * 0.8) / series.length;
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    creatorIds.forEach((cid, pos) => {
      const value = s.byCreator.get(cid);
      if (value === undefined) return;
      const cx = x.map(pos) - (slot * 0.4) + idx * barWidth;
      const top = y.map(value);
      doc.rect(cx, top, barWidth, y.map(0) - top, color);
    });
    doc.text(width - margin.right - 4, margin.top + 14 * (idx + 1), s.strategy, { anchor: "end" });
    doc.rect(width - margin.right - 60, margin.top + 14 * (idx + 1) - 9, 12, 8, color);
  });
  // x tick labels are creator positions; relabel with actual ids sparsely
  const every = Math.max(1, Math.ceil(creatorIds.length / 16));
  creatorIds.forEach((cid, pos) => {
    if (pos % every !== 0) return;
    doc.text(x.map(pos), height - margin.bottom + 28, String(cid), { anchor: "middle", size: 9 });
  });
  return doc.render();
}
