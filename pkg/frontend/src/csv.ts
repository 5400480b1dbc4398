/**
 * CSV reading for the simulator's output files.
 *
 * Every file starts with a `# provenance ...` line followed by a header
 * row; values may be empty (undefined metrics early in a run).
 */

import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (lines.length === 0) {
    throw new Error("empty csv: no header row found");
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new Error(`malformed csv: row ${i + 1} has ${cells.length} cells, expected ${columns.length}`);
    }
    const row: Record<string, string> = {};
    columns.forEach((c, j) => (row[c] = cells[j]));
    return row;
  });
  return { columns, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf-8"));
}

export function requireColumns(table: Table, needed: string[], path: string): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new Error(`${path}: missing required column "${column}"`);
    }
  }
}

export function numericColumn(table: Table, column: string, path: string): number[] {
  return table.rows.map((row, i) => {
    const v = Number(row[column]);
    if (!Number.isFinite(v)) {
      throw new Error(`${path}: non-numeric value "${row[column]}" in column "${column}" row ${i + 1}`);
    }
    return v;
  });
}
