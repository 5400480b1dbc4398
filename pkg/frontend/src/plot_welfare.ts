#!/usr/bin/env node
/**
 * Welfare curves from metrics CSVs.
 *
 * Usage:
 *   node dist/plot_welfare.js \
 *     --in lore=runs/lore/seed_1/metrics.csv,runs/lore/seed_2/metrics.csv \
 *          none=runs/none/seed_1/metrics.csv,runs/none/seed_2/metrics.csv \
 *     --out welfare.svg
 *
 * Each --in entry is label=comma-separated-seed-csvs; curves are
 * seed-averaged with a shaded standard-error band.
 */

import { writeFileSync } from "fs";
import { parseArgs } from "./args.js";
import { loadWelfareSeries, renderWelfare } from "./welfare.js";

const USAGE = "usage: plot_welfare --in label=a.csv,b.csv [label2=...] --out plot.svg";

export function main(argv: string[]): number {
  try {
    const { inputs, out } = parseArgs(argv, USAGE);
    const series = inputs.map((spec) => {
      const eq = spec.indexOf("=");
      const label = eq >= 0 ? spec.slice(0, eq) : spec;
      const paths = (eq >= 0 ? spec.slice(eq + 1) : spec).split(",").filter(Boolean);
      return loadWelfareSeries(label, paths);
    });
    writeFileSync(out, renderWelfare(series));
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
