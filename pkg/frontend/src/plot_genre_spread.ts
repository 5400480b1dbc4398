#!/usr/bin/env node
/**
 * Genres-per-creator bars from genre_spread CSVs.
 *
 * Usage:
 *   node dist/plot_genre_spread.js \
 *     --in runs/lore/seed_1/genre_spread.csv runs/none/seed_1/genre_spread.csv \
 *     --out spread.svg
 *
 * One bar series per strategy found in the inputs.
 */

import { writeFileSync } from "fs";
import { parseArgs } from "./args.js";
import { loadSpread, renderSpread } from "./genreSpread.js";

const USAGE = "usage: plot_genre_spread --in a.csv [b.csv ...] --out plot.svg";

export function main(argv: string[]): number {
  try {
    const { inputs, out } = parseArgs(argv, USAGE);
    writeFileSync(out, renderSpread(loadSpread(inputs)));
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
