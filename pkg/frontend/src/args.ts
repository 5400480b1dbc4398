/** Tiny --in/--out flag parsing shared by the plot scripts. */

export interface PlotArgs {
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[], usage: string): PlotArgs {
  const inputs: string[] = [];
  let out: string | null = null;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--in") {
      while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
        inputs.push(argv[++i]);
      }
    } else if (arg === "--out") {
      out = argv[++i];
    } else {
      throw new Error(`unknown argument "${arg}"\n${usage}`);
    }
  }
  if (inputs.length === 0 || !out) {
    throw new Error(`--in and --out are required\n${usage}`);
  }
  return { inputs, out };
}
