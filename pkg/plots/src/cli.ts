/**
 * render --kind convergence|density --in table.csv --out fig.svg
 *        [--samples samples.csv]
 *
 * Output is SVG markup regardless of the --out extension.  Exit codes:
 * 0 on success, 2 on schema/argument errors (with a column diagnostic).
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { SchemaError } from "./csv.js";
import { renderConvergence, renderDensity } from "./render.js";

interface Args {
  kind: string;
  input: string;
  output: string;
  samples?: string;
}

function parseArgs(argv: string[]): Args {
  const out: Partial<Args> = {};
  for (let i = 0; i < argv.length; i++) {
    const key = argv[i];
    const value = argv[i + 1];
    switch (key) {
      case "--kind":
        out.kind = value;
        i++;
        break;
      case "--in":
        out.input = value;
        i++;
        break;
      case "--out":
        out.output = value;
        i++;
        break;
      case "--samples":
        out.samples = value;
        i++;
        break;
      default:
        throw new SchemaError(`unknown argument '${key}'`);
    }
  }
  if (!out.kind || !out.input || !out.output) {
    throw new SchemaError("usage: render --kind convergence|density --in FILE --out FILE [--samples FILE]");
  }
  if (out.kind !== "convergence" && out.kind !== "density") {
    throw new SchemaError(`--kind must be 'convergence' or 'density', got '${out.kind}'`);
  }
  return out as Args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
    const text = readFileSync(args.input, "utf-8");
    if (args.kind === "convergence") {
      const result = renderConvergence(text, args.input);
      for (const line of result.lines) {
        const footer = line.slopeFooter === null ? "n/a" : line.slopeFooter.toFixed(3);
        console.log(
          `slope ${line.method}/${line.target}: recomputed ${line.slopeRecomputed.toFixed(3)}, footer ${footer}`,
        );
      }
      for (const warning of result.warnings) {
        console.warn(`warning: ${warning}`);
      }
      writeFileSync(args.output, result.svg);
    } else {
      const samplesText = args.samples ? readFileSync(args.samples, "utf-8") : undefined;
      const result = renderDensity(text, args.input, samplesText, args.samples);
      console.log(
        `density: ${result.t.length} grid points` +
          (result.histogram ? `, histogram bins ${result.histogram.density.length}` : ""),
      );
      writeFileSync(args.output, result.svg);
    }
    if (!args.output.endsWith(".svg")) {
      console.warn(`note: output is SVG markup despite the '${args.output}' extension`);
    }
    console.log(`wrote ${args.output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error && "code" in err && (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
