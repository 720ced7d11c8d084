#!/usr/bin/env node
/**
 * Render one figure from a qamphase sweep CSV.
 *
 * Usage:
 *   node dist/main.js --csv out/sweep-linewidth.csv --kind snr-vs-linewidth \
 *        --out fig4a.svg [--filter format=PS-1024QAM] [--filter linewidth_hz=50000]
 *
 * Output is a static SVG; rendering the same CSV twice produces identical
 * bytes.  Exit codes: 0 success, 2 usage/data errors.
 */

import { writeFileSync } from "fs";

import { CsvError, applyFilters, readSweepCsv } from "./csv.js";
import { FIGURE_KINDS, FigureError, FigureKind, renderFigure } from "./figures.js";

interface Args {
  csv: string;
  kind: FigureKind;
  out: string;
  filters: Array<[string, string]>;
}

function usage(): string {
  return (
    "usage: main.js --csv PATH --kind KIND --out PATH.svg [--filter col=value]...\n" +
    `  kinds: ${FIGURE_KINDS.join(", ")}`
  );
}

function parseArgs(argv: string[]): Args {
  let csv: string | undefined;
  let kind: string | undefined;
  let out: string | undefined;
  const filters: Array<[string, string]> = [];
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--csv":
      case "--kind":
      case "--out":
      case "--filter": {
        if (value === undefined) throw new CsvError(`${flag} needs a value\n${usage()}`);
        i += 1;
        if (flag === "--csv") csv = value;
        else if (flag === "--kind") kind = value;
        else if (flag === "--out") out = value;
        else {
          const eq = value.indexOf("=");
          if (eq <= 0) throw new CsvError(`--filter expects col=value, got '${value}'`);
          filters.push([value.slice(0, eq), value.slice(eq + 1)]);
        }
        break;
      }
      default:
        throw new CsvError(`unknown argument '${flag}'\n${usage()}`);
    }
  }
  if (!csv || !kind || !out) {
    throw new CsvError(`--csv, --kind and --out are all required\n${usage()}`);
  }
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new CsvError(`unknown figure kind '${kind}'; expected one of ${FIGURE_KINDS.join(", ")}`);
  }
  return { csv, kind: kind as FigureKind, out, filters };
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const rows = applyFilters(readSweepCsv(args.csv), args.filters);
    const svg = renderFigure(args.kind, rows);
    writeFileSync(args.out, svg);
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof FigureError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
