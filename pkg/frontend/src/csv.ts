/**
 * Reader for qamphase sweep CSVs.
 *
 * The file starts with a `# schema_version=N` comment, then a header row,
 * then data rows.  Only schema version 1 is understood; anything else is
 * refused so stale plots can never be rendered silently from a newer,
 * semantically different schema.
 */

import { readFileSync } from "fs";

export const KNOWN_SCHEMA_VERSIONS = [1];

export const REQUIRED_COLUMNS = [
  "run_id", "format", "order", "entropy_bits", "ir_bits", "linewidth_hz",
  "snr_db", "pilot_ratio", "k1", "k2", "policy", "seed", "n_payload",
  "gmi", "ngmi", "air", "decision_error_rate",
] as const;

export interface SweepRow {
  run_id: number;
  format: string;
  order: number;
  entropy_bits: number;
  ir_bits: number;
  linewidth_hz: number;
  snr_db: number;
  pilot_ratio: number;
  k1: number;
  k2: number;
  policy: string;
  seed: number;
  n_payload: number;
  gmi: number;
  ngmi: number;
  air: number;
  decision_error_rate: number;
}

const STRING_COLUMNS = new Set(["format", "policy"]);

export class CsvError extends Error {}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new CsvError("CSV has no header; expected a schema comment and a header row");
  }
  const versionMatch = lines[0].match(/^#\s*schema_version=(\d+)\s*$/);
  if (!versionMatch) {
    throw new CsvError("missing '# schema_version=N' comment on the first line");
  }
  const version = Number(versionMatch[1]);
  if (!KNOWN_SCHEMA_VERSIONS.includes(version)) {
    throw new CsvError(
      `unknown schema_version ${version}; this tool understands ${KNOWN_SCHEMA_VERSIONS.join(", ")}`,
    );
  }
  const header = lines[1].split(",");
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new CsvError(`missing columns: ${missing.join(", ")}`);
  }
  const index = new Map(header.map((name, i) => [name, i]));

  const rows: SweepRow[] = [];
  for (const line of lines.slice(2)) {
    const fields = line.split(",");
    if (fields.length !== header.length) {
      throw new CsvError(
        `row has ${fields.length} fields, header has ${header.length}: ${line}`,
      );
    }
    const row: Record<string, number | string> = {};
    for (const col of REQUIRED_COLUMNS) {
      const raw = fields[index.get(col)!];
      if (STRING_COLUMNS.has(col)) {
        row[col] = raw;
      } else {
        const value = Number(raw);
        if (Number.isNaN(value)) {
          throw new CsvError(`non-numeric value '${raw}' in column ${col}`);
        }
        row[col] = value;
      }
    }
    rows.push(row as unknown as SweepRow);
  }
  return rows;
}

export function readSweepCsv(path: string): SweepRow[] {
  return parseSweepCsv(readFileSync(path, "utf-8"));
}

/** Equality filter on a column; numeric columns compare numerically. */
export function applyFilters(
  rows: SweepRow[],
  filters: Array<[string, string]>,
): SweepRow[] {
  let out = rows;
  for (const [key, value] of filters) {
    if (!REQUIRED_COLUMNS.includes(key as (typeof REQUIRED_COLUMNS)[number])) {
      throw new CsvError(`unknown filter column '${key}'`);
    }
    out = out.filter((r) => {
      const field = r[key as keyof SweepRow];
      return typeof field === "number" ? field === Number(value) : field === value;
    });
    if (out.length === 0) {
      throw new CsvError(`no rows left after filter ${key}=${value}`);
    }
  }
  return out;
}
