import * as fs from "fs";
import * as path from "path";

export interface Table {
  file: string;
  columns: string[];
  rows: Record<string, string>[];
}

/** Raised when an input file does not carry the published column set. */
export class SchemaError extends Error {
  constructor(file: string, expected: string[], found: string[]) {
    const missing = expected.filter((c) => !found.includes(c));
    const extra = found.filter((c) => !expected.includes(c));
    super(
      `${file}: column mismatch` +
        (missing.length ? `; missing [${missing.join(", ")}]` : "") +
        (extra.length ? `; unexpected [${extra.join(", ")}]` : "")
    );
    this.name = "SchemaError";
  }
}

export function parseCsv(text: string, file = "<string>"): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${file}: empty CSV`);
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Record<string, string> = {};
    columns.forEach((c, i) => {
      row[c] = cells[i] ?? "";
    });
    return row;
  });
  return { file, columns, rows };
}

export function readCsv(file: string): Table {
  return parseCsv(fs.readFileSync(file, "utf8"), file);
}

export function requireColumns(table: Table, expected: string[]): Table {
  const ok =
    expected.length === table.columns.length &&
    expected.every((c, i) => table.columns[i] === c);
  if (!ok) {
    throw new SchemaError(table.file, expected, table.columns);
  }
  return table;
}

export function numbers(table: Table, column: string): number[] {
  return table.rows.map((row) => {
    const v = Number(row[column]);
    if (Number.isNaN(v) && row[column] !== "nan") {
      throw new Error(`${table.file}: non-numeric value '${row[column]}' in ${column}`);
    }
    return v;
  });
}

/** All files matching a prefix in a directory, sorted for determinism. */
export function matchingFiles(dir: string, prefix: string, suffix = ".csv"): string[] {
  return fs
    .readdirSync(dir)
    .filter((name) => name.startsWith(prefix) && name.endsWith(suffix))
    .sort()
    .map((name) => path.join(dir, name));
}
