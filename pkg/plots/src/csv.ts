/**
 * CSV reader for the estimator outputs.
 *
 * Files carry `#`-prefixed comment lines (configuration echo at the top,
 * slope/KS footers at the bottom), one header row naming the columns, and
 * comma-separated data rows in which trailing columns may be empty.
 */

export class SchemaError extends Error {}

export interface Table {
  comments: string[];
  header: string[];
  rows: string[][];
}

export function parseTable(text: string): Table {
  const comments: string[] = [];
  let header: string[] | null = null;
  const rows: string[][] = [];
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trimEnd();
    if (!line) continue;
    if (line.startsWith("#")) {
      comments.push(line);
      continue;
    }
    if (header === null) {
      header = line.split(",").map((c) => c.trim());
      continue;
    }
    rows.push(line.split(",").map((c) => c.trim()));
  }
  if (header === null) {
    throw new SchemaError("no header row found");
  }
  return { comments, header, rows };
}

export function columnIndex(table: Table, name: string, file: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(
      `${file}: missing required column '${name}' (found: ${table.header.join(", ")})`,
    );
  }
  return idx;
}

/** Numeric column; empty cells become NaN, anything unparsable is an error. */
export function numericColumn(table: Table, name: string, file: string): number[] {
  const idx = columnIndex(table, name, file);
  return table.rows.map((row, k) => {
    const cell = row[idx] ?? "";
    if (cell === "") return NaN;
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new SchemaError(`${file}: row ${k + 1}, column '${name}': bad number '${cell}'`);
    }
    return value;
  });
}

export function stringColumn(table: Table, name: string, file: string): string[] {
  const idx = columnIndex(table, name, file);
  return table.rows.map((row) => row[idx] ?? "");
}
