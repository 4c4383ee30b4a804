/** Parsing of the solver's record CSV (one row per time record). */

export interface Table {
  columns: string[];
  rows: number[][];
  raw: string[][];
}

export class MissingColumnError extends Error {
  constructor(column: string, available: string[]) {
    super(`missing column "${column}" (have: ${available.join(", ")})`);
    this.name = "MissingColumnError";
  }
}

export class EmptyCsvError extends Error {
  constructor(path: string) {
    super(`CSV has no data rows: ${path}`);
    this.name = "EmptyCsvError";
  }
}

export function parseCsv(text: string, path = "<string>"): Table {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new EmptyCsvError(path);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  const raw: string[][] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    raw.push(cells);
    rows.push(cells.map((c) => Number(c)));
  }
  return { columns, rows, raw };
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(name, table.columns);
  }
  return table.rows.map((r) => r[idx]);
}

export function columnRaw(table: Table, name: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(name, table.columns);
  }
  return table.raw.map((r) => r[idx]);
}

export function hasColumn(table: Table, name: string): boolean {
  return table.columns.includes(name);
}

/** Column names matching a prefix, e.g. "m_" -> ["m_2", "m_3"]. */
export function columnsWithPrefix(table: Table, prefix: string): string[] {
  return table.columns.filter(
    (c) => c.startsWith(prefix) && !c.startsWith("bound_") && !c.startsWith("pass_"),
  );
}
