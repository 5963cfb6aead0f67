/** CSV access for the sweep tables written by the experiment driver.
 *
 * The driver's schema has no quoted fields, so splitting on commas is exact.
 */

export class MissingColumnError extends Error {
  constructor(public readonly column: string, public readonly path: string) {
    super(`MissingColumnError: column "${column}" not present in ${path}`);
    this.name = "MissingColumnError";
  }
}

export class EmptyCsvError extends Error {
  constructor(public readonly path: string) {
    super(`EmptyCsvError: ${path} has no data rows`);
    this.name = "EmptyCsvError";
  }
}

export interface Table {
  header: string[];
  rows: string[][];
  path: string;
}

export function parseCsv(text: string, path: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length < 2) throw new EmptyCsvError(path);
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows, path };
}

export function columnIndex(table: Table, name: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new MissingColumnError(name, table.path);
  return idx;
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = columnIndex(table, name);
  return table.rows.map((r) => {
    const v = Number(r[idx]);
    return Number.isFinite(v) ? v : NaN;
  });
}

export function stringColumn(table: Table, name: string): string[] {
  const idx = columnIndex(table, name);
  return table.rows.map((r) => r[idx]);
}
