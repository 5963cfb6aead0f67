/** CLI: render --spec <figure-spec.json>
 *
 * Reads the sweep CSV named by the spec, renders the requested figure kind,
 * and writes a deterministic SVG.  Missing columns and empty CSVs exit
 * nonzero with the error name on stderr; no output file is emitted then.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { parseCsv } from "./csv.js";
import { FigureSpec, renderFigure } from "./figures.js";

export function renderFromSpecFile(specPath: string): string {
  const spec = JSON.parse(readFileSync(specPath, "utf8")) as FigureSpec;
  for (const key of ["input", "kind", "output"] as const) {
    if (!spec[key]) throw new Error(`FigureSpecError: missing field "${key}"`);
  }
  const table = parseCsv(readFileSync(spec.input, "utf8"), spec.input);
  const svg = renderFigure(table, spec);
  mkdirSync(dirname(spec.output), { recursive: true });
  writeFileSync(spec.output, svg);
  return spec.output;
}

export function main(argv: string[]): number {
  if (argv[0] !== "render" || argv[1] !== "--spec" || !argv[2]) {
    process.stderr.write("usage: render --spec <figure-spec.json>\n");
    return 2;
  }
  try {
    const out = renderFromSpecFile(argv[2]);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("render.js") || entry.endsWith("render.ts")) {
  process.exit(main(process.argv.slice(2)));
}
