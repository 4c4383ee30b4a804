/** Shared CLI entry: read a CSV, build one figure kind, write the SVG.
 * The output file is only written after the figure built successfully. */

import { readFileSync, writeFileSync } from "fs";
import { parseCsv } from "./csv.js";
import { FIGURES } from "./figures.js";

export function renderFigure(kind: string, csvPath: string, outPath: string): number {
  const build = FIGURES[kind];
  if (!build) {
    console.error(`unknown figure kind "${kind}"`);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(csvPath, "utf8");
  } catch (err) {
    console.error(`cannot read ${csvPath}: ${(err as Error).message}`);
    return 2;
  }
  try {
    const table = parseCsv(text, csvPath);
    const result = build(table);
    writeFileSync(outPath, result.svg);
    if (result.dominates === false) {
      console.error("warning: bound series does not dominate at every record");
    }
    console.log(`wrote ${outPath}`);
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

export function mainFor(kind: string): void {
  const [csvPath, outPath] = process.argv.slice(2);
  if (!csvPath || !outPath) {
    console.error(`usage: plot-${kind} <records.csv> <out.svg>`);
    process.exit(2);
  }
  process.exit(renderFigure(kind, csvPath, outPath));
}
