/**
 * Orchestration: CSV text in, report files out. The pure half returns
 * file contents and warnings so tests can check byte determinism without
 * touching a filesystem; the IO half refuses to write anything when the
 * input has errors.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { parseBenchCsv, type RowError } from "./csv.js";
import { REGIMES, buildFigure } from "./figures.js";
import { buildFairnessTable } from "./table.js";

export interface Report {
  /** File name to content, in a fixed emission order. */
  files: [string, string][];
  warnings: string[];
  errors: RowError[];
}

export function figureFileName(regimeKey: string): string {
  return `fig-${regimeKey}-contention.svg`;
}

export const TABLE_FILE = "fairness-table.txt";

export function buildReport(csvText: string): Report {
  const { rows, errors } = parseBenchCsv(csvText);
  if (errors.length > 0) {
    return { files: [], warnings: [], errors };
  }
  const files: [string, string][] = [];
  const warnings: string[] = [];
  for (const regime of REGIMES) {
    const svg = buildFigure(rows, regime);
    if (svg === null) {
      warnings.push(
        `no rows with csl=${regime.csl}, ncsl=${regime.ncsl}; skipping the ` +
          `${regime.title} figure`
      );
      continue;
    }
    files.push([figureFileName(regime.key), svg]);
  }
  files.push([TABLE_FILE, buildFairnessTable(rows)]);
  return { files, warnings, errors: [] };
}

export interface RenderIo {
  out: (line: string) => void;
  err: (line: string) => void;
}

/** Returns a process exit code: 0 on success, 1 on bad input. */
export function render(csvPath: string, outDir: string, io: RenderIo): number {
  let text: string;
  try {
    text = readFileSync(csvPath, "utf-8");
  } catch (cause) {
    io.err(`error: cannot read ${csvPath}: ${(cause as Error).message}`);
    return 1;
  }
  const report = buildReport(text);
  if (report.errors.length > 0) {
    for (const problem of report.errors) {
      const where = problem.row === 0 ? "file" : `row ${problem.row}`;
      io.err(`error: ${where}: ${problem.message}`);
    }
    io.err(`error: ${report.errors.length} problem(s); nothing written`);
    return 1;
  }
  for (const warning of report.warnings) {
    io.err(`warning: ${warning}`);
  }
  mkdirSync(outDir, { recursive: true });
  for (const [name, content] of report.files) {
    writeFileSync(join(outDir, name), content);
    io.out(`wrote ${join(outDir, name)}`);
  }
  return 0;
}
