/**
 * Plain-text fairness table: one line per CSV row, grouped by contention
 * regime, listing the fairness ratio for each (algorithm, thread count).
 * Ratio strings are reproduced exactly as the producer wrote them.
 */

import type { BenchRow } from "./csv.js";
import { REGIMES, algoOrder, rowsForRegime } from "./figures.js";

interface TableLine {
  regime: string;
  csl: number;
  ncsl: number;
  algo: string;
  threads: number;
  ratio: string;
}

function collectLines(rows: readonly BenchRow[]): TableLine[] {
  const lines: TableLine[] = [];
  const claimed = new Set<BenchRow>();
  for (const regime of REGIMES) {
    const group = rowsForRegime(rows, regime);
    for (const algo of algoOrder(group)) {
      group
        .filter((r) => r.algo === algo)
        .sort((a, b) => a.threads - b.threads)
        .forEach((row) => {
          claimed.add(row);
          lines.push({
            regime: regime.key,
            csl: row.csl,
            ncsl: row.ncsl,
            algo: row.algo,
            threads: row.threads,
            ratio: row.fairnessText,
          });
        });
    }
  }
  const leftovers = rows.filter((r) => !claimed.has(r));
  for (const algo of algoOrder(leftovers)) {
    leftovers
      .filter((r) => r.algo === algo)
      .sort((a, b) => a.csl - b.csl || a.ncsl - b.ncsl || a.threads - b.threads)
      .forEach((row) => {
        lines.push({
          regime: "-",
          csl: row.csl,
          ncsl: row.ncsl,
          algo: row.algo,
          threads: row.threads,
          ratio: row.fairnessText,
        });
      });
  }
  return lines;
}

export function buildFairnessTable(rows: readonly BenchRow[]): string {
  const lines = collectLines(rows);
  const header = ["regime", "csl", "ncsl", "algo", "threads", "fairness_ratio"];
  const cells = lines.map((l) => [
    l.regime,
    String(l.csl),
    String(l.ncsl),
    l.algo,
    String(l.threads),
    l.ratio,
  ]);
  const widths = header.map((name, column) =>
    Math.max(name.length, ...cells.map((row) => (row[column] as string).length))
  );
  const rightAligned = [false, true, true, false, true, true];
  const formatRow = (row: string[]): string =>
    row
      .map((cell, column) => {
        const width = widths[column] as number;
        return rightAligned[column] ? cell.padStart(width) : cell.padEnd(width);
      })
      .join("  ")
      .trimEnd();

  const out = [
    "fairness ratio (max over min per-thread iterations) per algorithm and thread count",
    "",
    formatRow(header),
    widths.map((w) => "-".repeat(w)).join("  "),
    ...cells.map(formatRow),
  ];
  return out.join("\n") + "\n";
}
