export { CSV_FIELDS, parseBenchCsv } from "./csv.js";
export type { BenchRow, ParseOutcome, RowError } from "./csv.js";
export { REGIMES, algoOrder, buildFigure, rowsForRegime } from "./figures.js";
export type { Regime } from "./figures.js";
export { buildFairnessTable } from "./table.js";
export { TABLE_FILE, buildReport, figureFileName, render } from "./render.js";
export type { Report, RenderIo } from "./render.js";
