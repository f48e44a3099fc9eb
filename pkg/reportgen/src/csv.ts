/**
 * Strict reader for the mutexbench CSV schema.
 *
 * Every row is validated field by field; problems come back as row-level
 * errors (1-based, header excluded) so a caller can report all of them at
 * once and refuse to render from bad data.
 */

import Papa from "papaparse";

export const CSV_FIELDS = [
  "algo",
  "threads",
  "locks",
  "na",
  "csl",
  "ncsl",
  "duration_s",
  "samples",
  "median_thruput",
  "min_thread_iters",
  "max_thread_iters",
  "fairness_ratio",
  "exclusion_ok",
  "latency_ns",
] as const;

export interface BenchRow {
  algo: string;
  threads: number;
  locks: number;
  na: number;
  csl: number;
  ncsl: number;
  durationS: number;
  samples: number;
  medianThruput: number;
  minThreadIters: number;
  maxThreadIters: number;
  fairnessRatio: number;
  /** Exactly as written in the file, for byte-faithful table output. */
  fairnessText: string;
  exclusionOk: boolean;
  latencyNs: number | null;
}

export interface RowError {
  /** 1-based data row number; 0 marks a file-level problem. */
  row: number;
  message: string;
}

export interface ParseOutcome {
  rows: BenchRow[];
  errors: RowError[];
}

function parseInteger(text: string, minimum: number): number | null {
  if (!/^-?\d+$/.test(text)) return null;
  const value = Number(text);
  return value >= minimum ? value : null;
}

function parseRatio(text: string): number | null {
  // the producer writes min/max iteration ratios; a starved thread with
  // zero iterations legitimately yields "inf"
  if (text === "inf") return Infinity;
  const value = Number(text);
  if (text === "" || Number.isNaN(value)) return null;
  return value >= 1 ? value : null;
}

function parsePositiveFloat(text: string): number | null {
  const value = Number(text);
  if (text === "" || !Number.isFinite(value)) return null;
  return value > 0 ? value : null;
}

function rowFromFields(fields: readonly string[], row: number, errors: RowError[]): BenchRow | null {
  const bad = (column: string, detail: string): null => {
    errors.push({ row, message: `${column}: ${detail}` });
    return null;
  };
  const [
    algo,
    threads,
    locks,
    na,
    csl,
    ncsl,
    durationS,
    samples,
    medianThruput,
    minIters,
    maxIters,
    fairness,
    exclusionOk,
    latencyNs,
  ] = fields as [
    string, string, string, string, string, string, string,
    string, string, string, string, string, string, string,
  ];

  if (algo === "") return bad("algo", "must not be empty");
  const threadsV = parseInteger(threads, 1);
  if (threadsV === null) return bad("threads", `expected an integer >= 1, got "${threads}"`);
  const locksV = parseInteger(locks, 1);
  if (locksV === null) return bad("locks", `expected an integer >= 1, got "${locks}"`);
  const naV = parseInteger(na, 1);
  if (naV === null) return bad("na", `expected an integer >= 1, got "${na}"`);
  const cslV = parseInteger(csl, 0);
  if (cslV === null) return bad("csl", `expected an integer >= 0, got "${csl}"`);
  const ncslV = parseInteger(ncsl, 0);
  if (ncslV === null) return bad("ncsl", `expected an integer >= 0, got "${ncsl}"`);
  const durationV = parsePositiveFloat(durationS);
  if (durationV === null) return bad("duration_s", `expected a positive number, got "${durationS}"`);
  const samplesV = parseInteger(samples, 1);
  if (samplesV === null) return bad("samples", `expected an integer >= 1, got "${samples}"`);
  const thruputV = parsePositiveFloat(medianThruput);
  if (thruputV === null) {
    // the figures put this on a log axis, so zero is as unusable as text
    return bad("median_thruput", `expected a positive number, got "${medianThruput}"`);
  }
  const minItersV = parseInteger(minIters, 0);
  if (minItersV === null) return bad("min_thread_iters", `expected an integer >= 0, got "${minIters}"`);
  const maxItersV = parseInteger(maxIters, 0);
  if (maxItersV === null) return bad("max_thread_iters", `expected an integer >= 0, got "${maxIters}"`);
  if (maxItersV < minItersV) {
    return bad("max_thread_iters", `must be >= min_thread_iters (${minIters})`);
  }
  const fairnessV = parseRatio(fairness);
  if (fairnessV === null) return bad("fairness_ratio", `expected a number >= 1 or "inf", got "${fairness}"`);
  if (exclusionOk !== "True" && exclusionOk !== "False") {
    return bad("exclusion_ok", `expected "True" or "False", got "${exclusionOk}"`);
  }
  let latencyV: number | null = null;
  if (latencyNs !== "") {
    latencyV = parseInteger(latencyNs, 0);
    if (latencyV === null) return bad("latency_ns", `expected empty or an integer >= 0, got "${latencyNs}"`);
  }

  return {
    algo,
    threads: threadsV,
    locks: locksV,
    na: naV,
    csl: cslV,
    ncsl: ncslV,
    durationS: durationV,
    samples: samplesV,
    medianThruput: thruputV,
    minThreadIters: minItersV,
    maxThreadIters: maxItersV,
    fairnessRatio: fairnessV,
    fairnessText: fairness,
    exclusionOk: exclusionOk === "True",
    latencyNs: latencyV,
  };
}

/** Parse and validate a whole CSV document. */
export function parseBenchCsv(text: string): ParseOutcome {
  const errors: RowError[] = [];
  const rows: BenchRow[] = [];
  const parsed = Papa.parse<string[]>(text, { delimiter: "," });
  for (const papaError of parsed.errors) {
    errors.push({ row: (papaError.row ?? 0) + 1, message: papaError.message });
  }

  const records = parsed.data;
  // a trailing newline is normal; Papa reports it as one empty final record
  const last = records[records.length - 1];
  if (last !== undefined && last.length === 1 && last[0] === "") {
    records.pop();
  }

  const header = records.shift();
  if (header === undefined) {
    errors.push({ row: 0, message: "empty file" });
    return { rows, errors };
  }
  if (header.join(",") !== CSV_FIELDS.join(",")) {
    errors.push({
      row: 0,
      message: `header mismatch: expected "${CSV_FIELDS.join(",")}", got "${header.join(",")}"`,
    });
    return { rows, errors };
  }
  if (records.length === 0) {
    errors.push({ row: 0, message: "no data rows" });
    return { rows, errors };
  }

  records.forEach((fields, index) => {
    const row = index + 1;
    if (fields.length === 1 && fields[0] === "") {
      errors.push({ row, message: "blank line" });
      return;
    }
    if (fields.length !== CSV_FIELDS.length) {
      errors.push({
        row,
        message: `expected ${CSV_FIELDS.length} fields, got ${fields.length}`,
      });
      return;
    }
    const parsedRow = rowFromFields(fields, row, errors);
    if (parsedRow !== null) rows.push(parsedRow);
  });
  return { rows, errors };
}
