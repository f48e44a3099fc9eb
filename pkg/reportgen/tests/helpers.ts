import { CSV_FIELDS } from "../src/csv.js";

export const HEADER = CSV_FIELDS.join(",");

type FieldName = (typeof CSV_FIELDS)[number];

const BASE: Record<FieldName, string> = {
  algo: "HashChains",
  threads: "1",
  locks: "1",
  na: "1",
  csl: "0",
  ncsl: "0",
  duration_s: "2.0",
  samples: "3",
  median_thruput: "1000.0",
  min_thread_iters: "10",
  max_thread_iters: "12",
  fairness_ratio: "1.2",
  exclusion_ok: "True",
  latency_ns: "",
};

export function row(overrides: Partial<Record<FieldName, string>> = {}): string {
  return CSV_FIELDS.map((field) => overrides[field] ?? BASE[field]).join(",");
}

export function csv(...rows: string[]): string {
  return [HEADER, ...rows].join("\n") + "\n";
}
