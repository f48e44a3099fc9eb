#!/usr/bin/env node
/**
 * reportgen render <csv> --out <dir>
 *
 * Reads a mutexbench CSV and writes one SVG figure per contention regime
 * present in the data plus a plain-text fairness table.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { render, type RenderIo } from "./render.js";

const USAGE = "usage: reportgen render <csv> --out <dir>";

export function cliMain(argv: string[], io: RenderIo): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: { out: { type: "string" } },
      allowPositionals: true,
    });
  } catch (cause) {
    io.err(`error: ${(cause as Error).message}`);
    io.err(USAGE);
    return 2;
  }
  const { values, positionals } = parsed;
  if (positionals.length !== 2 || positionals[0] !== "render" || values.out === undefined) {
    io.err(USAGE);
    return 2;
  }
  return render(positionals[1] as string, values.out, io);
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === pathToFileURL(entry).href) {
  const io: RenderIo = {
    out: (line) => console.log(line),
    err: (line) => console.error(line),
  };
  process.exitCode = cliMain(process.argv.slice(2), io);
}
