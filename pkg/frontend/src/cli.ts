#!/usr/bin/env node
/**
 * verivqe-plot --in data.csv --meta metadata.json --out figure.svg
 *              --kind convergence|error-scatter
 *
 * Exit codes: 0 rendered, 1 bad data (schema/metadata), 2 usage.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import {
  SchemaError,
  loadConvergenceCsv,
  loadMetadata,
  loadScatterCsv,
} from "./csv.js";
import { FigureKind, renderConvergence, renderErrorScatter } from "./render.js";

export interface PlotJob {
  input: string;
  metadata: string;
  output: string;
  kind: FigureKind;
}

export function render(job: PlotJob): string {
  if (!existsSync(job.input)) {
    throw new SchemaError(`input CSV not found: ${job.input}`);
  }
  if (!existsSync(job.metadata)) {
    throw new SchemaError(`metadata not found: ${job.metadata}`);
  }
  const meta = loadMetadata(job.metadata);
  if (job.kind === "convergence") {
    return renderConvergence(loadConvergenceCsv(job.input), meta);
  }
  return renderErrorScatter(loadScatterCsv(job.input), meta);
}

function parseArgs(argv: string[]): PlotJob {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near ${flag}`);
    }
    values[flag.slice(2)] = value;
  }
  for (const required of ["in", "meta", "out", "kind"]) {
    if (!(required in values)) throw new Error(`missing --${required}`);
  }
  if (values.kind !== "convergence" && values.kind !== "error-scatter") {
    throw new Error(`unknown figure kind ${values.kind}`);
  }
  return {
    input: values.in,
    metadata: values.meta,
    output: values.out,
    kind: values.kind as FigureKind,
  };
}

export function main(argv: string[]): number {
  let job: PlotJob;
  try {
    job = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    console.error(
      "usage: verivqe-plot --in data.csv --meta metadata.json --out fig.svg --kind convergence|error-scatter",
    );
    return 2;
  }
  try {
    const svg = render(job);
    mkdirSync(dirname(job.output), { recursive: true });
    writeFileSync(job.output, svg);
    console.log(`wrote ${job.output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`data error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("verivqe-plot")) {
  process.exit(main(process.argv.slice(2)));
}
