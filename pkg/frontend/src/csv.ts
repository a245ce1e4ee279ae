/**
 * CSV and metadata loading for verivqe experiment artifacts.
 *
 * The renderer never recomputes physics: every plotted number comes out of
 * these files. Column sets are the CLI's frozen schemas; a mismatch is a
 * hard error naming the offending columns.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const CONVERGENCE_COLUMNS = ["arm", "step", "mean_f_hat", "mean_f_exact"];
export const SCATTER_COLUMNS = ["p_attack", "angle_shift", "run", "e", "n_td"];

export class SchemaError extends Error {}

export interface ConvergenceRow {
  arm: string;
  step: number;
  meanFExact: number;
}

export interface ScatterRow {
  pAttack: number;
  angleShift: number;
  e: number;
  nTd: number;
}

export interface RunMetadata {
  groundEnergy?: number;
  eTh?: number;
  raw: Record<string, unknown>;
}

function parseCsv(path: string): { header: string[]; rows: string[][] } {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`cannot parse ${path}: ${parsed.errors[0].message}`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new SchemaError(`${path} has no header row`);
  }
  return { header: data[0], rows: data.slice(1) };
}

function checkColumns(path: string, header: string[], expected: string[]): void {
  const missing = expected.filter((c) => !header.includes(c));
  const unexpected = header.filter((c) => !expected.includes(c));
  if (missing.length > 0 || unexpected.length > 0) {
    const parts = [];
    if (missing.length > 0) parts.push(`missing columns: ${missing.join(", ")}`);
    if (unexpected.length > 0) parts.push(`unexpected columns: ${unexpected.join(", ")}`);
    throw new SchemaError(`${path}: ${parts.join("; ")}`);
  }
}

function num(path: string, row: string[], header: string[], col: string): number {
  const value = Number(row[header.indexOf(col)]);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`${path}: column ${col} holds non-numeric ${row[header.indexOf(col)]}`);
  }
  return value;
}

export function loadConvergenceCsv(path: string): ConvergenceRow[] {
  const { header, rows } = parseCsv(path);
  checkColumns(path, header, CONVERGENCE_COLUMNS);
  return rows.map((row) => ({
    arm: row[header.indexOf("arm")],
    step: num(path, row, header, "step"),
    meanFExact: num(path, row, header, "mean_f_exact"),
  }));
}

export function loadScatterCsv(path: string): ScatterRow[] {
  const { header, rows } = parseCsv(path);
  checkColumns(path, header, SCATTER_COLUMNS);
  return rows.map((row) => ({
    pAttack: num(path, row, header, "p_attack"),
    angleShift: num(path, row, header, "angle_shift"),
    e: num(path, row, header, "e"),
    nTd: num(path, row, header, "n_td"),
  }));
}

export function loadMetadata(path: string): RunMetadata {
  let raw: Record<string, unknown>;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new SchemaError(`cannot read metadata ${path}: ${(err as Error).message}`);
  }
  const groundEnergy = typeof raw.ground_energy === "number" ? raw.ground_energy : undefined;
  const eTh = typeof raw.e_th === "number" ? raw.e_th : undefined;
  return { groundEnergy, eTh, raw };
}
