import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

export interface Curve {
  x: number[];
  y: number[];
}

export interface Diagnostics {
  iteration: number[];
  series: { [name: string]: (number | null)[] };
}

export function requireFile(p: string): string {
  if (!fs.existsSync(p)) {
    throw new Error(`missing file: ${p}`);
  }
  return p;
}

function parseRows(p: string): string[][] {
  const text = fs.readFileSync(requireFile(p), "utf8");
  const res = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (res.errors.length > 0) {
    throw new Error(`parse error in ${p}: ${res.errors[0].message}`);
  }
  return res.data;
}

function num(cell: string, p: string, where: string): number {
  const v = Number(cell);
  if (cell === "" || !Number.isFinite(v)) {
    throw new Error(`parse error in ${p}: non-numeric ${where}: "${cell}"`);
  }
  return v;
}

export function readCurveCsv(p: string): Curve {
  const rows = parseRows(p);
  if (rows.length < 2 || rows[0][0] !== "vertex" || rows[0][1] !== "x" || rows[0][2] !== "y") {
    throw new Error(`parse error in ${p}: expected header vertex,x,y`);
  }
  const x: number[] = [];
  const y: number[] = [];
  for (const row of rows.slice(1)) {
    if (row.length !== 3) {
      throw new Error(`parse error in ${p}: expected 3 columns, got ${row.length}`);
    }
    x.push(num(row[1], p, "x"));
    y.push(num(row[2], p, "y"));
  }
  return { x, y };
}

export function readDiagnosticsCsv(p: string): Diagnostics {
  const rows = parseRows(p);
  if (rows.length < 2 || rows[0][0] !== "iteration") {
    throw new Error(`parse error in ${p}: expected header starting with iteration`);
  }
  const names = rows[0].slice(1);
  const iteration: number[] = [];
  const series: { [name: string]: (number | null)[] } = {};
  for (const name of names) {
    series[name] = [];
  }
  for (const row of rows.slice(1)) {
    if (row.length !== rows[0].length) {
      throw new Error(`parse error in ${p}: ragged row with ${row.length} columns`);
    }
    iteration.push(num(row[0], p, "iteration"));
    names.forEach((name, j) => {
      const cell = row[j + 1];
      series[name].push(cell === "" ? null : num(cell, p, name));
    });
  }
  return { iteration, series };
}

export function meanCurvePaths(runDir: string): string[] {
  if (!fs.existsSync(runDir)) {
    throw new Error(`missing file: ${runDir}`);
  }
  return fs
    .readdirSync(runDir)
    .filter((f) => /^mean_curve_\d+\.csv$/.test(f))
    .sort()
    .map((f) => path.join(runDir, f));
}
