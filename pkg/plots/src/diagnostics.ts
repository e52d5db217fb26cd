import * as fs from "fs";
import * as path from "path";
import { readDiagnosticsCsv, requireFile } from "./csv";
import { diagnosticsSvg, Panel } from "./svg";

/** One log-scale panel per recorded series: E always, R and S when present. */
export function plotDiagnostics(runDir: string, outImage: string): Panel[] {
  const diag = readDiagnosticsCsv(requireFile(path.join(runDir, "diagnostics.csv")));
  if (diag.iteration.length === 0) {
    throw new Error(`parse error in ${path.join(runDir, "diagnostics.csv")}: no data rows`);
  }
  if (!("E" in diag.series)) {
    throw new Error(`parse error in ${path.join(runDir, "diagnostics.csv")}: no E column`);
  }
  const panels: Panel[] = [];
  for (const name of ["E", "R", "S"]) {
    const values = diag.series[name];
    if (values && values.some((v) => v !== null)) {
      panels.push({ label: name, iteration: diag.iteration, values });
    }
  }
  fs.writeFileSync(outImage, diagnosticsSvg(panels));
  return panels;
}
