#!/usr/bin/env node
import { plotDiagnostics } from "./diagnostics";

const [runDir, out] = process.argv.slice(2);
if (!runDir || !out) {
  console.error("usage: plot-diagnostics RUN_DIR OUT");
  process.exit(2);
}
try {
  const panels = plotDiagnostics(runDir, out);
  console.log(`wrote ${out} (${panels.map((p) => p.label).join(", ")})`);
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
}
