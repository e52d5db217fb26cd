#!/usr/bin/env node
import { plotShapes } from "./shapes";

const [runDir, out] = process.argv.slice(2);
if (!runDir || !out) {
  console.error("usage: plot-shapes RUN_DIR OUT");
  process.exit(2);
}
try {
  plotShapes(runDir, out);
  console.log(`wrote ${out}`);
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
}
