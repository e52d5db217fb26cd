import * as fs from "fs";
import * as path from "path";
import { meanCurvePaths, readCurveCsv, requireFile } from "./csv";
import { NamedCurve, shapesSvg } from "./svg";

/** Overlay template, target, and the final mean-curve reconstruction. */
export function plotShapes(runDir: string, outImage: string): NamedCurve[] {
  const template = readCurveCsv(requireFile(path.join(runDir, "template_curve.csv")));
  const target = readCurveCsv(requireFile(path.join(runDir, "target_curve.csv")));
  const means = meanCurvePaths(runDir);
  if (means.length === 0) {
    throw new Error(`missing file: ${path.join(runDir, "mean_curve_*.csv")}`);
  }
  const reconstruction = readCurveCsv(means[means.length - 1]);

  const curves: NamedCurve[] = [
    { label: "template", curve: template, color: "#888888", dash: "6 4" },
    { label: "target", curve: target, color: "#1f77b4" },
    { label: "reconstruction", curve: reconstruction, color: "#d62728" },
  ];
  fs.writeFileSync(outImage, shapesSvg(curves));
  return curves;
}
