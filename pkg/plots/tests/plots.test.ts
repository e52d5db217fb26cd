import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, describe, expect, it } from "vitest";

import { meanCurvePaths, readCurveCsv, readDiagnosticsCsv } from "../src/csv";
import { plotDiagnostics } from "../src/diagnostics";
import { plotShapes } from "../src/shapes";
import { extractPlottedData } from "../src/svg";

const SAMPLE = path.join(__dirname, "..", "sample_run");
const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "plots-"));

afterAll(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("sample run figures", () => {
  it("regenerates the shapes overlay", () => {
    const out = path.join(tmp, "shapes.svg");
    const curves = plotShapes(SAMPLE, out);
    const svg = fs.readFileSync(out, "utf8");
    expect(svg.length).toBeGreaterThan(0);
    expect(svg).toContain("<svg");
    expect(svg).toContain(">template<");
    expect(svg).toContain(">target<");
    expect(svg).toContain(">reconstruction<");
    expect(curves.map((c) => c.label)).toEqual(["template", "target", "reconstruction"]);
  });

  it("regenerates the diagnostics panels", () => {
    const out = path.join(tmp, "diag.svg");
    const panels = plotDiagnostics(SAMPLE, out);
    const svg = fs.readFileSync(out, "utf8");
    expect(svg.length).toBeGreaterThan(0);
    expect(panels.map((p) => p.label)).toEqual(["E", "R", "S"]);
    const e = panels[0].values as number[];
    expect(e[e.length - 1]).toBeLessThan(e[0]);
  });

  it("round-trips plotted shape values against the source CSVs", () => {
    const out = path.join(tmp, "shapes2.svg");
    plotShapes(SAMPLE, out);
    const data = extractPlottedData(fs.readFileSync(out, "utf8")) as {
      label: string;
      x: number[];
      y: number[];
    }[];
    const sources: { [k: string]: string } = {
      template: path.join(SAMPLE, "template_curve.csv"),
      target: path.join(SAMPLE, "target_curve.csv"),
      reconstruction: meanCurvePaths(SAMPLE).slice(-1)[0],
    };
    for (const entry of data) {
      const src = readCurveCsv(sources[entry.label]);
      expect(entry.x.length).toBe(src.x.length);
      for (let i = 0; i < src.x.length; i++) {
        expect(Math.abs(entry.x[i] - src.x[i])).toBeLessThanOrEqual(1e-12);
        expect(Math.abs(entry.y[i] - src.y[i])).toBeLessThanOrEqual(1e-12);
      }
    }
  });

  it("round-trips plotted diagnostic values against the source CSV", () => {
    const out = path.join(tmp, "diag2.svg");
    plotDiagnostics(SAMPLE, out);
    const data = extractPlottedData(fs.readFileSync(out, "utf8")) as {
      label: string;
      iteration: number[];
      values: (number | null)[];
    }[];
    const src = readDiagnosticsCsv(path.join(SAMPLE, "diagnostics.csv"));
    for (const panel of data) {
      expect(panel.iteration).toEqual(src.iteration);
      const want = src.series[panel.label];
      for (let i = 0; i < want.length; i++) {
        const a = panel.values[i];
        const b = want[i];
        if (b === null) {
          expect(a).toBeNull();
        } else {
          expect(Math.abs((a as number) - b)).toBeLessThanOrEqual(1e-12);
        }
      }
    }
  });
});

describe("degenerate and error inputs", () => {
  it("renders a single-row diagnostics file", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "one-"));
    fs.writeFileSync(path.join(dir, "diagnostics.csv"), "iteration,E,R,S\n0,0.5,1.0,2.0\n");
    const out = path.join(dir, "d.svg");
    const panels = plotDiagnostics(dir, out);
    expect(fs.statSync(out).size).toBeGreaterThan(0);
    expect(panels[0].values).toEqual([0.5]);
  });

  it("omits the R panel when the column is missing", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "nor-"));
    fs.writeFileSync(path.join(dir, "diagnostics.csv"), "iteration,E,S\n0,0.5,2.0\n1,0.4,1.5\n");
    const panels = plotDiagnostics(dir, path.join(dir, "d.svg"));
    expect(panels.map((p) => p.label)).toEqual(["E", "S"]);
  });

  it("omits the R panel when every R cell is empty", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "emptyr-"));
    fs.writeFileSync(path.join(dir, "diagnostics.csv"), "iteration,E,R,S\n0,0.5,,2.0\n1,0.4,,1.5\n");
    const panels = plotDiagnostics(dir, path.join(dir, "d.svg"));
    expect(panels.map((p) => p.label)).toEqual(["E", "S"]);
  });

  it("identical target and reconstruction plot as coincident polylines", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "same-"));
    const target = fs.readFileSync(path.join(SAMPLE, "target_curve.csv"));
    fs.writeFileSync(path.join(dir, "template_curve.csv"), fs.readFileSync(path.join(SAMPLE, "template_curve.csv")));
    fs.writeFileSync(path.join(dir, "target_curve.csv"), target);
    fs.writeFileSync(path.join(dir, "mean_curve_000.csv"), target);
    const out = path.join(dir, "s.svg");
    const curves = plotShapes(dir, out);
    expect(curves[1].curve).toEqual(curves[2].curve);
    const pts = (fs.readFileSync(out, "utf8").match(/<polygon points="([^"]*)"/g) || []).slice(1);
    expect(pts[0].replace("polygon", "")).toBe(pts[1].replace("polygon", ""));
  });

  it("names the missing file", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "miss-"));
    expect(() => plotShapes(dir, path.join(dir, "s.svg"))).toThrowError(/missing file: .*template_curve\.csv/);
  });

  it("names the corrupt file on parse errors", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "bad-"));
    fs.writeFileSync(path.join(dir, "template_curve.csv"), "vertex,x,y\n0,oops,1.0\n");
    fs.writeFileSync(path.join(dir, "target_curve.csv"), fs.readFileSync(path.join(SAMPLE, "target_curve.csv")));
    fs.writeFileSync(path.join(dir, "mean_curve_000.csv"), fs.readFileSync(path.join(SAMPLE, "target_curve.csv")));
    expect(() => plotShapes(dir, path.join(dir, "s.svg"))).toThrowError(/parse error in .*template_curve\.csv/);
  });

  it("rejects a curve file with a wrong header", () => {
    const dir = fs.mkdtempSync(path.join(tmp, "hdr-"));
    fs.writeFileSync(path.join(dir, "c.csv"), "a,b,c\n0,1,2\n");
    expect(() => readCurveCsv(path.join(dir, "c.csv"))).toThrowError(/expected header vertex,x,y/);
  });
});
