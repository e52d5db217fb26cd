import { Curve } from "./csv";

const W = 640;
const H = 640;
const PAD = 48;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface NamedCurve {
  label: string;
  curve: Curve;
  color: string;
  dash?: string;
}

/** Equal-aspect overlay of closed curves with a legend. */
export function shapesSvg(curves: NamedCurve[]): string {
  const xs = curves.flatMap((c) => c.curve.x);
  const ys = curves.flatMap((c) => c.curve.y);
  const xmin = Math.min(...xs);
  const xmax = Math.max(...xs);
  const ymin = Math.min(...ys);
  const ymax = Math.max(...ys);
  const span = Math.max(xmax - xmin, ymax - ymin, 1e-12) * 1.08;
  const cx = (xmin + xmax) / 2;
  const cy = (ymin + ymax) / 2;
  const scale = (W - 2 * PAD) / span;
  const px = (x: number) => W / 2 + (x - cx) * scale;
  const py = (y: number) => H / 2 - (y - cy) * scale;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`
  );
  const payload = curves.map((c) => ({ label: c.label, x: c.curve.x, y: c.curve.y }));
  parts.push(`<metadata id="plotted-data">${esc(JSON.stringify(payload))}</metadata>`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  for (const c of curves) {
    const pts = c.curve.x.map((x, i) => `${px(x).toFixed(2)},${py(c.curve.y[i]).toFixed(2)}`);
    const dash = c.dash ? ` stroke-dasharray="${c.dash}"` : "";
    parts.push(
      `<polygon points="${pts.join(" ")}" fill="none" stroke="${c.color}" stroke-width="2"${dash}/>`
    );
  }
  curves.forEach((c, i) => {
    const y = PAD / 2 + 18 * i;
    const dash = c.dash ? ` stroke-dasharray="${c.dash}"` : "";
    parts.push(`<line x1="${W - 170}" y1="${y}" x2="${W - 140}" y2="${y}" stroke="${c.color}" stroke-width="2"${dash}/>`);
    parts.push(`<text x="${W - 132}" y="${y + 4}" font-family="sans-serif" font-size="13">${esc(c.label)}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export interface Panel {
  label: string;
  iteration: number[];
  values: (number | null)[];
}

/** Stacked log-scale panels, one per series, iteration on the x axis. */
export function diagnosticsSvg(panels: Panel[]): string {
  const panelH = 200;
  const height = panelH * panels.length;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${height}" viewBox="0 0 ${W} ${height}">`
  );
  const payload = panels.map((p) => ({ label: p.label, iteration: p.iteration, values: p.values }));
  parts.push(`<metadata id="plotted-data">${esc(JSON.stringify(payload))}</metadata>`);
  parts.push(`<rect width="${W}" height="${height}" fill="white"/>`);

  panels.forEach((panel, pi) => {
    const top = panelH * pi;
    const inner = { x0: PAD + 12, x1: W - PAD / 2, y0: top + 30, y1: top + panelH - 34 };
    const pos = panel.values.filter((v): v is number => v !== null && v > 0);
    const iters = panel.iteration;
    const imin = Math.min(...iters);
    const imax = Math.max(...iters);
    const ispan = Math.max(imax - imin, 1);
    const lmin = pos.length ? Math.floor(Math.log10(Math.min(...pos))) : 0;
    const lmax = pos.length ? Math.ceil(Math.log10(Math.max(...pos))) : 1;
    const lspan = Math.max(lmax - lmin, 1);
    const px = (it: number) => inner.x0 + ((it - imin) / ispan) * (inner.x1 - inner.x0);
    const py = (v: number) => inner.y1 - ((Math.log10(v) - lmin) / lspan) * (inner.y1 - inner.y0);

    parts.push(`<text x="${PAD}" y="${top + 18}" font-family="sans-serif" font-size="14" font-weight="bold">${esc(panel.label)}</text>`);
    parts.push(`<rect x="${inner.x0}" y="${inner.y0}" width="${inner.x1 - inner.x0}" height="${inner.y1 - inner.y0}" fill="none" stroke="#999"/>`);
    for (let d = lmin; d <= lmax; d++) {
      const y = py(Math.pow(10, d));
      parts.push(`<line x1="${inner.x0}" y1="${y.toFixed(2)}" x2="${inner.x1}" y2="${y.toFixed(2)}" stroke="#eee"/>`);
      parts.push(`<text x="${inner.x0 - 6}" y="${(y + 4).toFixed(2)}" text-anchor="end" font-family="sans-serif" font-size="11">1e${d}</text>`);
    }
    for (const it of iters) {
      parts.push(`<text x="${px(it).toFixed(2)}" y="${inner.y1 + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">${it}</text>`);
    }
    const drawn = iters
      .map((it, i) => ({ it, v: panel.values[i] }))
      .filter((d): d is { it: number; v: number } => d.v !== null && d.v > 0);
    if (drawn.length > 1) {
      const pts = drawn.map((d) => `${px(d.it).toFixed(2)},${py(d.v).toFixed(2)}`);
      parts.push(`<polyline points="${pts.join(" ")}" fill="none" stroke="#1f77b4" stroke-width="2"/>`);
    }
    for (const d of drawn) {
      parts.push(`<circle cx="${px(d.it).toFixed(2)}" cy="${py(d.v).toFixed(2)}" r="3" fill="#1f77b4"/>`);
    }
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Exact plotted values embedded by the emitters, for round-trip checks. */
export function extractPlottedData(svg: string): unknown {
  const m = svg.match(/<metadata id="plotted-data">([\s\S]*?)<\/metadata>/);
  if (!m) {
    throw new Error("no plotted-data metadata block in SVG");
  }
  const json = m[1].replace(/&lt;/g, "<").replace(/&gt;/g, ">").replace(/&amp;/g, "&");
  return JSON.parse(json);
}
