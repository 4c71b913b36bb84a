/** Small hand-rolled SVG builder: axes frames, polylines, markers, text. */

export interface Frame {
  /** pixel box of the plotting area */
  left: number;
  top: number;
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function xPix(f: Frame, x: number): number {
  return f.left + ((x - f.xMin) / (f.xMax - f.xMin)) * f.width;
}

export function yPix(f: Frame, y: number): number {
  return f.top + f.height - ((y - f.yMin) / (f.yMax - f.yMin)) * f.height;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function niceTicks(lo: number, hi: number, target = 6): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= target) ?? mag * 10;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  return ticks;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export function polyline(points: Array<[number, number]>, stroke: string, width = 1,
                         opacity = 1, dash?: string): string {
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" ` +
    `opacity="${opacity}"${dashAttr} points="${pts}"/>\n`;
}

export function text(x: number, y: number, content: string, size = 11,
                     anchor = "middle", extra = ""): string {
  return `<text x="${x.toFixed(1)}" y="${y.toFixed(1)}" font-size="${size}" ` +
    `text-anchor="${anchor}" ${extra}>${escapeXml(content)}</text>\n`;
}

/** Axes box with ticks and optional labels. */
export function frameBox(f: Frame, xLabel: string, yLabel: string, title = ""): string {
  let s = `<rect x="${f.left}" y="${f.top}" width="${f.width}" height="${f.height}" ` +
    `fill="none" stroke="#333" stroke-width="1"/>\n`;
  for (const t of niceTicks(f.xMin, f.xMax)) {
    const px = xPix(f, t);
    s += `<line x1="${px.toFixed(1)}" y1="${f.top + f.height}" x2="${px.toFixed(1)}" ` +
      `y2="${f.top + f.height + 4}" stroke="#333"/>\n`;
    s += text(px, f.top + f.height + 16, fmtTick(t), 10);
  }
  for (const t of niceTicks(f.yMin, f.yMax)) {
    const py = yPix(f, t);
    s += `<line x1="${f.left - 4}" y1="${py.toFixed(1)}" x2="${f.left}" ` +
      `y2="${py.toFixed(1)}" stroke="#333"/>\n`;
    s += text(f.left - 7, py + 3.5, fmtTick(t), 10, "end");
  }
  if (xLabel) s += text(f.left + f.width / 2, f.top + f.height + 32, xLabel, 12);
  if (yLabel) {
    const cx = f.left - 42;
    const cy = f.top + f.height / 2;
    s += text(cx, cy, yLabel, 12, "middle", `transform="rotate(-90 ${cx} ${cy})"`);
  }
  if (title) s += text(f.left + f.width / 2, f.top - 8, title, 13, "middle", `font-weight="bold"`);
  return s;
}

export function svgDocument(width: number, height: number, body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body + `</svg>\n`;
}
