/**
 * The four figure types rendered from simulator CSV output:
 *
 *  bloch3d     trajectory on the Bloch sphere (orthographic projection with
 *              wireframe), green square at the start, red circle at the end
 *  wigner      phase-space heatmap with a diverging colormap, axes in
 *              quadrature units (SVG wraps the raster; PNG is the bare map)
 *  timeseries  X/Y/Z strips plus the filtered photocurrent
 *  wtd_overlay waiting-time histogram (density normalized) under the
 *              regression curve w(tau), sharing one y-axis
 */

import { TrajectoryRow, WignerGrid, WtdRow } from "./csv.js";
import { encodePng } from "./png.js";
import { Frame, frameBox, fmtTick, polyline, svgDocument, text, xPix, yPix } from "./svg.js";

// ---------------------------------------------------------------------------
// bloch3d
// ---------------------------------------------------------------------------

const AZIMUTH = -0.45;
const ELEVATION = 0.35;

function project(x: number, y: number, z: number): [number, number] {
  // orthographic camera: yaw about z, then pitch; screen up is +z
  const ca = Math.cos(AZIMUTH), sa = Math.sin(AZIMUTH);
  const ce = Math.cos(ELEVATION), se = Math.sin(ELEVATION);
  const xr = ca * x + sa * y;
  const yr = -sa * x + ca * y;
  const u = yr;
  const v = -se * xr + ce * z;
  return [u, v];
}

function spherePath(points: Array<[number, number, number]>, scale: number,
                    cx: number, cy: number): Array<[number, number]> {
  return points.map(([x, y, z]) => {
    const [u, v] = project(x, y, z);
    return [cx + scale * u, cy - scale * v];
  });
}

export function renderBloch3d(rows: TrajectoryRow[], title = "Bloch-sphere trajectory"): string {
  if (rows.length === 0) throw new Error("bloch3d: empty trajectory");
  const W = 520, H = 520;
  const cx = W / 2, cy = H / 2 + 10, scale = 200;
  let body = "";
  // wireframe: three latitude circles and four longitude half-planes
  for (const lat of [-0.5, 0, 0.5]) {
    const r = Math.sqrt(1 - lat * lat);
    const ring: Array<[number, number, number]> = [];
    for (let k = 0; k <= 72; k++) {
      const phi = (2 * Math.PI * k) / 72;
      ring.push([r * Math.cos(phi), r * Math.sin(phi), lat]);
    }
    body += polyline(spherePath(ring, scale, cx, cy), "#bbb", lat === 0 ? 1.0 : 0.6);
  }
  for (const phi0 of [0, Math.PI / 2]) {
    const ring: Array<[number, number, number]> = [];
    for (let k = 0; k <= 72; k++) {
      const th = (2 * Math.PI * k) / 72;
      ring.push([Math.sin(th) * Math.cos(phi0), Math.sin(th) * Math.sin(phi0), Math.cos(th)]);
    }
    body += polyline(spherePath(ring, scale, cx, cy), "#bbb", 0.6);
  }
  // axes labels at the poles of each axis
  for (const [vec, label] of [
    [[1.15, 0, 0], "X"], [[0, 1.15, 0], "Y"], [[0, 0, 1.15], "Z"],
  ] as Array<[[number, number, number], string]>) {
    const [u, v] = project(...vec);
    body += text(cx + scale * u, cy - scale * v, label, 13, "middle", `fill="#555"`);
  }
  const pts = spherePath(rows.map((r) => [r.X, r.Y, r.Z] as [number, number, number]), scale, cx, cy);
  body += polyline(pts, "#1d4ed8", 0.9, 0.85);
  const [sx, sy] = pts[0];
  const [ex, ey] = pts[pts.length - 1];
  body += `<rect x="${(sx - 5).toFixed(1)}" y="${(sy - 5).toFixed(1)}" width="10" height="10" ` +
    `fill="#15803d" stroke="white" stroke-width="1"/>\n`;
  body += `<circle cx="${ex.toFixed(1)}" cy="${ey.toFixed(1)}" r="6" ` +
    `fill="#dc2626" stroke="white" stroke-width="1"/>\n`;
  body += text(W / 2, 24, title, 14, "middle", `font-weight="bold"`);
  return svgDocument(W, H, body);
}

// ---------------------------------------------------------------------------
// wigner heatmap
// ---------------------------------------------------------------------------

/** diverging colormap: blue (negative) - white (zero) - red (positive) */
function divergingColor(v: number, vMax: number): [number, number, number] {
  const s = Math.max(-1, Math.min(1, vMax > 0 ? v / vMax : 0));
  if (s >= 0) {
    const t = 1 - s;
    return [255, Math.round(255 * (0.3 + 0.7 * t)), Math.round(255 * (0.25 + 0.75 * t))];
  }
  const t = 1 + s;
  return [Math.round(255 * (0.25 + 0.75 * t)), Math.round(255 * (0.35 + 0.65 * t)), 255];
}

export function wignerRaster(grid: WignerGrid, pixelScale = 3): { png: Buffer; width: number; height: number } {
  const ny = grid.y.length, nx = grid.x.length;
  const vMax = Math.max(...grid.values.map((row) => Math.max(...row.map(Math.abs))));
  const width = nx * pixelScale, height = ny * pixelScale;
  const rgb = new Uint8Array(width * height * 3);
  for (let i = 0; i < ny; i++) {
    // image rows run top-down; put y increasing upward
    const srcRow = ny - 1 - i;
    for (let j = 0; j < nx; j++) {
      const [r, g, b] = divergingColor(grid.values[srcRow][j], vMax);
      for (let pi = 0; pi < pixelScale; pi++) {
        for (let pj = 0; pj < pixelScale; pj++) {
          const idx = ((i * pixelScale + pi) * width + j * pixelScale + pj) * 3;
          rgb[idx] = r; rgb[idx + 1] = g; rgb[idx + 2] = b;
        }
      }
    }
  }
  return { png: encodePng(width, height, rgb), width, height };
}

export function renderWignerSvg(grid: WignerGrid, title = "Wigner function"): string {
  if (grid.values.length === 0) throw new Error("wigner: empty grid");
  const W = 560, H = 560;
  const f: Frame = {
    left: 70, top: 50, width: 420, height: 420,
    xMin: grid.x[0], xMax: grid.x[grid.x.length - 1],
    yMin: grid.y[0], yMax: grid.y[grid.y.length - 1],
  };
  const { png, width, height } = wignerRaster(grid);
  const uri = `data:image/png;base64,${png.toString("base64")}`;
  let body = `<image x="${f.left}" y="${f.top}" width="${f.width}" height="${f.height}" ` +
    `preserveAspectRatio="none" href="${uri}"/>\n`;
  body += frameBox(f, "x", "y", title);
  const vMin = Math.min(...grid.values.map((row) => Math.min(...row)));
  const vMax = Math.max(...grid.values.map((row) => Math.max(...row)));
  body += text(f.left + f.width, f.top + f.height + 32,
               `min ${fmtTick(vMin)}, max ${fmtTick(vMax)}`, 10, "end");
  return svgDocument(W, H, body);
}

// ---------------------------------------------------------------------------
// timeseries strips
// ---------------------------------------------------------------------------

export function renderTimeseries(rows: TrajectoryRow[], title = "Trajectory record"): string {
  if (rows.length === 0) throw new Error("timeseries: empty trajectory");
  const W = 760;
  const panels: Array<{ label: string; values: number[]; color: string }> = [
    { label: "X", values: rows.map((r) => r.X), color: "#1d4ed8" },
    { label: "Y", values: rows.map((r) => r.Y), color: "#7c3aed" },
    { label: "Z", values: rows.map((r) => r.Z), color: "#0f766e" },
  ];
  const hasCurrent = rows.some((r) => r.i_re !== 0 || r.i_im !== 0);
  if (hasCurrent) {
    panels.push({ label: "i(t)", values: rows.map((r) => r.i_re), color: "#b45309" });
  }
  const panelH = 120, gap = 28, top0 = 42;
  const H = top0 + panels.length * (panelH + gap) + 30;
  const t = rows.map((r) => r.t);
  let body = text(W / 2, 22, title, 14, "middle", `font-weight="bold"`);
  panels.forEach((panel, idx) => {
    let lo = Math.min(...panel.values), hi = Math.max(...panel.values);
    if (panel.label !== "i(t)") { lo = Math.min(lo, -1); hi = Math.max(hi, 1); }
    if (hi - lo < 1e-12) { hi += 1; lo -= 1; }
    const pad = 0.05 * (hi - lo);
    const f: Frame = {
      left: 70, top: top0 + idx * (panelH + gap), width: W - 100, height: panelH,
      xMin: t[0], xMax: t[t.length - 1], yMin: lo - pad, yMax: hi + pad,
    };
    body += frameBox(f, idx === panels.length - 1 ? "t (1/kappa)" : "", panel.label);
    body += polyline(t.map((tv, i) => [xPix(f, tv), yPix(f, panel.values[i])]), panel.color, 1);
    if (panel.label === "i(t)" && rows.some((r) => r.i_im !== 0)) {
      body += polyline(t.map((tv, i) => [xPix(f, tv), yPix(f, rows[i].i_im)]), "#be185d", 1, 0.8);
    }
  });
  return svgDocument(W, H, body);
}

// ---------------------------------------------------------------------------
// waiting-time histogram + w(tau) overlay
// ---------------------------------------------------------------------------

export interface Histogram {
  centers: number[];
  densities: number[];
  binWidth: number;
}

/** Density-normalized histogram over [0, range]; integral of the bars is 1. */
export function computeHistogram(samples: number[], binWidth: number, range: number): Histogram {
  if (binWidth <= 0 || range <= 0) throw new Error("histogram: binWidth and range must be positive");
  const nBins = Math.max(1, Math.round(range / binWidth));
  const counts = new Array(nBins).fill(0);
  let inRange = 0;
  for (const s of samples) {
    const bin = Math.floor(s / binWidth);
    if (bin >= 0 && bin < nBins) {
      counts[bin] += 1;
      inRange += 1;
    }
  }
  const densities = counts.map((c) => (inRange > 0 ? c / (inRange * binWidth) : 0));
  const centers = counts.map((_, i) => (i + 0.5) * binWidth);
  return { centers, densities, binWidth };
}

export interface WtdOverlay {
  svg: string;
  histogram: Histogram;
  /** common vertical scale applied to both the bars and the curve */
  yMax: number;
}

export function renderWtdOverlay(clicks: number[], wtd: WtdRow[], nBins = 60,
                                 title = "Waiting-time statistics"): WtdOverlay {
  if (clicks.length < 2) throw new Error("wtd_overlay: need at least two clicks");
  if (wtd.length < 2) throw new Error("wtd_overlay: empty density curve");
  const waits: number[] = [];
  for (let i = 1; i < clicks.length; i++) waits.push(clicks[i] - clicks[i - 1]);
  const tauMax = wtd[wtd.length - 1].tau;
  const hist = computeHistogram(waits, tauMax / nBins, tauMax);
  const yMax = 1.05 * Math.max(...hist.densities, ...wtd.map((r) => r.w));

  const W = 640, H = 420;
  const f: Frame = {
    left: 70, top: 50, width: W - 110, height: H - 120,
    xMin: 0, xMax: tauMax, yMin: 0, yMax,
  };
  let body = "";
  const barPix = (f.width * hist.binWidth) / tauMax;
  hist.centers.forEach((c, i) => {
    const h = (hist.densities[i] / yMax) * f.height;
    if (h <= 0) return;
    body += `<rect x="${(xPix(f, c) - barPix / 2).toFixed(2)}" y="${(f.top + f.height - h).toFixed(2)}" ` +
      `width="${barPix.toFixed(2)}" height="${h.toFixed(2)}" fill="#93c5fd" stroke="#3b82f6" stroke-width="0.5"/>\n`;
  });
  body += polyline(wtd.map((r) => [xPix(f, r.tau), yPix(f, r.w)]), "#b91c1c", 1.6);
  body += frameBox(f, "tau (1/kappa)", "w(tau)", title);
  body += text(f.left + f.width - 6, f.top + 16, `${waits.length} waits`, 10, "end");
  return { svg: svgDocument(W, H, body), histogram: hist, yMax };
}
