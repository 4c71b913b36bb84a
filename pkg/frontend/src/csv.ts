/**
 * Parsers for the simulator's CSV output contracts.
 *
 * trajectory_<seed>.csv  header t,X,Y,Z,re_a,im_a,dq_re,dq_im,i_re,i_im,click
 * wigner_<label>.csv     header row of x values (first cell blank),
 *                        first column y values, body W(x+iy)
 * clicks_<seed>.csv      single column of click times, no header
 * wtd.csv                header tau,w
 *
 * Every parser validates its schema before any rendering happens.
 */

export interface TrajectoryRow {
  t: number;
  X: number;
  Y: number;
  Z: number;
  re_a: number;
  im_a: number;
  dq_re: number;
  dq_im: number;
  i_re: number;
  i_im: number;
  click: number;
}

export interface WignerGrid {
  x: number[];
  y: number[];
  /** values[i][j] = W(x[j] + i*y[i]) */
  values: number[][];
}

export interface WtdRow {
  tau: number;
  w: number;
}

const TRAJECTORY_HEADER = [
  "t", "X", "Y", "Z", "re_a", "im_a", "dq_re", "dq_im", "i_re", "i_im", "click",
];

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((line) => line.trim().length > 0);
}

function parseNumber(raw: string, where: string): number {
  const v = Number(raw);
  if (!Number.isFinite(v)) {
    throw new Error(`${where}: expected a number, got ${JSON.stringify(raw)}`);
  }
  return v;
}

export function parseTrajectoryCsv(text: string): TrajectoryRow[] {
  const lines = splitLines(text);
  if (lines.length < 2) throw new Error("trajectory CSV: no data rows");
  const header = lines[0].split(",").map((h) => h.trim());
  if (header.length !== TRAJECTORY_HEADER.length ||
      !TRAJECTORY_HEADER.every((h, i) => header[i] === h)) {
    throw new Error(
      `trajectory CSV: header mismatch, expected ${TRAJECTORY_HEADER.join(",")} ` +
      `got ${header.join(",")}`,
    );
  }
  return lines.slice(1).map((line, n) => {
    const cells = line.split(",");
    if (cells.length !== TRAJECTORY_HEADER.length) {
      throw new Error(`trajectory CSV row ${n + 2}: expected ${TRAJECTORY_HEADER.length} columns`);
    }
    const get = (i: number) => parseNumber(cells[i], `trajectory CSV row ${n + 2}`);
    return {
      t: get(0), X: get(1), Y: get(2), Z: get(3),
      re_a: get(4), im_a: get(5), dq_re: get(6), dq_im: get(7),
      i_re: get(8), i_im: get(9), click: get(10),
    };
  });
}

export function parseWignerCsv(text: string): WignerGrid {
  const lines = splitLines(text);
  if (lines.length < 3) throw new Error("wigner CSV: need a header row and at least two body rows");
  const headerCells = lines[0].split(",");
  if (headerCells[0].trim() !== "") {
    throw new Error("wigner CSV: first header cell must be blank (x values follow)");
  }
  const x = headerCells.slice(1).map((c, j) => parseNumber(c, `wigner CSV header x[${j}]`));
  const y: number[] = [];
  const values: number[][] = [];
  lines.slice(1).forEach((line, i) => {
    const cells = line.split(",");
    if (cells.length !== x.length + 1) {
      throw new Error(`wigner CSV row ${i + 2}: expected ${x.length + 1} columns, got ${cells.length}`);
    }
    y.push(parseNumber(cells[0], `wigner CSV row ${i + 2} y`));
    values.push(cells.slice(1).map((c, j) => parseNumber(c, `wigner CSV row ${i + 2} col ${j}`)));
  });
  return { x, y, values };
}

export function parseClicksCsv(text: string): number[] {
  const lines = splitLines(text);
  return lines.map((line, i) => parseNumber(line.trim(), `clicks CSV line ${i + 1}`));
}

export function parseWtdCsv(text: string): WtdRow[] {
  const lines = splitLines(text);
  if (lines.length < 2) throw new Error("wtd CSV: no data rows");
  const header = lines[0].split(",").map((h) => h.trim());
  if (header[0] !== "tau" || header[1] !== "w") {
    throw new Error(`wtd CSV: expected header tau,w got ${lines[0]}`);
  }
  return lines.slice(1).map((line, n) => {
    const cells = line.split(",");
    return {
      tau: parseNumber(cells[0], `wtd CSV row ${n + 2}`),
      w: parseNumber(cells[1], `wtd CSV row ${n + 2}`),
    };
  });
}
