export { parseClicksCsv, parseTrajectoryCsv, parseWignerCsv, parseWtdCsv } from "./csv.js";
export type { TrajectoryRow, WignerGrid, WtdRow } from "./csv.js";
export {
  computeHistogram,
  renderBloch3d,
  renderTimeseries,
  renderWignerSvg,
  renderWtdOverlay,
  wignerRaster,
} from "./plots.js";
export type { Histogram, WtdOverlay } from "./plots.js";
export { encodePng } from "./png.js";
export { run } from "./cli.js";
