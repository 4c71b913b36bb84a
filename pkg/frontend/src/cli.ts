#!/usr/bin/env node
/**
 * sgqed-plot: render simulator CSV output to SVG (or PNG for heatmaps).
 *
 *   sgqed-plot --type wigner      --input wigner_ss.csv --out fig.svg
 *   sgqed-plot --type wigner      --input wigner_ss.csv --out fig.png --format png
 *   sgqed-plot --type bloch3d     --input trajectory_0.csv --out bloch.svg
 *   sgqed-plot --type timeseries  --input trajectory_0.csv --out strips.svg
 *   sgqed-plot --type wtd_overlay --input clicks_0.csv --wtd wtd.csv --out wtd.svg
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { parseClicksCsv, parseTrajectoryCsv, parseWignerCsv, parseWtdCsv } from "./csv.js";
import {
  renderBloch3d,
  renderTimeseries,
  renderWignerSvg,
  renderWtdOverlay,
  wignerRaster,
} from "./plots.js";

const PLOT_TYPES = ["bloch3d", "wigner", "timeseries", "wtd_overlay"] as const;

export function run(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      type: { type: "string" },
      input: { type: "string" },
      wtd: { type: "string" },
      out: { type: "string" },
      format: { type: "string", default: "svg" },
      bins: { type: "string", default: "60" },
      title: { type: "string" },
    },
  });
  const type = values.type as (typeof PLOT_TYPES)[number] | undefined;
  if (!type || !PLOT_TYPES.includes(type)) {
    throw new Error(`--type must be one of ${PLOT_TYPES.join(", ")}`);
  }
  if (!values.input) throw new Error("--input is required");
  if (!values.out) throw new Error("--out is required");
  if (values.format !== "svg" && values.format !== "png") {
    throw new Error("--format must be svg or png");
  }
  if (values.format === "png" && type !== "wigner") {
    throw new Error("--format png is only available for wigner heatmaps");
  }

  const inputText = readFileSync(values.input, "utf-8");
  switch (type) {
    case "bloch3d": {
      const rows = parseTrajectoryCsv(inputText);
      writeFileSync(values.out, renderBloch3d(rows, values.title ?? undefined));
      break;
    }
    case "timeseries": {
      const rows = parseTrajectoryCsv(inputText);
      writeFileSync(values.out, renderTimeseries(rows, values.title ?? undefined));
      break;
    }
    case "wigner": {
      const grid = parseWignerCsv(inputText);
      if (values.format === "png") {
        writeFileSync(values.out, wignerRaster(grid).png);
      } else {
        writeFileSync(values.out, renderWignerSvg(grid, values.title ?? undefined));
      }
      break;
    }
    case "wtd_overlay": {
      if (!values.wtd) throw new Error("wtd_overlay needs --wtd <wtd.csv> next to --input <clicks.csv>");
      const clicks = parseClicksCsv(inputText);
      const wtd = parseWtdCsv(readFileSync(values.wtd, "utf-8"));
      const overlay = renderWtdOverlay(clicks, wtd, Number(values.bins), values.title ?? undefined);
      writeFileSync(values.out, overlay.svg);
      break;
    }
  }
  console.log(`wrote ${values.out}`);
  return 0;
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  try {
    process.exit(run(process.argv.slice(2)));
  } catch (err) {
    console.error(`sgqed-plot: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
