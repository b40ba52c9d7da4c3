/**
 * Figure assembly from the estimator CSV outputs.
 *
 * Convergence figures show RMSE against N on log-log axes, one panel for
 * the cdf and one for the pdf, with the fitted slope of each method in
 * the legend.  Slopes are recomputed from the table rather than trusted
 * from the footer; both are reported and a mismatch above 0.02 raises a
 * warning flag.
 *
 * Density figures show the estimated cdf and pdf curves over the t-grid;
 * when a samples file is supplied, the empirical cumulative distribution
 * and a density-normalized histogram of the samples are overlaid.
 *
 * Rendering is a pure function of the CSV content: the returned `series`
 * carry exactly the plotted numbers, so identical inputs give identical
 * series.
 */

import { SchemaError, Table, numericColumn, parseTable, stringColumn } from "./csv.js";
import { fitLogLogSlope, parseFooterSlopes, slopeKey } from "./slopes.js";
import { PALETTE, Scene, decadeTicks, linearScale, log10Scale, niceTicks } from "./svg.js";

export interface ConvergenceLine {
  method: string;
  target: string;
  N: number[];
  rmse: number[];
  slopeRecomputed: number;
  slopeFooter: number | null;
  mismatch: boolean;
}

export interface ConvergenceResult {
  kind: "convergence";
  lines: ConvergenceLine[];
  warnings: string[];
  svg: string;
}

export interface HistogramSeries {
  edges: number[];
  density: number[];
  cumulative: number[];
}

export interface DensityResult {
  kind: "density";
  t: number[];
  F: number[];
  f: number[];
  histogram: HistogramSeries | null;
  svg: string;
}

const SLOPE_TOLERANCE = 0.02;

export function renderConvergence(text: string, file: string): ConvergenceResult {
  const table = parseTable(text);
  const N = numericColumn(table, "N", file);
  const method = stringColumn(table, "method", file);
  const rmseCdf = numericColumn(table, "rmse_cdf", file);
  const rmsePdf = numericColumn(table, "rmse_pdf", file);
  if (N.length === 0) throw new SchemaError(`${file}: no data rows`);

  const footer = parseFooterSlopes(table.comments);
  const lines: ConvergenceLine[] = [];
  const warnings: string[] = [];
  const methods = [...new Set(method)];
  for (const m of methods) {
    for (const [target, col] of [
      ["cdf", rmseCdf],
      ["pdf", rmsePdf],
    ] as const) {
      const pts = N.map((n, i) => [n, col[i], method[i]] as const).filter(
        ([, v, mm]) => mm === m && Number.isFinite(v),
      );
      if (pts.length < 2) continue;
      const ns = pts.map((p) => p[0]);
      const vals = pts.map((p) => p[1]);
      const slope = fitLogLogSlope(ns, vals);
      const fromFooter = footer.get(slopeKey(m, target)) ?? null;
      const mismatch = fromFooter !== null && Math.abs(fromFooter - slope) > SLOPE_TOLERANCE;
      if (mismatch) {
        warnings.push(
          `${file}: footer slope for ${m}/${target} is ${fromFooter!.toFixed(3)} ` +
            `but the table gives ${slope.toFixed(3)}`,
        );
      }
      lines.push({
        method: m,
        target,
        N: ns,
        rmse: vals,
        slopeRecomputed: slope,
        slopeFooter: fromFooter,
        mismatch,
      });
    }
  }
  if (lines.length === 0) throw new SchemaError(`${file}: no plottable series`);
  return { kind: "convergence", lines, warnings, svg: convergenceSvg(lines) };
}

function convergenceSvg(lines: ConvergenceLine[]): string {
  const width = 880;
  const height = 420;
  const scene = new Scene(width, height);
  const panels: Array<["cdf" | "pdf", number]> = [
    ["cdf", 60],
    ["pdf", 500],
  ];
  for (const [target, x0] of panels) {
    const subset = lines.filter((l) => l.target === target);
    drawLogLogPanel(scene, subset, x0, 40, 340, 300, `rmse (${target})`);
  }
  return scene.render();
}

function drawLogLogPanel(
  scene: Scene,
  lines: ConvergenceLine[],
  x0: number,
  y0: number,
  w: number,
  h: number,
  title: string,
): void {
  scene.text(x0 + w / 2, y0 - 14, title, 13, "middle");
  scene.line(x0, y0 + h, x0 + w, y0 + h);
  scene.line(x0, y0, x0, y0 + h);
  if (lines.length === 0) {
    scene.text(x0 + w / 2, y0 + h / 2, "no data", 12, "middle");
    return;
  }
  const allN = lines.flatMap((l) => l.N);
  const allV = lines.flatMap((l) => l.rmse);
  const sx = log10Scale(Math.min(...allN), Math.max(...allN), x0 + 8, x0 + w - 8);
  const sy = log10Scale(Math.min(...allV), Math.max(...allV), y0 + h - 8, y0 + 8);
  for (const tick of decadeTicks(Math.min(...allN), Math.max(...allN))) {
    scene.line(sx(tick), y0 + h, sx(tick), y0 + h + 4);
    scene.text(sx(tick), y0 + h + 16, tick.toExponential(0), 10, "middle");
  }
  for (const tick of decadeTicks(Math.min(...allV), Math.max(...allV))) {
    scene.line(x0 - 4, sy(tick), x0, sy(tick));
    scene.text(x0 - 6, sy(tick) + 3, tick.toExponential(0), 10, "end");
  }
  scene.text(x0 + w / 2, y0 + h + 32, "N", 12, "middle");
  lines.forEach((line, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = line.N.map((n, k) => [sx(n), sy(line.rmse[k])] as [number, number]);
    scene.polyline(pts, color);
    for (const [px, py] of pts) scene.circle(px, py, 2.5, color);
    const label = `${line.method} (${line.slopeRecomputed.toFixed(2)})`;
    scene.text(x0 + 12, y0 + 16 + 14 * i, label, 11);
    scene.line(x0 + 2, y0 + 12 + 14 * i, x0 + 10, y0 + 12 + 14 * i, color, 2);
  });
}

export function renderDensity(text: string, file: string, samplesText?: string, samplesFile?: string): DensityResult {
  const table = parseTable(text);
  const t = numericColumn(table, "t", file);
  const F = numericColumn(table, "F_mean", file);
  // presence is part of the schema even when the estimate has no pdf values
  const f = numericColumn(table, "f_mean", file);
  numericColumn(table, "F_rmse", file);
  numericColumn(table, "f_rmse", file);
  if (t.length === 0) throw new SchemaError(`${file}: no data rows`);

  let histogram: HistogramSeries | null = null;
  if (samplesText !== undefined) {
    const samples = numericColumn(parseTable(samplesText), "sample", samplesFile ?? "samples");
    histogram = buildHistogram(samples, t[0], t[t.length - 1]);
  }
  return { kind: "density", t, F, f, histogram, svg: densitySvg(t, F, f, histogram) };
}

export function buildHistogram(samples: number[], lo: number, hi: number): HistogramSeries {
  const n = samples.length;
  if (n === 0) throw new SchemaError("samples file has no rows");
  const bins = Math.max(5, Math.min(60, Math.round(Math.sqrt(n))));
  const width = (hi - lo) / bins;
  const counts = new Array<number>(bins).fill(0);
  let below = 0;
  for (const x of samples) {
    if (x < lo) {
      below += 1;
      continue;
    }
    if (x >= hi) continue;
    counts[Math.min(bins - 1, Math.floor((x - lo) / width))] += 1;
  }
  const edges = Array.from({ length: bins + 1 }, (_, i) => lo + i * width);
  const density = counts.map((c) => c / (n * width));
  const cumulative: number[] = [];
  let acc = below;
  for (const c of counts) {
    acc += c;
    cumulative.push(acc / n);
  }
  return { edges, density, cumulative };
}

function densitySvg(t: number[], F: number[], f: number[], histogram: HistogramSeries | null): string {
  const width = 880;
  const height = 420;
  const scene = new Scene(width, height);
  drawDensityPanel(scene, t, F, histogram, "cumulative", 60, 40, 340, 300, "cdf");
  drawDensityPanel(scene, t, f, histogram, "density", 500, 40, 340, 300, "pdf");
  return scene.render();
}

function drawDensityPanel(
  scene: Scene,
  t: number[],
  values: number[],
  histogram: HistogramSeries | null,
  overlay: "cumulative" | "density",
  x0: number,
  y0: number,
  w: number,
  h: number,
  title: string,
): void {
  scene.text(x0 + w / 2, y0 - 14, title, 13, "middle");
  scene.line(x0, y0 + h, x0 + w, y0 + h);
  scene.line(x0, y0, x0, y0 + h);
  const finite = values.filter(Number.isFinite);
  const overlayVals = histogram ? histogram[overlay] : [];
  const vMax = Math.max(...finite, ...overlayVals, 1e-12);
  const sx = linearScale(t[0], t[t.length - 1], x0 + 4, x0 + w - 4);
  const sy = linearScale(0, vMax * 1.05, y0 + h, y0 + 8);
  for (const tick of niceTicks(t[0], t[t.length - 1])) {
    scene.line(sx(tick), y0 + h, sx(tick), y0 + h + 4);
    scene.text(sx(tick), y0 + h + 16, String(tick), 10, "middle");
  }
  for (const tick of niceTicks(0, vMax * 1.05, 4)) {
    scene.line(x0 - 4, sy(tick), x0, sy(tick));
    scene.text(x0 - 6, sy(tick) + 3, tick.toPrecision(2), 10, "end");
  }
  scene.text(x0 + w / 2, y0 + h + 32, "t", 12, "middle");
  if (histogram) {
    for (let i = 0; i < histogram.density.length; i++) {
      const value = histogram[overlay][i];
      const px = sx(histogram.edges[i]);
      const pw = sx(histogram.edges[i + 1]) - px;
      scene.rect(px, sy(value), pw, y0 + h - sy(value), "#9ecae1", 0.7);
    }
  }
  const pts = t
    .map((tv, k) => [sx(tv), sy(values[k])] as [number, number])
    .filter(([, py]) => Number.isFinite(py));
  scene.polyline(pts, "#d62728", 2);
  scene.line(x0 + 2, y0 + 12, x0 + 10, y0 + 12, "#d62728", 2);
  scene.text(x0 + 12, y0 + 16, "lattice estimate", 11);
  if (histogram) {
    scene.rect(x0 + 2, y0 + 22, 8, 8, "#9ecae1", 0.7);
    scene.text(x0 + 12, y0 + 30, "sample histogram", 11);
  }
}
