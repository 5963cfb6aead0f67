/** The four figure kinds rendered from sweep CSVs.
 *
 * ratio-vs-p       equivalence.csv: upper-ratio curves against p, per depth
 * depth-fan        any sweep CSV: a ratio column against depth, per p
 * cutoff           cutoff.csv: log Besov norm vs depth with slope annotations
 * weighted-scatter weighted.csv: weighted ratio against the A2 constant
 */

import { Table, numericColumn, stringColumn } from "./csv.js";
import { Scene, color, extent, linearScale, plotRange } from "./svg.js";

export interface FigureSpec {
  input: string;
  kind: "ratio-vs-p" | "depth-fan" | "cutoff" | "weighted-scatter";
  output: string;
  x?: string;
  y?: string;
  group?: string;
  title?: string;
}

interface Series {
  label: string;
  points: Array<[number, number]>;
}

function groupSeries(xs: number[], ys: number[], groups: string[]): Series[] {
  const byKey = new Map<string, Array<[number, number]>>();
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    const key = groups[i];
    if (!byKey.has(key)) byKey.set(key, []);
    byKey.get(key)!.push([xs[i], ys[i]]);
  }
  const labels = [...byKey.keys()].sort();
  return labels.map((label) => {
    const pts = byKey.get(label)!;
    pts.sort((a, b) => a[0] - b[0]);
    return { label, points: pts };
  });
}

function lineFigure(series: Series[], title: string, xlabel: string,
                    ylabel: string, annotate?: (s: Scene, xs: any, ys: any) => void): string {
  const scene = new Scene();
  const range = plotRange();
  const allX = series.flatMap((s) => s.points.map((p) => p[0]));
  const allY = series.flatMap((s) => s.points.map((p) => p[1]));
  const xs = linearScale(extent(allX), range.x);
  const ys = linearScale(extent(allY), range.y);
  scene.axes(xs, ys, xlabel, ylabel);
  series.forEach((s, i) => {
    const pts = s.points.map(([x, y]) => [xs(x), ys(y)] as [number, number]);
    scene.polyline(pts, color(i));
    pts.forEach(([x, y]) => scene.circle(x, y, 2.4, color(i)));
    scene.text(range.x[1] - 8, range.y[1] + 14 + 14 * i, s.label,
               { anchor: "end", fill: color(i), size: 11 });
  });
  if (annotate) annotate(scene, xs, ys);
  return scene.render(title);
}

export function ratioVsP(table: Table, spec: FigureSpec): string {
  const xs = numericColumn(table, spec.x ?? "p");
  const ys = numericColumn(table, spec.y ?? "r_upper");
  const groups = stringColumn(table, spec.group ?? "depth").map((d) => `depth ${d}`);
  const series = groupSeries(xs, ys, groups);
  return lineFigure(series, spec.title ?? "commutator/Besov ratio vs p",
                    spec.x ?? "p", spec.y ?? "r_upper");
}

export function depthFan(table: Table, spec: FigureSpec): string {
  const xs = numericColumn(table, spec.x ?? "depth");
  const ys = numericColumn(table, spec.y ?? "ratio");
  const groups = stringColumn(table, spec.group ?? "p").map((p) => `p = ${p}`);
  const series = groupSeries(xs, ys, groups);
  return lineFigure(series, spec.title ?? "ratio stability across depths",
                    spec.x ?? "depth", spec.y ?? "ratio");
}

export function cutoff(table: Table, spec: FigureSpec): string {
  const depth = numericColumn(table, spec.x ?? "depth");
  const norm = numericColumn(table, spec.y ?? "besov");
  const groups = stringColumn(table, spec.group ?? "p").map((p) => `p = ${p}`);
  const logNorm = norm.map((v) => (v > 0 ? Math.log(v) : NaN));
  const series = groupSeries(depth, logNorm, groups);
  return lineFigure(series, spec.title ?? "Besov norm growth under refinement",
                    "depth", "log norm", (scene, xs, ys) => {
      series.forEach((s, i) => {
        if (s.points.length < 2) return;
        const [x0, y0] = s.points[0];
        const [x1, y1] = s.points[s.points.length - 1];
        const slope = (y1 - y0) / (x1 - x0 || 1);
        scene.text(xs(x1) - 4, ys(y1) - 8,
                   `slope ${slope.toFixed(3)}`, { anchor: "end", size: 10, fill: color(i) });
      });
    });
}

export function weightedScatter(table: Table, spec: FigureSpec): string {
  const a2 = numericColumn(table, spec.x ?? "a2");
  const ratio = numericColumn(table, spec.y ?? "ratio");
  const groups = stringColumn(table, spec.group ?? "p").map((p) => `p = ${p}`);
  const scene = new Scene();
  const range = plotRange();
  const xs = linearScale(extent(a2), range.x);
  const ys = linearScale(extent(ratio), range.y);
  scene.axes(xs, ys, "A2 constant", spec.y ?? "ratio");
  const labels = [...new Set(groups)].sort();
  const colorOf = new Map(labels.map((l, i) => [l, color(i)]));
  for (let i = 0; i < a2.length; i++) {
    if (!Number.isFinite(a2[i]) || !Number.isFinite(ratio[i])) continue;
    scene.circle(xs(a2[i]), ys(ratio[i]), 3.2, colorOf.get(groups[i])!);
  }
  labels.forEach((l, i) => scene.text(range.x[1] - 8, range.y[1] + 14 + 14 * i, l,
                                      { anchor: "end", fill: color(i), size: 11 }));
  return scene.render(spec.title ?? "weighted ratio vs A2 constant");
}

const RENDERERS = {
  "ratio-vs-p": ratioVsP,
  "depth-fan": depthFan,
  "cutoff": cutoff,
  "weighted-scatter": weightedScatter,
} as const;

export function renderFigure(table: Table, spec: FigureSpec): string {
  const renderer = RENDERERS[spec.kind];
  if (!renderer) {
    throw new Error(`UnknownFigureKindError: ${spec.kind}`);
  }
  return renderer(table, spec);
}
