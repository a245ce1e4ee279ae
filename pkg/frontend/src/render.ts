/**
 * SVG figure rendering via echarts server-side rendering.
 *
 * Two figure kinds:
 *  - "convergence": per-arm mean exact energy vs optimization step with a
 *    horizontal ground-energy reference (green dashed attack-free, yellow
 *    unverified, blue verified);
 *  - "error-scatter": gradient relative error vs trap detections on a log
 *    y-axis with a dashed threshold line.
 */

import * as echarts from "echarts";
import {
  ConvergenceRow,
  RunMetadata,
  ScatterRow,
  SchemaError,
} from "./csv.js";

export type FigureKind = "convergence" | "error-scatter";

const ARM_STYLES: Record<string, { color: string; type: "solid" | "dashed" }> = {
  "attack-free": { color: "#2ca02c", type: "dashed" },
  "no-traps": { color: "#ffbf00", type: "solid" },
  traps: { color: "#1f77b4", type: "solid" },
};

const WIDTH = 860;
const HEIGHT = 560;

function renderOption(option: echarts.EChartsOption): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  chart.setOption({ animation: false, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return normalizeIds(svg);
}

/** zrender bakes a process-global instance counter into CSS class names and
 * clip-path ids; remap them to stable sequential names so identical inputs
 * give identical bytes. */
function normalizeIds(svg: string): string {
  const mapping = new Map<string, string>();
  return svg.replace(/zr\d+-[a-z-]*\d+/g, (name) => {
    if (!mapping.has(name)) mapping.set(name, `zr-auto-${mapping.size}`);
    return mapping.get(name)!;
  });
}

function padded(values: number[]): { min: number; max: number } {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const pad = hi > lo ? 0.08 * (hi - lo) : Math.max(1e-6, 0.5 * Math.abs(hi) + 0.5);
  return { min: lo - pad, max: hi + pad };
}

export function renderConvergence(
  rows: ConvergenceRow[],
  meta: RunMetadata,
): string {
  const arms = [...new Set(rows.map((r) => r.arm))];
  const series: echarts.SeriesOption[] = arms.map((arm) => {
    const style = ARM_STYLES[arm] ?? { color: "#888888", type: "solid" as const };
    return {
      name: arm,
      type: "line",
      showSymbol: false,
      data: rows
        .filter((r) => r.arm === arm)
        .sort((a, b) => a.step - b.step)
        .map((r) => [r.step, r.meanFExact]),
      lineStyle: { color: style.color, type: style.type, width: 2 },
      itemStyle: { color: style.color },
    };
  });
  if (meta.groundEnergy !== undefined) {
    series.push({
      name: "ground energy",
      type: "line",
      markLine: {
        symbol: "none",
        silent: true,
        lineStyle: { color: "#444444", type: "dotted" },
        label: { formatter: "E0", position: "end" },
        data: [{ yAxis: meta.groundEnergy }],
      },
      data: [],
    });
  }
  const caption = describeRun(meta);
  // the y extent must cover the reference energy or the markLine clips away
  const ys = rows.map((r) => r.meanFExact);
  if (meta.groundEnergy !== undefined) ys.push(meta.groundEnergy);
  const extent = ys.length ? padded(ys) : { min: -1, max: 1 };
  return renderOption({
    title: { text: "Mean exact energy vs optimization step", subtext: caption },
    legend: { data: arms, top: 40 },
    grid: { top: 90, left: 70, right: 30, bottom: 50 },
    xAxis: { type: "value", name: "step", nameLocation: "middle", nameGap: 28 },
    yAxis: {
      type: "value",
      name: "mean exact energy",
      nameLocation: "middle",
      nameGap: 45,
      min: extent.min,
      max: extent.max,
      axisLabel: { formatter: (v: number) => v.toFixed(2) },
    },
    series,
  });
}

export function renderErrorScatter(rows: ScatterRow[], meta: RunMetadata): string {
  if (meta.eTh === undefined) {
    throw new SchemaError("metadata lacks the e_th threshold for the scatter figure");
  }
  const groups = new Map<string, ScatterRow[]>();
  for (const row of rows) {
    const key = `p=${row.pAttack}, shift=${row.angleShift.toFixed(3)}`;
    const bucket = groups.get(key) ?? [];
    bucket.push(row);
    groups.set(key, bucket);
  }
  const palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
  const series: echarts.SeriesOption[] = [...groups.entries()].map(
    ([label, bucket], i) => ({
      name: label,
      type: "scatter",
      symbolSize: 9,
      itemStyle: { color: palette[i % palette.length] },
      // log axis cannot place non-positive error values
      data: bucket.filter((r) => r.e > 0).map((r) => [r.nTd, r.e]),
    }),
  );
  series.push({
    name: "threshold",
    type: "line",
    markLine: {
      symbol: "none",
      silent: true,
      lineStyle: { color: "#d62728", type: "dashed", width: 2 },
      label: { formatter: "e_th", position: "end" },
      data: [{ yAxis: meta.eTh }],
    },
    data: [],
  });
  const positive = rows.filter((r) => r.e > 0).map((r) => r.e);
  positive.push(meta.eTh);
  return renderOption({
    title: {
      text: "Gradient relative error vs trap detections",
      subtext: describeRun(meta),
    },
    legend: { type: "scroll", top: 40 },
    grid: { top: 100, left: 80, right: 40, bottom: 50 },
    xAxis: { type: "value", name: "trap detections", nameLocation: "middle", nameGap: 28, minInterval: 1 },
    yAxis: {
      type: "log",
      name: "relative error e",
      nameLocation: "middle",
      nameGap: 55,
      min: Math.min(...positive) / 2,
      max: Math.max(...positive) * 2,
    },
    series,
  });
}

function describeRun(meta: RunMetadata): string {
  const config = (meta.raw.config ?? {}) as Record<string, unknown>;
  const bits: string[] = [];
  for (const key of ["lattice", "h", "layers", "shots", "t_rounds", "n_iter", "seeds", "seed"]) {
    if (config[key] !== undefined) bits.push(`${key}=${JSON.stringify(config[key])}`);
  }
  if (meta.eTh !== undefined) bits.push(`e_th=${meta.eTh}`);
  return bits.join("  ");
}
