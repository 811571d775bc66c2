/** Pure view-model transforms: sorting, filtering, marking.
 *
 * Nothing here computes domain quantities; it only orders and filters
 * values fetched from the API.
 */

import type { Arrow, EnforceHistogram, Road } from "./types.js";
import type { SortColumn, SortDir } from "./state.js";

type SortKey = string | number;

function key(road: Road, column: SortColumn, horizon: number, ca: Record<string, number>): SortKey {
  switch (column) {
    case "id":
      return road.id;
    case "std":
      return road.std;
    case "trend":
      return road.mean_speed;
    case "cluster":
      return road.cluster;
    case "mae":
      return road.mae[String(horizon)] ?? Number.POSITIVE_INFINITY;
    case "ca":
      // F value of (row road -> selected target); missing = not significant
      return ca[road.id] ?? Number.NEGATIVE_INFINITY;
  }
}

export function sortRoads(
  roads: Road[],
  column: SortColumn,
  dir: SortDir,
  horizon: number,
  ca: Record<string, number> = {},
): Road[] {
  const sign = dir === "asc" ? 1 : -1;
  return [...roads].sort((a, b) => {
    const ka = key(a, column, horizon, ca);
    const kb = key(b, column, horizon, ca);
    if (ka < kb) return -sign;
    if (ka > kb) return sign;
    return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
  });
}

/** Roads whose MAE at the horizon exceeds the filter threshold (black center). */
export function highErrorIds(roads: Road[], threshold: number, horizon: number): Set<string> {
  const out = new Set<string>();
  for (const r of roads) {
    const mae = r.mae[String(horizon)];
    if (mae !== null && mae !== undefined && mae > threshold) {
      out.add(r.id);
    }
  }
  return out;
}

/** Arrows at or above the attention filter threshold. */
export function visibleArrows(arrows: Arrow[], threshold: number): Arrow[] {
  return arrows.filter((a) => a.intensity >= threshold);
}

/** Row sums of one k x k matrix (for local-scale sanity display). */
export function rowSums(matrix: number[][]): number[] {
  return matrix.map((row) => row.reduce((s, v) => s + v, 0));
}

export interface HistogramBar {
  x0: number;
  x1: number;
  before: number;
  after: number;
}

export function histogramBars(hist: EnforceHistogram): HistogramBar[] {
  return hist.before.map((b, i) => ({
    x0: hist.edges[i],
    x1: hist.edges[i + 1],
    before: b,
    after: hist.after[i],
  }));
}

export function totalCount(bars: HistogramBar[], which: "before" | "after"): number {
  return bars.reduce((s, b) => s + b[which], 0);
}

/** Categorical, colorblind-safe palette for up to 8 clusters. */
export const CLUSTER_COLORS = [
  "#0072B2",
  "#E69F00",
  "#009E73",
  "#CC79A7",
  "#56B4E9",
  "#D55E00",
  "#F0E442",
  "#999999",
];

export function clusterColor(cluster: number): string {
  return CLUSTER_COLORS[cluster % CLUSTER_COLORS.length];
}

/** Red congestion shade: slower roads are redder; bounds come from the API. */
export function congestionColor(speed: number, min: number, max: number): string {
  const span = max - min;
  const frac = span > 0 ? Math.min(1, Math.max(0, (max - speed) / span)) : 0;
  const light = 97 - Math.round(frac * 47);
  return `hsl(0, 85%, ${light}%)`;
}

/** Blue-to-red pixel shade for attention intensity in [0, 1]. */
export function attentionColor(v: number): string {
  const clamped = Math.min(1, Math.max(0, v));
  const light = 97 - Math.round(clamped * 55);
  return `hsl(350, 80%, ${light}%)`;
}
