/** Linked-view state, serializable to the URL hash for shareable sessions. */

import type { SnapshotMeta } from "./types.js";

export type SortDir = "asc" | "desc";
export type SortColumn = "id" | "std" | "trend" | "cluster" | "mae" | "ca";

export interface ViewState {
  horizon: number;
  maeThreshold: number;
  attnThreshold: number;
  selectedRoads: string[];
  cursor: string | null; // ISO timestamp within the test range
  selectedClusters: number[];
  heatmap: boolean;
  labels: boolean;
  causalityMode: boolean;
  sortColumn: SortColumn;
  sortDir: SortDir;
  head: number | null; // null = head mean
}

export function defaultState(meta: SnapshotMeta): ViewState {
  return {
    horizon: meta.horizon_default,
    maeThreshold: meta.mae_range.max,
    attnThreshold: 0.1,
    selectedRoads: [],
    cursor: null,
    selectedClusters: [],
    heatmap: false,
    labels: false,
    causalityMode: false,
    sortColumn: "cluster",
    sortDir: "asc",
    head: null,
  };
}

export function toQuery(state: ViewState): string {
  const q = new URLSearchParams();
  q.set("h", String(state.horizon));
  q.set("mae", state.maeThreshold.toFixed(3));
  q.set("attn", state.attnThreshold.toFixed(3));
  if (state.selectedRoads.length) q.set("roads", state.selectedRoads.join(","));
  if (state.cursor) q.set("t", state.cursor);
  if (state.selectedClusters.length) q.set("cls", state.selectedClusters.join(","));
  if (state.heatmap) q.set("jam", "1");
  if (state.labels) q.set("lbl", "1");
  if (state.causalityMode) q.set("ca", "1");
  q.set("sort", `${state.sortColumn}.${state.sortDir}`);
  if (state.head !== null) q.set("head", String(state.head));
  return q.toString();
}

export function fromQuery(query: string, meta: SnapshotMeta): ViewState {
  const q = new URLSearchParams(query);
  const state = defaultState(meta);
  const h = Number(q.get("h"));
  if (meta.horizons.includes(h)) state.horizon = h;
  const mae = Number(q.get("mae"));
  if (Number.isFinite(mae)) {
    state.maeThreshold = clampNumber(mae, meta.mae_range.min, meta.mae_range.max);
  }
  const attn = Number(q.get("attn"));
  if (Number.isFinite(attn)) state.attnThreshold = clampNumber(attn, 0, 1);
  const roads = q.get("roads");
  if (roads) state.selectedRoads = roads.split(",").filter(Boolean);
  const t = q.get("t");
  if (t) state.cursor = clampCursor(t, meta);
  const cls = q.get("cls");
  if (cls) {
    state.selectedClusters = cls
      .split(",")
      .map(Number)
      .filter((c) => Number.isInteger(c) && c >= 0 && c < meta.k);
  }
  state.heatmap = q.get("jam") === "1";
  state.labels = q.get("lbl") === "1";
  state.causalityMode = q.get("ca") === "1";
  const sort = q.get("sort");
  if (sort) {
    const [col, dir] = sort.split(".");
    const cols: SortColumn[] = ["id", "std", "trend", "cluster", "mae", "ca"];
    if (cols.includes(col as SortColumn)) state.sortColumn = col as SortColumn;
    if (dir === "asc" || dir === "desc") state.sortDir = dir;
  }
  const head = q.get("head");
  if (head !== null && head !== "") {
    const n = Number(head);
    if (Number.isInteger(n) && n >= 0) state.head = n;
  }
  return state;
}

export function clampNumber(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Keep the cursor inside the snapshot's test range. */
export function clampCursor(iso: string, meta: SnapshotMeta): string {
  const t = Date.parse(iso);
  if (Number.isNaN(t)) return meta.test_range.start;
  const lo = Date.parse(meta.test_range.start);
  const hi = Date.parse(meta.test_range.end);
  const clamped = Math.min(hi, Math.max(lo, t));
  return clamped === t ? iso : new Date(clamped).toISOString();
}
