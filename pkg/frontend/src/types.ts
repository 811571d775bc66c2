/** Response body types for the snapshot API. The UI renders these values
 * as-is: every number on screen comes from the backend. */

export interface Range {
  min: number;
  max: number;
}

export interface SnapshotMeta {
  id: string;
  dataset: string;
  version: number;
  date_range: { start: string; end: string };
  test_range: { start: string; end: string };
  horizons: number[];
  horizon_default: number;
  q1: number;
  q3: number;
  k: number;
  unit: string;
  interval_minutes: number;
  roads_count: number;
  speed_range: Range;
  mae_range: Range;
}

export interface HistogramBin {
  lo: number;
  hi: number;
  height: number;
}

export interface Road {
  id: string;
  lat: number | null;
  lon: number | null;
  cluster: number;
  mae: Record<string, number | null>;
  avg_mae: number | null;
  std: number;
  mean_speed: number;
  histogram: HistogramBin[];
  cohort: "low" | "mid" | "high";
}

export interface Trend {
  road: string;
  slots: number[];
  support: number[];
}

export interface SeriesCursor {
  t: string;
  ae: number;
  std: number;
  display: string;
}

export interface Series {
  road: string;
  start: string;
  interval_minutes: number;
  horizon: number;
  actual: number[];
  predicted: (number | null)[];
  cursor?: SeriesCursor;
}

export interface StMatrix {
  target: string;
  horizon: number;
  ids: string[];
  cells: number[][];
  sentinel: number[];
  self_reference: number;
  head: number | null;
  lags_minutes: number[];
  display_order: string[];
}

export interface Arrow {
  reference: string;
  intensity: number;
}

export interface ArrowSet {
  target: string;
  arrows: Arrow[];
  self_reference: number;
  threshold: number;
  dropped_mass: number;
}

export interface AttentionBody {
  st: StMatrix;
  arrows: ArrowSet;
}

export interface CausalityResult {
  cause: string;
  effect: string;
  lag: number;
  f_value: number;
  dof: [number, number];
  p_value: number;
  display: string;
}

export interface CausalityBody {
  target: string;
  results: CausalityResult[];
}

export interface ClustersBody {
  k: number;
  label: Record<string, number>;
  inertia_curve: [number, number][];
  suggested_k: number;
  degenerate: boolean;
}

export interface HeadClustersBody {
  k: number;
  heads: number;
  scale: "global" | "local";
  high: number[][][];
  low: number[][][];
  empty_rows: Record<string, number[]>;
  windows_used: number;
}

export interface EnforceHistogram {
  edges: number[];
  before: number[];
  after: number[];
  mean_shift: number;
}

export interface EnforceReport {
  horizons: number[];
  targets: string[];
  mae_before: number[][];
  mae_after: number[][];
  histogram: EnforceHistogram;
  mean_delta: number;
  fraction_improved: number;
  locality_ok: boolean;
}

export interface EnforceJob {
  status: "queued" | "running" | "done" | "failed";
  report?: EnforceReport;
  error?: string;
}

export interface SpeedsBody {
  t: string;
  speeds: Record<string, number>;
}
