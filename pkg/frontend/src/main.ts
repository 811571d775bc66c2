/** App wiring: one ViewState drives every view; data comes from the API. */

import { Api } from "./api.js";
import { defaultState, fromQuery, toQuery, type SortColumn, type ViewState } from "./state.js";
import type {
  AttentionBody,
  CausalityBody,
  ClustersBody,
  EnforceReport,
  HeadClustersBody,
  Road,
  Series,
  SnapshotMeta,
  SpeedsBody,
  Trend,
} from "./types.js";
import { highErrorIds } from "./viewmodel.js";
import { renderFilter } from "./views/filter.js";
import { renderTable } from "./views/table.js";
import { renderLine } from "./views/line.js";
import { renderMap } from "./views/map.js";
import { renderStMatrix } from "./views/stmatrix.js";
import { renderHeadClusters } from "./views/headcluster.js";
import { renderEnforcement } from "./views/enforcement.js";

class App {
  private api = new Api("");
  private state!: ViewState;
  private meta!: SnapshotMeta;
  private roads: Road[] = [];
  private clusters!: ClustersBody;
  private trends = new Map<string, Trend>();
  private series = new Map<string, Series>();
  private attention: AttentionBody | null = null;
  private causality: CausalityBody | null = null;
  private headclusters: HeadClustersBody | null = null;
  private speeds: SpeedsBody | null = null;
  private jobStatus: string | null = null;
  private report: EnforceReport | null = null;
  private inflight: AbortController | null = null;

  async start(): Promise<void> {
    this.meta = await this.api.snapshot();
    this.state = location.hash.length > 1 ? fromQuery(location.hash.slice(1), this.meta) : defaultState(this.meta);
    if (!this.state.cursor) {
      this.state.cursor = this.meta.test_range.start;
    }
    [this.roads, this.clusters, this.headclusters] = await Promise.all([
      this.api.roads(),
      this.api.clusters(),
      this.api.headclusters("global"),
    ]);
    void this.loadTrends();
    await this.refresh();
  }

  private async loadTrends(): Promise<void> {
    for (const road of this.roads) {
      try {
        this.trends.set(road.id, await this.api.trend(road.id));
      } catch {
        // sparkline stays empty for this road
      }
    }
    this.renderAll();
  }

  private update(patch: Partial<ViewState>): void {
    Object.assign(this.state, patch);
    location.hash = toQuery(this.state);
    void this.refresh();
  }

  /** Re-fetch everything the current state depends on, then render once. */
  private async refresh(): Promise<void> {
    this.inflight?.abort();
    const ctl = new AbortController();
    this.inflight = ctl;
    const tasks: Promise<void>[] = [];
    const cursor = this.state.cursor;

    this.series.clear();
    for (const road of this.state.selectedRoads) {
      tasks.push(
        this.api
          .series(road, { horizon: this.state.horizon, ...(cursor ? { cursor } : {}) }, ctl.signal)
          .then((s) => void this.series.set(road, s))
          .catch(() => undefined),
      );
    }
    const focus = this.state.selectedRoads[0];
    this.attention = null;
    if (focus && cursor) {
      tasks.push(
        this.api
          .attention(
            focus,
            {
              t: cursor,
              horizon: this.state.horizon,
              threshold: 0,
              ...(this.state.head === null ? {} : { head: this.state.head }),
            },
            ctl.signal,
          )
          .then((a) => void (this.attention = a))
          .catch(() => undefined),
      );
    }
    this.causality = null;
    if (focus && this.state.causalityMode) {
      tasks.push(
        this.api
          .causality(focus, ctl.signal)
          .then((c) => void (this.causality = c))
          .catch(() => undefined),
      );
    }
    this.speeds = null;
    if (this.state.heatmap && cursor) {
      tasks.push(
        this.api
          .speeds(cursor, ctl.signal)
          .then((s) => void (this.speeds = s))
          .catch(() => undefined),
      );
    }
    await Promise.all(tasks);
    if (ctl.signal.aborted) return;
    this.renderAll();
  }

  private async setScale(scale: "global" | "local"): Promise<void> {
    this.headclusters = await this.api.headclusters(scale);
    this.renderAll();
  }

  private async testAlternatives(): Promise<void> {
    if (!this.state.selectedClusters.length) {
      this.jobStatus = "select clusters first";
      this.report = null;
      this.renderAll();
      return;
    }
    this.jobStatus = "queued";
    this.report = null;
    this.renderAll();
    try {
      const jobId = await this.api.enforce({
        clusters: this.state.selectedClusters,
        k: 3,
        alpha: 0.5,
      });
      const job = await this.api.waitForJob(jobId);
      this.jobStatus = job.status;
      this.report = job.report ?? null;
      if (job.status === "failed") {
        this.jobStatus = `failed: ${job.error ?? "unknown"}`;
      }
    } catch (err) {
      this.jobStatus = `failed: ${String(err)}`;
    }
    this.renderAll();
  }

  /** Roads hidden by causality-analysis mode (p >= 0.05 filtered by the API). */
  private hiddenRoads(): Set<string> {
    if (!this.state.causalityMode || !this.causality) {
      return new Set();
    }
    const significant = new Set(this.causality.results.map((r) => r.cause));
    significant.add(this.causality.target);
    return new Set(this.roads.map((r) => r.id).filter((id) => !significant.has(id)));
  }

  private renderAll(): void {
    const get = (id: string) => document.getElementById(id) as HTMLElement;
    const high = highErrorIds(this.roads, this.state.maeThreshold, this.state.horizon);
    const hidden = this.hiddenRoads();
    const caValues: Record<string, number> = {};
    const caDisplay: Record<string, string> = {};
    for (const r of this.causality?.results ?? []) {
      caValues[r.cause] = r.f_value;
      caDisplay[r.cause] = r.display;
    }

    renderFilter(get("filter-view"), this.meta, this.state, this.headclusters?.heads ?? 4, {
      onHorizon: (h) => this.update({ horizon: h }),
      onMaeThreshold: (v) => this.update({ maeThreshold: v }),
      onAttnThreshold: (v) => this.update({ attnThreshold: v }),
      onHead: (head) => this.update({ head }),
    });
    renderTable(get("table-view"), this.roads, this.trends, caValues, caDisplay, this.state, hidden, {
      onSort: (column: SortColumn) =>
        this.update(
          this.state.sortColumn === column
            ? { sortDir: this.state.sortDir === "asc" ? "desc" : "asc" }
            : { sortColumn: column, sortDir: "asc" },
        ),
      onSelect: (roadId) => this.toggleRoad(roadId),
      onHover: (roadId) => this.highlight(roadId),
    });
    const clusterOf: Record<string, number> = {};
    for (const r of this.roads) clusterOf[r.id] = r.cluster;
    renderLine(get("line-view"), this.series, clusterOf, this.meta, this.state.cursor, {
      onCursor: (iso) => this.update({ cursor: iso }),
      onRemoveRoad: (roadId) =>
        this.update({ selectedRoads: this.state.selectedRoads.filter((r) => r !== roadId) }),
    });
    renderMap(
      get("map-view"),
      this.roads,
      high,
      this.attention?.arrows ?? null,
      this.state.attnThreshold,
      this.speeds?.speeds ?? null,
      this.meta.speed_range,
      this.state.selectedRoads,
      hidden,
      { heatmap: this.state.heatmap, labels: this.state.labels, causality: this.state.causalityMode },
      {
        onSelect: (roadId) => this.toggleRoad(roadId),
        onToggle: (which) =>
          this.update(
            which === "heatmap"
              ? { heatmap: !this.state.heatmap }
              : which === "labels"
                ? { labels: !this.state.labels }
                : { causalityMode: !this.state.causalityMode },
          ),
        onClear: () => this.update({ selectedRoads: [], causalityMode: false }),
      },
    );
    renderStMatrix(get("st-view"), this.attention?.st ?? null, {
      onHoverRoad: (roadId) => this.highlight(roadId),
    });
    renderHeadClusters(get("headcluster-view"), this.headclusters, this.state.selectedClusters, {
      onScale: (scale) => void this.setScale(scale),
      onToggleCluster: (cluster) =>
        this.update({
          selectedClusters: this.state.selectedClusters.includes(cluster)
            ? this.state.selectedClusters.filter((c) => c !== cluster)
            : [...this.state.selectedClusters, cluster].sort(),
        }),
      onTestAlternatives: () => void this.testAlternatives(),
      onHoverCell: () => undefined,
    });
    renderEnforcement(get("enforcement-view"), this.jobStatus, this.report, () => {
      this.jobStatus = null;
      this.report = null;
      this.renderAll();
    });
  }

  private toggleRoad(roadId: string): void {
    const selected = this.state.selectedRoads.includes(roadId)
      ? this.state.selectedRoads.filter((r) => r !== roadId)
      : [roadId, ...this.state.selectedRoads];
    this.update({ selectedRoads: selected });
  }

  private highlight(roadId: string | null): void {
    for (const node of document.querySelectorAll("[data-road]")) {
      node.classList.toggle("hover", roadId !== null && node.getAttribute("data-road") === roadId);
    }
  }
}

declare global {
  interface Window {
    trafficlensApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("filter-view")) {
  const app = new App();
  window.trafficlensApp = app;
  app.start().catch((err) => {
    const banner = document.getElementById("error-banner");
    if (banner) {
      banner.textContent = `API unreachable: ${String(err)}`;
      banner.classList.add("visible");
    }
  });
}

export { App };
