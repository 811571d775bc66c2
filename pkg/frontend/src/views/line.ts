/** Line chart of actual and predicted speeds with a draggable time cursor. */

import { clear, el, svg } from "../dom.js";
import type { Series, SnapshotMeta } from "../types.js";
import { clusterColor } from "../viewmodel.js";

export interface LineCallbacks {
  onCursor(iso: string): void;
  onRemoveRoad(roadId: string): void;
}

const W = 640;
const H = 180;
const PAD = 28;

function x(i: number, n: number): number {
  return PAD + (i / Math.max(n - 1, 1)) * (W - 2 * PAD);
}

export function renderLine(
  container: HTMLElement,
  series: Map<string, Series>,
  clusters: Record<string, number>,
  meta: SnapshotMeta,
  cursorIso: string | null,
  cb: LineCallbacks,
): void {
  clear(container);
  if (series.size === 0) {
    container.append(el("p", { class: "hint" }, ["Click a road to add its speed line."]));
    return;
  }
  const all = [...series.values()];
  const n = Math.max(...all.map((s) => s.actual.length));
  const values = all.flatMap((s) => [...s.actual, ...s.predicted.filter((v): v is number => v !== null)]);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const y = (v: number) => H - PAD - ((v - lo) / span) * (H - 2 * PAD);

  const labels = el("div", { class: "line-labels" });
  for (const s of all) {
    labels.append(
      el(
        "button",
        { class: "chip", style: `border-color:${clusterColor(clusters[s.road] ?? 0)}`,
          onclick: () => cb.onRemoveRoad(s.road) },
        [`${s.road} ✕`],
      ),
    );
  }
  const cursorInfo = all[0]?.cursor;
  if (cursorInfo) {
    labels.append(el("span", { class: "cursor-info" }, [`${cursorInfo.t}  ${cursorInfo.display}`]));
  }
  container.append(labels);

  const plot = svg("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}`, class: "line-plot" });
  plot.append(svg("line", { x1: PAD, y1: H - PAD, x2: W - PAD, y2: H - PAD, stroke: "#ccc" }));
  plot.append(svg("text", { x: 4, y: y(hi) + 4, class: "axis" }, [hi.toFixed(0)]));
  plot.append(svg("text", { x: 4, y: y(lo) + 4, class: "axis" }, [lo.toFixed(0)]));

  for (const s of all) {
    const color = clusterColor(clusters[s.road] ?? 0);
    const actualPts = s.actual.map((v, i) => `${x(i, n).toFixed(1)},${y(v).toFixed(1)}`).join(" ");
    plot.append(svg("polyline", { points: actualPts, fill: "none", stroke: color, "stroke-width": 1.4 }));
    const predPts = s.predicted
      .map((v, i) => (v === null ? null : `${x(i, n).toFixed(1)},${y(v).toFixed(1)}`))
      .filter((p): p is string => p !== null)
      .join(" ");
    plot.append(
      svg("polyline", {
        points: predPts,
        fill: "none",
        stroke: color,
        "stroke-width": 1.2,
        "stroke-dasharray": "4 3",
        opacity: 0.8,
      }),
    );
  }

  const first = all[0];
  const stepMs = meta.interval_minutes * 60000;
  const startMs = Date.parse(first.start);
  if (cursorIso) {
    const idx = Math.round((Date.parse(cursorIso) - startMs) / stepMs);
    if (idx >= 0 && idx < n) {
      const cx = x(idx, n);
      plot.append(svg("line", { x1: cx, y1: PAD / 2, x2: cx, y2: H - PAD, class: "cursor-bar" }));
    }
  }
  plot.addEventListener("click", (ev: Event) => {
    const mouse = ev as MouseEvent;
    const rect = (plot as unknown as SVGGraphicsElement).getBoundingClientRect();
    const fx = ((mouse.clientX - rect.left) / rect.width) * W;
    const idx = Math.round(((fx - PAD) / (W - 2 * PAD)) * (n - 1));
    if (idx >= 0 && idx < n) {
      cb.onCursor(new Date(startMs + idx * stepMs).toISOString());
    }
  });
  container.append(plot);
}
