/** Sortable road table: id, speed distribution, trend sparkline, cluster,
 * MAE, and causality F values for the selected road. */

import { clear, el, svg } from "../dom.js";
import type { Road, Trend } from "../types.js";
import type { SortColumn, ViewState } from "../state.js";
import { clusterColor, sortRoads } from "../viewmodel.js";

export interface TableCallbacks {
  onSort(column: SortColumn): void;
  onSelect(roadId: string): void;
  onHover(roadId: string | null): void;
}

const COLUMNS: { key: SortColumn; label: string }[] = [
  { key: "id", label: "Road" },
  { key: "std", label: "Speed Dist. (std)" },
  { key: "trend", label: "Trend" },
  { key: "cluster", label: "CLS" },
  { key: "mae", label: "MAE" },
  { key: "ca", label: "CA" },
];

function sparkline(trend: Trend | undefined): SVGElement {
  const w = 96;
  const h = 22;
  const node = svg("svg", { width: w, height: h, class: "spark" });
  if (!trend) {
    return node;
  }
  const lo = Math.min(...trend.slots);
  const hi = Math.max(...trend.slots);
  const span = hi - lo || 1;
  const pts = trend.slots
    .filter((_, i) => i % 4 === 0)
    .map((v, i, arr) => {
      const x = (i / (arr.length - 1)) * (w - 2) + 1;
      const y = h - 2 - ((v - lo) / span) * (h - 4);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  node.append(svg("polyline", { points: pts, fill: "none", stroke: "#456", "stroke-width": 1 }));
  node.append(svg("title", {}, [`daily trend (normalized), min ${lo.toFixed(1)} max ${hi.toFixed(1)}`]));
  return node;
}

function distCell(road: Road): HTMLElement {
  const w = 64;
  const h = 22;
  const plot = svg("svg", { width: w, height: h, class: "dist" });
  const n = road.histogram.length;
  road.histogram.forEach((bin, i) => {
    const bw = (w - 2) / n;
    const bh = bin.height * (h - 4);
    plot.append(
      svg("rect", {
        x: 1 + i * bw,
        y: h - 2 - bh,
        width: Math.max(bw - 1, 1),
        height: bh,
        fill: "#7a9",
      }),
    );
  });
  return el("div", { class: "dist-cell" }, [plot, el("span", {}, [road.std.toFixed(1)])]);
}

export function renderTable(
  container: HTMLElement,
  roads: Road[],
  trends: Map<string, Trend>,
  caValues: Record<string, number>,
  caDisplay: Record<string, string>,
  state: ViewState,
  hiddenRoads: Set<string>,
  cb: TableCallbacks,
): void {
  clear(container);
  const ordered = sortRoads(roads, state.sortColumn, state.sortDir, state.horizon, caValues);
  const header = el("tr", {});
  for (const col of COLUMNS) {
    const active = state.sortColumn === col.key;
    const arrow = active ? (state.sortDir === "asc" ? " ▴" : " ▾") : " ▵";
    header.append(
      el(
        "th",
        {
          class: active ? "sorted" : "",
          "data-column": col.key,
          onclick: () => cb.onSort(col.key),
        },
        [col.label + arrow],
      ),
    );
  }
  const body = el("tbody", {});
  for (const road of ordered) {
    if (hiddenRoads.has(road.id)) continue;
    const mae = road.mae[String(state.horizon)];
    const row = el(
      "tr",
      {
        "data-road": road.id,
        class: state.selectedRoads.includes(road.id) ? "selected" : "",
        onclick: () => cb.onSelect(road.id),
        onmouseenter: () => cb.onHover(road.id),
        onmouseleave: () => cb.onHover(null),
      },
      [
        el("td", { class: "road-id" }, [road.id]),
        el("td", {}, [distCell(road)]),
        el("td", {}, [sparkline(trends.get(road.id))]),
        el("td", {}, [
          el("span", {
            class: "cluster-dot",
            style: `background:${clusterColor(road.cluster)}`,
          }),
          ` ${road.cluster}`,
        ]),
        el("td", { class: "num" }, [mae === null || mae === undefined ? "-" : mae.toFixed(2)]),
        el("td", { class: "num ca" }, [caDisplay[road.id] ?? ""]),
      ],
    );
    body.append(row);
  }
  container.append(el("table", { class: "roads" }, [el("thead", {}, [header]), body]));
}
