/** Schematic map: road dots with cluster rings, congestion heatmap,
 * attention arrows with intensity-shaded heads, and a self-reference donut
 * around the selected road. */

import { clear, el, svg } from "../dom.js";
import type { ArrowSet, Road } from "../types.js";
import { attentionColor, clusterColor, congestionColor, visibleArrows } from "../viewmodel.js";

export interface MapCallbacks {
  onSelect(roadId: string): void;
  onToggle(which: "heatmap" | "labels" | "causality"): void;
  onClear(): void;
}

const W = 520;
const H = 420;
const PAD = 30;

interface Projected {
  road: Road;
  x: number;
  y: number;
}

function project(roads: Road[]): Map<string, Projected> {
  const placed = roads.filter((r) => r.lat !== null && r.lon !== null);
  const lats = placed.map((r) => r.lat as number);
  const lons = placed.map((r) => r.lon as number);
  const latSpan = Math.max(...lats) - Math.min(...lats) || 1;
  const lonSpan = Math.max(...lons) - Math.min(...lons) || 1;
  const out = new Map<string, Projected>();
  for (const road of placed) {
    out.set(road.id, {
      road,
      x: PAD + (((road.lon as number) - Math.min(...lons)) / lonSpan) * (W - 2 * PAD),
      y: H - PAD - (((road.lat as number) - Math.min(...lats)) / latSpan) * (H - 2 * PAD),
    });
  }
  return out;
}

function donut(cx: number, cy: number, r: number, fraction: number): SVGElement {
  const angle = Math.min(0.9999, Math.max(0, fraction)) * 2 * Math.PI;
  const x1 = cx + r * Math.sin(angle);
  const y1 = cy - r * Math.cos(angle);
  const large = angle > Math.PI ? 1 : 0;
  return svg("path", {
    d: `M ${cx} ${cy - r} A ${r} ${r} 0 ${large} 1 ${x1} ${y1}`,
    fill: "none",
    stroke: "#1f77b4",
    "stroke-width": 3,
    class: "donut",
  });
}

export function renderMap(
  container: HTMLElement,
  roads: Road[],
  highError: Set<string>,
  arrows: ArrowSet | null,
  attnThreshold: number,
  speeds: Record<string, number> | null,
  speedRange: { min: number; max: number },
  selected: string[],
  hiddenRoads: Set<string>,
  flags: { heatmap: boolean; labels: boolean; causality: boolean },
  cb: MapCallbacks,
): void {
  clear(container);
  const buttons = el("div", { class: "map-buttons" }, [
    el("button", { class: flags.causality ? "on" : "", onclick: () => cb.onToggle("causality") }, ["CA"]),
    el("button", { onclick: () => cb.onClear() }, ["CLR"]),
    el("button", { class: flags.labels ? "on" : "", onclick: () => cb.onToggle("labels") }, ["LBL"]),
    el("button", { class: flags.heatmap ? "on" : "", onclick: () => cb.onToggle("heatmap") }, ["JAM"]),
  ]);
  container.append(buttons);

  const plot = svg("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}`, class: "map-plot" });
  const pos = project(roads);

  if (flags.heatmap && speeds) {
    for (const p of pos.values()) {
      const speed = speeds[p.road.id];
      if (speed === undefined) continue;
      plot.append(
        svg("circle", {
          cx: p.x,
          cy: p.y,
          r: 22,
          fill: congestionColor(speed, speedRange.min, speedRange.max),
          opacity: 0.55,
          class: "heat",
        }),
      );
    }
  }

  if (arrows) {
    const from = pos.get(arrows.target);
    if (from) {
      for (const arrow of visibleArrows(arrows.arrows, attnThreshold)) {
        const to = pos.get(arrow.reference);
        if (!to || hiddenRoads.has(arrow.reference)) continue;
        const mx = (from.x + to.x) / 2 + (from.y - to.y) * 0.25;
        const my = (from.y + to.y) / 2 + (to.x - from.x) * 0.25;
        plot.append(
          svg("path", {
            d: `M ${to.x} ${to.y} Q ${mx} ${my} ${from.x} ${from.y}`,
            fill: "none",
            stroke: "#888",
            "stroke-width": 1.2,
            class: "attn-arrow",
            "data-reference": arrow.reference,
          }),
        );
        plot.append(
          svg("circle", {
            cx: from.x + (to.x - from.x) * 0.12,
            cy: from.y + (to.y - from.y) * 0.12,
            r: 4,
            fill: attentionColor(arrow.intensity),
            class: "attn-head",
          }, [svg("title", {}, [`${arrow.reference}: ${arrow.intensity.toFixed(3)}`])]),
        );
      }
    }
  }

  for (const p of pos.values()) {
    if (hiddenRoads.has(p.road.id)) continue;
    const isSelected = selected.includes(p.road.id);
    const group = svg("g", {
      class: "road-dot",
      "data-road": p.road.id,
      onclick: () => cb.onSelect(p.road.id),
    });
    group.append(
      svg("circle", {
        cx: p.x,
        cy: p.y,
        r: 9,
        fill: "none",
        stroke: clusterColor(p.road.cluster),
        "stroke-width": 2.5,
        class: "cluster-ring",
      }),
    );
    group.append(
      svg("circle", {
        cx: p.x,
        cy: p.y,
        r: 5,
        fill: isSelected ? "steelblue" : highError.has(p.road.id) ? "#111" : "#fff",
        stroke: "#777",
        "stroke-width": 0.8,
        class: highError.has(p.road.id) ? "center high-error" : "center",
      }),
    );
    if (isSelected && arrows && arrows.target === p.road.id) {
      group.append(donut(p.x, p.y, 13, arrows.self_reference));
      group.append(svg("title", {}, [`self-reference ${arrows.self_reference.toFixed(2)}`]));
    }
    if (flags.labels) {
      group.append(svg("text", { x: p.x + 12, y: p.y + 4, class: "road-label" }, [p.road.id]));
    }
    plot.append(group);
  }
  container.append(plot);
}
