/** The eight head-cluster matrices: four heads for the high-error cohort,
 * four for the low-error cohort, with a global/local scale toggle and
 * cluster selection for enforcement. */

import { clear, el, svg } from "../dom.js";
import type { HeadClustersBody } from "../types.js";
import { attentionColor, clusterColor } from "../viewmodel.js";

export interface HeadClusterCallbacks {
  onScale(scale: "global" | "local"): void;
  onToggleCluster(cluster: number): void;
  onTestAlternatives(): void;
  onHoverCell(info: { cohort: string; head: number; target: number; reference: number; value: number } | null): void;
}

const CELL = 18;

function matrixSvg(
  m: number[][],
  cohort: string,
  head: number,
  selected: number[],
  cb: HeadClusterCallbacks,
): SVGElement {
  const k = m.length;
  const size = k * CELL + 16;
  const plot = svg("svg", { width: size, height: size + 12, class: "hc-matrix" });
  for (let t = 0; t < k; t++) {
    for (let r = 0; r < k; r++) {
      const rect = svg("rect", {
        x: 14 + r * CELL,
        y: 2 + t * CELL,
        width: CELL - 1,
        height: CELL - 1,
        fill: attentionColor(m[t][r]),
        class: "hc-cell",
        "data-cohort": cohort,
        "data-head": head,
        "data-target": t,
        "data-reference": r,
        "data-value": m[t][r],
        onmouseenter: () => cb.onHoverCell({ cohort, head, target: t, reference: r, value: m[t][r] }),
        onmouseleave: () => cb.onHoverCell(null),
      });
      rect.append(
        svg("title", {}, [`head ${head + 1} ${cohort}: target C${t} -> reference C${r}: ${m[t][r].toFixed(3)}`]),
      );
      plot.append(rect);
    }
    const marker = svg("rect", {
      x: 0,
      y: 2 + t * CELL,
      width: 10,
      height: CELL - 1,
      fill: clusterColor(t),
      class: selected.includes(t) ? "hc-row selected" : "hc-row",
      "data-cluster": t,
      onclick: () => cb.onToggleCluster(t),
    });
    marker.append(svg("title", {}, [`cluster ${t}: click to select for enforcement`]));
    plot.append(marker);
  }
  plot.append(
    svg("text", { x: 14 + (k * CELL) / 2, y: size + 8, class: "axis", "text-anchor": "middle" }, [
      `Head ${head + 1}`,
    ]),
  );
  return plot;
}

export function renderHeadClusters(
  container: HTMLElement,
  body: HeadClustersBody | null,
  selectedClusters: number[],
  cb: HeadClusterCallbacks,
): void {
  clear(container);
  if (!body) {
    container.append(el("p", { class: "hint" }, ["Loading head-cluster matrices..."]));
    return;
  }
  const toolbar = el("div", { class: "hc-toolbar" }, [
    el("span", {}, ["scale: "]),
    el(
      "button",
      { class: body.scale === "global" ? "on" : "", onclick: () => cb.onScale("global") },
      ["global"],
    ),
    el(
      "button",
      { class: body.scale === "local" ? "on" : "", onclick: () => cb.onScale("local") },
      ["local"],
    ),
    el(
      "button",
      { class: "test-alternatives", onclick: () => cb.onTestAlternatives() },
      ["Test Alternatives"],
    ),
    el("span", { class: "hc-hint" }, [
      selectedClusters.length
        ? ` clusters selected: ${selectedClusters.join(", ")}`
        : " click row markers to select clusters",
    ]),
  ]);
  container.append(toolbar);

  for (const cohort of ["high", "low"] as const) {
    const row = el("div", { class: "hc-row-group", "data-cohort": cohort }, [
      el("span", { class: "hc-label" }, [cohort === "high" ? "high error" : "low error"]),
    ]);
    const matrices = cohort === "high" ? body.high : body.low;
    matrices.forEach((m, head) => {
      row.append(matrixSvg(m, cohort, head, selectedClusters, cb));
    });
    container.append(row);
  }
}
