/** Pixel view of one road's spatio-temporal attention: columns are
 * reference roads (intensity-ordered), rows are the 12 past steps. */

import { clear, el, svg } from "../dom.js";
import type { StMatrix } from "../types.js";
import { attentionColor } from "../viewmodel.js";

export interface StCallbacks {
  onHoverRoad(roadId: string | null): void;
}

export function renderStMatrix(container: HTMLElement, st: StMatrix | null, cb: StCallbacks): void {
  clear(container);
  if (!st) {
    container.append(el("p", { class: "hint" }, ["Select a road and a time to see its attention."]));
    return;
  }
  const cell = 16;
  const labelW = 44;
  const order = st.display_order;
  const w = labelW + order.length * cell + 8;
  const h = 14 + st.lags_minutes.length * cell + 40;
  const plot = svg("svg", { width: w, height: h, class: "st-plot" });

  // lag axis: top row is 5 minutes ago, bottom row 60 minutes ago
  const lags = [...st.lags_minutes].sort((a, b) => a - b);
  lags.forEach((minutes, row) => {
    plot.append(
      svg("text", { x: labelW - 6, y: 14 + row * cell + 12, class: "axis", "text-anchor": "end" }, [
        `${minutes}m`,
      ]),
    );
  });

  order.forEach((roadId, colIdx) => {
    const roadPos = st.ids.indexOf(roadId);
    lags.forEach((minutes, row) => {
      const k = st.lags_minutes.indexOf(minutes); // matrix column index for this lag
      const value = st.cells[roadPos][k];
      const rect = svg("rect", {
        x: labelW + colIdx * cell,
        y: 14 + row * cell,
        width: cell - 1,
        height: cell - 1,
        fill: attentionColor(value),
        class: "st-cell",
        "data-road": roadId,
        "data-lag": minutes,
        onmouseenter: () => cb.onHoverRoad(roadId),
        onmouseleave: () => cb.onHoverRoad(null),
      });
      rect.append(svg("title", {}, [`${roadId} @ ${minutes}m ago: ${value.toFixed(4)}`]));
      plot.append(rect);
    });
    const label = svg("text", {
      x: labelW + colIdx * cell + cell / 2,
      y: 14 + lags.length * cell + 10,
      class: roadId === st.target ? "axis target" : "axis",
      "text-anchor": "middle",
    }, [roadId]);
    plot.append(label);
  });
  container.append(plot);
  container.append(
    el("p", { class: "st-caption" }, [
      `target ${st.target}, horizon ${st.horizon} min, `,
      `head ${st.head === null ? "mean" : st.head}, `,
      `self-reference ${st.self_reference.toFixed(2)}`,
    ]),
  );
}
