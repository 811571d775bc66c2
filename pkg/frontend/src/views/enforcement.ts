/** Enforcement what-if panel: before/after error-distribution line charts. */

import { clear, el, svg } from "../dom.js";
import type { EnforceReport } from "../types.js";
import { histogramBars, totalCount } from "../viewmodel.js";

const W = 420;
const H = 150;
const PAD = 26;

export function renderEnforcement(
  container: HTMLElement,
  status: string | null,
  report: EnforceReport | null,
  onClose: () => void,
): void {
  clear(container);
  if (!status && !report) {
    container.classList.remove("open");
    return;
  }
  container.classList.add("open");
  const head = el("div", { class: "panel-head" }, [
    el("strong", {}, ["Attention enforcement"]),
    el("button", { class: "close", onclick: onClose }, ["✕"]),
  ]);
  container.append(head);
  if (!report) {
    container.append(el("p", { class: "hint" }, [`job ${status}...`]));
    return;
  }

  const bars = histogramBars(report.histogram);
  const maxCount = Math.max(1, ...bars.map((b) => Math.max(b.before, b.after)));
  const x = (v: number) => {
    const lo = bars[0]?.x0 ?? 0;
    const hi = bars[bars.length - 1]?.x1 ?? 1;
    return PAD + ((v - lo) / (hi - lo || 1)) * (W - 2 * PAD);
  };
  const y = (c: number) => H - PAD - (c / maxCount) * (H - 2 * PAD);

  const plot = svg("svg", { width: W, height: H, class: "report-plot" });
  plot.append(svg("line", { x1: PAD, y1: H - PAD, x2: W - PAD, y2: H - PAD, stroke: "#bbb" }));
  for (const [key, color] of [["before", "#888888"], ["after", "#1f77b4"]] as const) {
    const pts = bars
      .map((b) => `${x((b.x0 + b.x1) / 2).toFixed(1)},${y(b[key]).toFixed(1)}`)
      .join(" ");
    plot.append(
      svg("polyline", {
        points: pts,
        fill: "none",
        stroke: color,
        "stroke-width": 1.6,
        class: `hist-${key}`,
      }),
    );
  }
  plot.append(svg("text", { x: PAD, y: 12, class: "axis" }, ["frequency"]));
  plot.append(svg("text", { x: W - PAD, y: H - 8, class: "axis", "text-anchor": "end" }, ["absolute error"]));
  container.append(plot);

  const summary = el("div", { class: "report-summary" }, [
    el("p", {}, [
      `mean error shift ${report.histogram.mean_shift >= 0 ? "+" : ""}${report.histogram.mean_shift.toFixed(3)} `,
      report.histogram.mean_shift < 0 ? "(moved left: improvement)" : "(no improvement)",
    ]),
    el("p", {}, [
      `enforced roads: ${report.targets.join(", ") || "none"} - `,
      `${Math.round(report.fraction_improved * 100)}% improved, `,
      `mean ΔMAE ${report.mean_delta >= 0 ? "+" : ""}${report.mean_delta.toFixed(3)}`,
    ]),
  ]);
  const table = el("table", { class: "report-table" });
  const headRow = el("tr", {}, [el("th", {}, ["road"])]);
  for (const h of report.horizons) {
    headRow.append(el("th", {}, [`${h}m before`]), el("th", {}, [`${h}m after`]));
  }
  table.append(headRow);
  report.targets.forEach((road, i) => {
    const row = el("tr", {}, [el("td", {}, [road])]);
    report.horizons.forEach((_, j) => {
      row.append(
        el("td", { class: "num" }, [report.mae_before[i][j].toFixed(2)]),
        el("td", { class: "num" }, [report.mae_after[i][j].toFixed(2)]),
      );
    });
    table.append(row);
  });
  summary.append(table);
  summary.append(
    el("p", { class: "fine" }, [
      `histogram counts: ${totalCount(bars, "before")} before / ${totalCount(bars, "after")} after; `,
      `locality ${report.locality_ok ? "ok" : "VIOLATED"}`,
    ]),
  );
  container.append(summary);
}
