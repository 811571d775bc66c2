/** Filter bar: horizon selector, MAE and attention threshold sliders. */

import { clear, el } from "../dom.js";
import type { SnapshotMeta } from "../types.js";
import type { ViewState } from "../state.js";

export interface FilterCallbacks {
  onHorizon(h: number): void;
  onMaeThreshold(v: number): void;
  onAttnThreshold(v: number): void;
  onHead(head: number | null): void;
}

export function renderFilter(
  container: HTMLElement,
  meta: SnapshotMeta,
  state: ViewState,
  heads: number,
  cb: FilterCallbacks,
): void {
  clear(container);
  container.append(
    el("span", { class: "brand" }, [meta.dataset]),
    el("span", { class: "range" }, [`${meta.date_range.start.slice(0, 10)} .. ${meta.date_range.end.slice(0, 10)}`]),
  );

  const horizon = el("select", {
    id: "horizon",
    onchange: (ev: Event) => cb.onHorizon(Number((ev.target as HTMLSelectElement).value)),
  });
  for (const h of meta.horizons) {
    const opt = el("option", { value: h }, [`${h} min`]);
    if (h === state.horizon) opt.setAttribute("selected", "");
    horizon.append(opt);
  }
  container.append(el("label", {}, ["prediction ", horizon]));

  const mae = el("input", {
    id: "mae-filter",
    type: "range",
    min: meta.mae_range.min,
    max: meta.mae_range.max,
    step: (meta.mae_range.max - meta.mae_range.min) / 100 || 0.01,
    value: state.maeThreshold,
    title: `Q1 = ${meta.q1.toFixed(2)}, Q3 = ${meta.q3.toFixed(2)}`,
    oninput: (ev: Event) => cb.onMaeThreshold(Number((ev.target as HTMLInputElement).value)),
  });
  container.append(
    el("label", { title: `Q1 = ${meta.q1.toFixed(2)}, Q3 = ${meta.q3.toFixed(2)}` }, [
      "MAE ≤ ",
      el("span", { id: "mae-value" }, [state.maeThreshold.toFixed(2)]),
      mae,
    ]),
  );

  const attn = el("input", {
    id: "attn-filter",
    type: "range",
    min: 0,
    max: 1,
    step: 0.01,
    value: state.attnThreshold,
    oninput: (ev: Event) => cb.onAttnThreshold(Number((ev.target as HTMLInputElement).value)),
  });
  container.append(
    el("label", {}, ["attention ≥ ", el("span", { id: "attn-value" }, [state.attnThreshold.toFixed(2)]), attn]),
  );

  const head = el("select", {
    id: "head",
    onchange: (ev: Event) => {
      const v = (ev.target as HTMLSelectElement).value;
      cb.onHead(v === "" ? null : Number(v));
    },
  });
  const meanOpt = el("option", { value: "" }, ["head mean"]);
  if (state.head === null) meanOpt.setAttribute("selected", "");
  head.append(meanOpt);
  for (let h = 0; h < heads; h++) {
    const opt = el("option", { value: h }, [`head ${h + 1}`]);
    if (state.head === h) opt.setAttribute("selected", "");
    head.append(opt);
  }
  container.append(el("label", {}, [head]));
}
