// @vitest-environment happy-dom
/** DOM-level rendering checks with fixture data. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeEach, describe, expect, it } from "vitest";

import type { EnforceJob, HeadClustersBody, Road, StMatrix, Trend } from "../src/types.js";
import { defaultState } from "../src/state.js";
import { renderTable } from "../src/views/table.js";
import { renderHeadClusters } from "../src/views/headcluster.js";
import { renderEnforcement } from "../src/views/enforcement.js";
import { renderStMatrix } from "../src/views/stmatrix.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

const roads = fixture<Road[]>("roads.json");
const meta = fixture<Parameters<typeof defaultState>[0]>("snapshot.json");

function container(): HTMLElement {
  const node = document.createElement("div");
  document.body.append(node);
  return node;
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("table rendering", () => {
  it("renders one row per road and underlines the sort column", () => {
    const state = defaultState(meta);
    state.sortColumn = "mae";
    state.sortDir = "desc";
    const node = container();
    renderTable(node, roads, new Map<string, Trend>(), {}, {}, state, new Set(), {
      onSort: () => undefined,
      onSelect: () => undefined,
      onHover: () => undefined,
    });
    expect(node.querySelectorAll("tbody tr")).toHaveLength(roads.length);
    const sorted = node.querySelector("th.sorted");
    expect(sorted?.getAttribute("data-column")).toBe("mae");
    // rendered MAE values are the fetched ones, in descending order
    const cells = [...node.querySelectorAll("tbody tr td:nth-child(5)")].map((td) =>
      Number(td.textContent),
    );
    for (let i = 0; i + 1 < cells.length; i++) {
      expect(cells[i]).toBeGreaterThanOrEqual(cells[i + 1]);
    }
  });

  it("hides causality-filtered roads", () => {
    const state = defaultState(meta);
    const node = container();
    const hidden = new Set([roads[0].id, roads[1].id]);
    renderTable(node, roads, new Map(), {}, {}, state, hidden, {
      onSort: () => undefined,
      onSelect: () => undefined,
      onHover: () => undefined,
    });
    expect(node.querySelectorAll("tbody tr")).toHaveLength(roads.length - 2);
  });
});

describe("head-cluster rendering", () => {
  it("renders 8 matrices whose local rows sum to 1", () => {
    const body = fixture<HeadClustersBody>("headclusters_local.json");
    const node = container();
    renderHeadClusters(node, body, [], {
      onScale: () => undefined,
      onToggleCluster: () => undefined,
      onTestAlternatives: () => undefined,
      onHoverCell: () => undefined,
    });
    expect(node.querySelectorAll("svg.hc-matrix")).toHaveLength(2 * body.heads);
    for (const cohort of ["high", "low"]) {
      for (let head = 0; head < body.heads; head++) {
        for (let target = 0; target < body.k; target++) {
          const cells = node.querySelectorAll(
            `rect.hc-cell[data-cohort="${cohort}"][data-head="${head}"][data-target="${target}"]`,
          );
          const sum = [...cells].reduce((s, c) => s + Number(c.getAttribute("data-value")), 0);
          if (sum > 0) {
            expect(sum).toBeCloseTo(1.0, 6);
          }
        }
      }
    }
  });

  it("exposes a Test Alternatives button", () => {
    const body = fixture<HeadClustersBody>("headclusters_global.json");
    const node = container();
    let clicked = false;
    renderHeadClusters(node, body, [0], {
      onScale: () => undefined,
      onToggleCluster: () => undefined,
      onTestAlternatives: () => {
        clicked = true;
      },
      onHoverCell: () => undefined,
    });
    (node.querySelector("button.test-alternatives") as HTMLButtonElement).click();
    expect(clicked).toBe(true);
  });
});

describe("enforcement rendering", () => {
  it("renders before/after histograms with conserved counts", () => {
    const job = fixture<EnforceJob>("enforce_job.json");
    const node = container();
    renderEnforcement(node, "done", job.report!, () => undefined);
    expect(node.querySelector("polyline.hist-before")).not.toBeNull();
    expect(node.querySelector("polyline.hist-after")).not.toBeNull();
    const fine = node.querySelector(".fine")?.textContent ?? "";
    const match = fine.match(/(\d+) before \/ (\d+) after/);
    expect(match).not.toBeNull();
    expect(match![1]).toBe(match![2]);
  });
});

describe("st matrix rendering", () => {
  it("renders 12 lag rows per reference road", () => {
    const att = fixture<{ st: StMatrix }>("attention.json");
    const node = container();
    renderStMatrix(node, att.st, { onHoverRoad: () => undefined });
    const cells = node.querySelectorAll("rect.st-cell");
    expect(cells).toHaveLength(att.st.ids.length * 12);
    const lags = new Set([...cells].map((c) => c.getAttribute("data-lag")));
    expect(lags.size).toBe(12);
  });
});
