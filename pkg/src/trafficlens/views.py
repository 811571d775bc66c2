"""View-ready attention products: map arrows, the ST pixel matrix, and the
eight head-cluster matrices with global/local normalization."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .data.types import SpeedPanel
from .deps.clustering import ClusterAssignment
from .errors import ErrorCohorts, horizon_step
from .model.attention import STMatrix, compose_st, extract_attention
from .model.state import ModelState
from .model.training import build_windows


@dataclass(frozen=True)
class AttnArrowSet:
    """Arrows from a target road to the reference roads it attends.

    Intensity marginalizes the ST matrix over the 12 past steps; arrows
    below the threshold are dropped but their mass is kept for
    reconstruction checks. Self mass (own column plus sentinel) is the
    donut-chart scalar, not an arrow.
    """

    target: str
    arrows: tuple[tuple[str, float], ...]
    self_reference: float
    threshold: float
    dropped_mass: float

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "arrows": [{"reference": r, "intensity": v} for r, v in self.arrows],
            "self_reference": self.self_reference,
            "threshold": self.threshold,
            "dropped_mass": self.dropped_mass,
        }


def attn_arrows(st: STMatrix, threshold: float = 0.1) -> AttnArrowSet:
    """Marginalize an ST matrix into per-reference arrow intensities."""
    intensity = st.cells.sum(axis=1)
    tgt = st.ids.index(st.target)
    kept, dropped = [], 0.0
    for i, road in enumerate(st.ids):
        if i == tgt:
            continue
        if intensity[i] >= threshold:
            kept.append((road, float(intensity[i])))
        else:
            dropped += float(intensity[i])
    kept.sort(key=lambda rv: (-rv[1], rv[0]))
    return AttnArrowSet(
        target=st.target,
        arrows=tuple(kept),
        self_reference=st.self_reference,
        threshold=threshold,
        dropped_mass=dropped,
    )


@dataclass(frozen=True)
class HeadClusterMatrices:
    """Per-head k x k cluster-to-cluster attention mass, split by error cohort.

    ``high`` and ``low`` are (heads, k, k): rows are target clusters,
    columns reference clusters. Global scale divides every cell by the one
    largest cell across all matrices; local scale divides each row by its
    sum (all-zero rows stay zero and are flagged empty).
    """

    k: int
    heads: int
    scale: str
    high: np.ndarray
    low: np.ndarray
    empty_rows: dict[str, list[int]]
    windows_used: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "heads": self.heads,
            "scale": self.scale,
            "high": self.high.tolist(),
            "low": self.low.tolist(),
            "empty_rows": {g: sorted(v) for g, v in self.empty_rows.items()},
            "windows_used": self.windows_used,
        }


def _cluster_mass_for_window(
    state: ModelState,
    panel: SpeedPanel,
    start: int,
    labels: np.ndarray,
    k: int,
    horizon: int,
) -> tuple[np.ndarray, np.ndarray]:
    """(heads, N, k) ST mass per road into each reference cluster; sentinel
    mass folds into the road's own cluster. Also returns per-road totals."""
    bundle = extract_attention(state, panel, start)
    n = len(bundle.roads)
    q = horizon_step(horizon)
    ta_q = bundle.ta[:, :, q, :]  # (H, N, K)
    sa = bundle.sa  # (H, K, N, N+1)
    mass_road = np.einsum("hik,hkir->hir", ta_q, sa[..., :n])  # (H, N, N)
    sentinel = np.einsum("hik,hki->hi", ta_q, sa[..., n])  # (H, N)
    clusters = np.zeros((bundle.heads, n, k))
    for c in range(k):
        clusters[:, :, c] = mass_road[:, :, labels == c].sum(axis=2)
    clusters[:, np.arange(n), labels] += sentinel
    return clusters, sentinel


def head_cluster_matrices(
    state: ModelState,
    panel: SpeedPanel,
    clusters: ClusterAssignment,
    cohorts: ErrorCohorts,
    scale: str = "global",
    horizon: int = 15,
    max_windows: int = 256,
    seed: int = 0,
) -> HeadClusterMatrices:
    """Aggregate ST attention between clusters for high/low-error roads.

    Samples up to ``max_windows`` test windows uniformly (seeded) and
    averages each cohort-and-cluster cell over roads and windows.
    """
    if scale not in ("global", "local"):
        raise ValueError(f"scale must be 'global' or 'local', got {scale!r}")
    for road in panel.roads:
        if road not in clusters.label:
            raise ValueError(f"road {road} is not clustered")
    k = max(clusters.label.values()) + 1
    labels = np.array([clusters.label[r] for r in panel.roads])
    heads = state.config.heads

    starts = build_windows(panel, state.config)
    if len(starts) == 0:
        raise ValueError("panel has no complete windows")
    if len(starts) > max_windows:
        rng = np.random.default_rng(seed)
        starts = np.sort(rng.choice(starts, size=max_windows, replace=False))

    sums = {g: np.zeros((heads, k, k)) for g in ("high", "low")}
    counts = {g: np.zeros(k, dtype=int) for g in ("high", "low")}
    members = {
        "high": [i for i, r in enumerate(panel.roads) if r in cohorts.high],
        "low": [i for i, r in enumerate(panel.roads) if r in cohorts.low],
    }
    for start in starts:
        mass, _ = _cluster_mass_for_window(state, panel, int(start), labels, k, horizon)
        for g in ("high", "low"):
            for i in members[g]:
                sums[g][:, labels[i], :] += mass[:, i, :]
    for g in ("high", "low"):
        for i in members[g]:
            counts[g][labels[i]] += len(starts)

    out = {}
    empty: dict[str, list[int]] = {"high": [], "low": []}
    for g in ("high", "low"):
        m = np.zeros((heads, k, k))
        for c in range(k):
            if counts[g][c] > 0:
                m[:, c, :] = sums[g][:, c, :] / counts[g][c]
            else:
                empty[g].append(c)
        out[g] = m

    if scale == "global":
        peak = max(out["high"].max(), out["low"].max())
        if peak > 0:
            out = {g: m / peak for g, m in out.items()}
    else:
        for g in ("high", "low"):
            row_sums = out[g].sum(axis=2, keepdims=True)
            nz = row_sums > 0
            out[g] = np.divide(out[g], row_sums, out=np.zeros_like(out[g]), where=nz)
    return HeadClusterMatrices(
        k=k,
        heads=heads,
        scale=scale,
        high=out["high"],
        low=out["low"],
        empty_rows=empty,
        windows_used=len(starts),
    )


def st_matrix_for_view(
    state: ModelState,
    panel: SpeedPanel,
    road: str,
    timestamp: datetime,
    horizon: int,
    head: int | None = None,
) -> STMatrix:
    """ST matrix at a cursor time; the window is the preceding 12 steps."""
    cursor = panel.step_at(timestamp)
    start = cursor - 12
    if start < 0:
        raise ValueError(f"timestamp {timestamp.isoformat()} lacks a 12-step history")
    if cursor + 12 > panel.num_steps:
        raise ValueError(f"timestamp {timestamp.isoformat()} lacks a 12-step horizon")
    bundle = extract_attention(state, panel, start)
    return compose_st(bundle, road, horizon, head)
