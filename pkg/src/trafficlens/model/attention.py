"""Attention weight extraction and spatio-temporal matrix composition.

The spatio-temporal weight a target road gives to (reference road r, past
step k) is the product of the temporal weight on key step k and the spatial
weight on r at step k. Spatial rows come from the last encoder layer;
temporal rows come from the last decoder layer's attention onto the 12
encoder steps, at the query step matching the selected horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np
import torch

from ..data.types import SpeedPanel
from ..errors import horizon_step
from .state import ModelState
from .training import _Featurizer, _decode_windows


@dataclass(frozen=True)
class AttentionBundle:
    """Recorded attention for one window forward pass.

    ``sa[h, t, i, j]`` is head h's spatial weight of target road i on
    reference road j at input step t; column N is the sentinel. ``ta[h, n,
    q, k]`` is head h's temporal weight of road n's output step q on input
    step k. Every row sums to 1.
    """

    roads: tuple[str, ...]
    sa: np.ndarray  # (H, 12, N, N+1)
    ta: np.ndarray  # (H, N, 12, 12)
    window_start: datetime
    start_step: int

    @property
    def heads(self) -> int:
        return self.sa.shape[0]


@dataclass(frozen=True)
class STMatrix:
    """Per-(reference road, past step) attention for one target and horizon.

    ``cells[r, k]`` uses input step index k (k=11 is 5 minutes ago, k=0 is
    60 minutes ago). ``sentinel[k]`` is the sentinel share at step k;
    self-reference is the target's own column plus all sentinel mass.
    """

    target: str
    horizon: int
    ids: tuple[str, ...]
    cells: np.ndarray  # (N, 12)
    sentinel: np.ndarray  # (12,)
    per_head_cells: np.ndarray  # (H, N, 12)
    per_head_sentinel: np.ndarray  # (H, 12)
    self_reference: float
    head: int | None = None  # None = head mean

    def display_order(self) -> list[str]:
        """Reference roads by total intensity descending, ties by id."""
        intensity = self.cells.sum(axis=1)
        return [
            self.ids[i]
            for i in sorted(range(len(self.ids)), key=lambda i: (-intensity[i], self.ids[i]))
        ]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "horizon": self.horizon,
            "ids": list(self.ids),
            "cells": self.cells.tolist(),
            "sentinel": self.sentinel.tolist(),
            "self_reference": self.self_reference,
            "head": self.head,
            "lags_minutes": [(12 - k) * 5 for k in range(12)],
            "display_order": self.display_order(),
        }


def extract_attention(
    state: ModelState,
    panel: SpeedPanel,
    start_step: int,
    enforcement: dict[str, str] | None = None,
    head_average: bool = False,
) -> AttentionBundle:
    """Run one window forward pass and record its attention weights."""
    if not state.trained:
        raise ValueError("model state is untrained")
    if start_step < 0 or start_step + 24 > panel.num_steps:
        raise ValueError(
            f"window starting at step {start_step} needs steps {start_step}..{start_step + 23}"
        )
    enf_idx = None
    if enforcement:
        idx = state.network.index
        enf_idx = {idx[t]: idx[r] for t, r in enforcement.items()}
    model = state.build_module()
    feat = _Featurizer(panel, state)
    starts = np.array([start_step])
    with torch.no_grad():
        _, sa_w, cross_w = _decode_windows(
            model, feat, state.adj_mask(), starts, enf_idx, head_average, record=True
        )
    return AttentionBundle(
        roads=state.network.roads,
        sa=sa_w[0].numpy(),  # (H, T, N, N+1)
        ta=cross_w[0].numpy(),  # (H, N, Q, K)
        window_start=panel.time_at(start_step),
        start_step=start_step,
    )


def compose_st(bundle: AttentionBundle, target: str, horizon: int, head: int | None = None) -> STMatrix:
    """Build the ST matrix for a target road from recorded SA and TA rows."""
    if target not in bundle.roads:
        raise ValueError(f"target {target} not in graph")
    tgt = bundle.roads.index(target)
    q = horizon_step(horizon)
    n = len(bundle.roads)
    heads = bundle.heads
    per_head = np.empty((heads, n, 12))
    per_head_sent = np.empty((heads, 12))
    for h in range(heads):
        ta_row = bundle.ta[h, tgt, q, :]  # (12,)
        sa_rows = bundle.sa[h, :, tgt, :]  # (12, N+1)
        per_head[h] = (ta_row[:, None] * sa_rows[:, :n]).T
        per_head_sent[h] = ta_row * sa_rows[:, n]
    if head is None:
        cells = per_head.mean(axis=0)
        sentinel = per_head_sent.mean(axis=0)
    else:
        if not 0 <= head < heads:
            raise ValueError(f"head must be in [0, {heads}), got {head}")
        cells = per_head[head]
        sentinel = per_head_sent[head]
    self_ref = float(cells[tgt].sum() + sentinel.sum())
    return STMatrix(
        target=target,
        horizon=horizon,
        ids=bundle.roads,
        cells=cells,
        sentinel=sentinel,
        per_head_cells=per_head,
        per_head_sentinel=per_head_sent,
        self_reference=self_ref,
        head=head,
    )


def extract_st_attention(
    state: ModelState,
    panel: SpeedPanel,
    start_step: int,
    target: str,
    horizon: int,
    head: int | None = None,
) -> STMatrix:
    """One-call extraction: forward pass, then ST composition for a target."""
    bundle = extract_attention(state, panel, start_step)
    return compose_st(bundle, target, horizon, head)
