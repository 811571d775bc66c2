"""Attention enforcement: replace high-error roads' attention with rows
derived from low-error reference roads, re-run inference, and report the
error-distribution shift. Inference-time only; model weights never change.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data.types import SpeedPanel
from .deps.dtw import DistanceMatrix
from .deps.granger import UntestableError, granger_test
from .deps.clustering import ClusterAssignment
from .errors import ErrorCohorts, ErrorTable, compute_errors, horizon_step
from .model.attention import AttentionBundle
from .model.state import ModelState
from .model.training import build_windows, predict


@dataclass(frozen=True)
class PlanEntry:
    target: str
    reference: str
    score: float
    dtw_component: float
    granger_component: float

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "reference": self.reference,
            "score": self.score,
            "dtw_component": self.dtw_component,
            "granger_component": self.granger_component,
        }


@dataclass(frozen=True)
class EnforcementPlan:
    selected_clusters: tuple[int, ...]
    k: int
    alpha: float
    entries: tuple[PlanEntry, ...]
    head_average: bool = False

    def mapping(self) -> dict[str, str]:
        return {e.target: e.reference for e in self.entries}

    def to_dict(self) -> dict:
        return {
            "selected_clusters": list(self.selected_clusters),
            "k": self.k,
            "alpha": self.alpha,
            "head_average": self.head_average,
            "entries": [e.to_dict() for e in self.entries],
        }


def select_targets(
    table: ErrorTable,
    cohorts: ErrorCohorts,
    clusters: ClusterAssignment,
    selected: list[int],
    k: int,
    horizon: int = 15,
) -> list[str]:
    """Top-k highest-MAE high-cohort roads per selected cluster.

    Ties break by road id ascending; clusters with no high-error roads
    contribute nothing (a fully empty result warns).
    """
    if not selected:
        raise ValueError("selected clusters must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    targets: list[str] = []
    for c in selected:
        members = [
            r for r in cohorts.high if clusters.label.get(r) == c and r in table.roads
        ]
        members.sort(key=lambda r: (-table.road_mae(r, horizon), r))
        targets.extend(members[:k])
    if not targets:
        warnings.warn("no high-error roads in any selected cluster; empty plan")
    return targets


def find_reference(
    target: str,
    candidates: list[str],
    d: DistanceMatrix,
    series: dict[str, np.ndarray],
    alpha: float = 0.5,
    max_lag: int = 12,
) -> PlanEntry:
    """Best reference by DTW trend similarity and Granger F at equal weight.

    score = alpha * (1 - d/max_d) + (1-alpha) * F/max_F, with the Granger
    term zeroed for p >= 0.05 or untestable pairs. Ties break by smaller
    DTW distance, then road id.
    """
    if not candidates:
        raise ValueError("candidate pool is empty")
    dists = {c: d.at(target, c) for c in candidates}
    max_d = max(dists.values())
    f_vals: dict[str, float] = {}
    for c in candidates:
        try:
            r = granger_test(series[c], series[target], max_lag=max_lag, cause=c, effect=target)
            f_vals[c] = r.f_value if r.displayable else 0.0
        except UntestableError:
            f_vals[c] = 0.0
    max_f = max(f_vals.values())

    def sim_dtw(c: str) -> float:
        return 1.0 if max_d <= 0 else 1.0 - dists[c] / max_d

    def sim_g(c: str) -> float:
        return 0.0 if max_f <= 0 else f_vals[c] / max_f

    scored = [(c, alpha * sim_dtw(c) + (1.0 - alpha) * sim_g(c)) for c in candidates]
    scored.sort(key=lambda cs: (-cs[1], dists[cs[0]], cs[0]))
    if len({round(s, 12) for _, s in scored}) == 1 and max_f <= 0:
        warnings.warn(f"no candidate distinguishes itself for {target}; taking first by id")
    best, score = scored[0]
    return PlanEntry(
        target=target,
        reference=best,
        score=score,
        dtw_component=sim_dtw(best),
        granger_component=sim_g(best),
    )


def build_plan(
    table: ErrorTable,
    cohorts: ErrorCohorts,
    clusters: ClusterAssignment,
    d: DistanceMatrix,
    panel: SpeedPanel,
    selected: list[int],
    k: int = 3,
    alpha: float = 0.5,
    head_average: bool = False,
    horizon: int = 15,
) -> EnforcementPlan:
    """Select targets and score references; same-cluster low-error candidates
    first, widening to the whole low cohort when that pool is empty."""
    targets = select_targets(table, cohorts, clusters, selected, k, horizon)
    series = {r: panel.series(r) for r in panel.roads}
    entries = []
    for t in targets:
        pool = [r for r in cohorts.low if clusters.label.get(r) == clusters.label.get(t)]
        if not pool:
            pool = sorted(cohorts.low)
        if not pool:
            warnings.warn(f"no low-error candidates for {t}; skipping")
            continue
        entries.append(find_reference(t, sorted(pool), d, series, alpha=alpha))
    return EnforcementPlan(
        selected_clusters=tuple(selected),
        k=k,
        alpha=alpha,
        entries=tuple(entries),
        head_average=head_average,
    )


@dataclass(frozen=True)
class EnforcedRows:
    """Replacement attention rows for one target road, per head."""

    target: str
    reference: str
    sa_rows: np.ndarray  # (H, 12, N+1)
    ta_rows: np.ndarray  # (H, 12, 12)
    self_reference: float


def build_enforced_attention(
    target: str, reference: str, bundle: AttentionBundle, head_average: bool = False
) -> EnforcedRows:
    """Construct the target's replacement rows from the reference's rows.

    Per step, the reference's self share (own column plus sentinel) moves to
    the target's sentinel slot and the residual goes to the reference road;
    temporal rows are copied from the reference. Rows renormalize to 1.
    """
    if target == reference:
        raise ValueError("target and reference must differ")
    n = len(bundle.roads)
    tgt, ref = bundle.roads.index(target), bundle.roads.index(reference)
    sa_ref = bundle.sa[:, :, ref, :]  # (H, 12, N+1)
    sigma = sa_ref[:, :, ref] + sa_ref[:, :, n]  # (H, 12)
    if head_average:
        sigma = np.broadcast_to(sigma.mean(axis=0, keepdims=True), sigma.shape)
    if sigma.sum() < 1e-12:
        warnings.warn("reference self-profile is all zero; using uniform 0.5 self share")
        sigma = np.full_like(sigma, 0.5)
    sa_rows = np.zeros_like(sa_ref)
    sa_rows[:, :, n] = sigma
    sa_rows[:, :, ref] = 1.0 - sigma
    sa_rows = sa_rows / sa_rows.sum(axis=-1, keepdims=True)

    ta_rows = bundle.ta[:, ref, :, :].copy()  # (H, 12, 12)
    if head_average:
        ta_rows = np.broadcast_to(ta_rows.mean(axis=0, keepdims=True), ta_rows.shape).copy()
    ta_rows = ta_rows / ta_rows.sum(axis=-1, keepdims=True)

    q = horizon_step(15)
    self_ref = float((ta_rows[:, q, :] * sigma).sum(axis=-1).mean())
    return EnforcedRows(
        target=target, reference=reference, sa_rows=sa_rows, ta_rows=ta_rows, self_reference=self_ref
    )


@dataclass(frozen=True)
class EnforcementReport:
    plan: EnforcementPlan
    horizons: tuple[int, ...]
    targets: tuple[str, ...]
    mae_before: np.ndarray  # (targets, horizons)
    mae_after: np.ndarray
    histogram: dict
    mean_delta: float
    fraction_improved: float
    locality_ok: bool
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "horizons": list(self.horizons),
            "targets": list(self.targets),
            "mae_before": self.mae_before.tolist(),
            "mae_after": self.mae_after.tolist(),
            "histogram": self.histogram,
            "mean_delta": self.mean_delta,
            "fraction_improved": self.fraction_improved,
            "locality_ok": self.locality_ok,
        }

    def to_csv(self) -> str:
        lines = ["road_id,horizon,mae_before,mae_after"]
        for i, road in enumerate(self.targets):
            for j, h in enumerate(self.horizons):
                lines.append(f"{road},{h},{self.mae_before[i, j]!r},{self.mae_after[i, j]!r}")
        return "\n".join(lines) + "\n"


def report_histogram(
    before: np.ndarray, after: np.ndarray, bins: int = 20
) -> dict:
    """Paired absolute-error histograms on shared bin edges.

    The summary statistic is the mean error delta; negative means the
    distribution moved left (an improvement).
    """
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    if before.shape != after.shape:
        raise ValueError("before/after populations must match")
    hi = float(max(before.max(initial=0.0), after.max(initial=0.0), 1e-9))
    edges = np.linspace(0.0, hi, bins + 1)
    b_counts, _ = np.histogram(before, bins=edges)
    a_counts, _ = np.histogram(after, bins=edges)
    return {
        "edges": edges.tolist(),
        "before": b_counts.tolist(),
        "after": a_counts.tolist(),
        "mean_shift": float(after.mean() - before.mean()) if len(before) else 0.0,
    }


def run_alternative_inference(
    state: ModelState,
    plan: EnforcementPlan,
    test_panel: SpeedPanel,
    starts: np.ndarray | None = None,
    horizons: tuple[int, ...] = (15, 30, 45, 60),
    batch_size: int = 64,
) -> EnforcementReport:
    """Re-run inference with the plan's attention replacements and compare.

    Non-target roads' predictions are bitwise unchanged (checked and
    reported); no parameters are modified.
    """
    if starts is None:
        starts = build_windows(test_panel, state.config)
    before = predict(state, test_panel, starts, batch_size=batch_size)
    mapping = plan.mapping()
    if not mapping:
        after = before
    else:
        for t, r in mapping.items():
            if t == r or r in mapping:
                raise ValueError(f"reference {r} is itself an enforcement target")
        after = predict(
            state, test_panel, starts,
            enforcement=mapping, head_average=plan.head_average, batch_size=batch_size,
        )

    targets = tuple(sorted(mapping))
    tgt_idx = [test_panel.roads.index(t) for t in targets]
    others = [j for j in range(test_panel.num_roads) if j not in set(tgt_idx)]
    locality_ok = bool(
        np.array_equal(before.values[:, :, others], after.values[:, :, others])
    )

    table_before = compute_errors(before, test_panel, horizons=horizons)
    table_after = compute_errors(after, test_panel, horizons=horizons)
    mae_b = np.array([[table_before.road_mae(t, h) for h in horizons] for t in targets])
    mae_a = np.array([[table_after.road_mae(t, h) for h in horizons] for t in targets])
    if len(targets) == 0:
        mae_b = mae_b.reshape(0, len(horizons))
        mae_a = mae_a.reshape(0, len(horizons))

    q = horizon_step(15)
    steps = before.output_start + q
    ok = (steps >= 0) & (steps < test_panel.num_steps)
    if targets:
        actual = test_panel.values[steps[ok]][:, tgt_idx]
        err_b = np.abs(before.values[ok, q, :][:, tgt_idx] - actual).ravel()
        err_a = np.abs(after.values[ok, q, :][:, tgt_idx] - actual).ravel()
    else:
        err_b = err_a = np.empty(0)
    hist = report_histogram(err_b, err_a)

    deltas = mae_a.mean(axis=1) - mae_b.mean(axis=1) if len(targets) else np.empty(0)
    return EnforcementReport(
        plan=plan,
        horizons=horizons,
        targets=targets,
        mae_before=mae_b,
        mae_after=mae_a,
        histogram=hist,
        mean_delta=float(deltas.mean()) if len(deltas) else 0.0,
        fraction_improved=float((deltas < 0).mean()) if len(deltas) else 0.0,
        locality_ok=locality_ok,
    )
