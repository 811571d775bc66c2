"""Attention enforcement: target selection, reference scoring, row building,
alternative inference locality and direction."""

from datetime import datetime, timezone

import numpy as np
import pytest

from trafficlens.deps.clustering import ClusterAssignment
from trafficlens.deps.dtw import DistanceMatrix
from trafficlens.enforce import (
    EnforcementPlan,
    PlanEntry,
    build_enforced_attention,
    build_plan,
    find_reference,
    report_histogram,
    run_alternative_inference,
    select_targets,
)
from trafficlens.errors import ErrorCohorts, ErrorTable
from trafficlens.model.attention import AttentionBundle

T0 = datetime(2024, 6, 3, tzinfo=timezone.utc)


def table_of(maes: dict[str, float]) -> ErrorTable:
    roads = tuple(maes)
    m = np.tile(np.array([maes[r] for r in roads])[:, None], (1, 4))
    return ErrorTable(roads=roads, horizons=(15, 30, 45, 60), mae=m, rmse=m, mape=m)


class TestSelectTargets:
    def setup_method(self):
        self.table = table_of({"a": 2.0, "b": 9.0, "c": 5.0, "d": 1.0, "e": 8.0})
        self.cohorts = ErrorCohorts(low=frozenset({"d"}), high=frozenset({"a", "b", "c", "e"}),
                                    q1=1.5, q3=1.9, horizon=15)
        self.clusters = ClusterAssignment(k=2, label={"a": 0, "b": 0, "c": 0, "d": 1, "e": 1})

    def test_top_k_by_mae(self):
        assert select_targets(self.table, self.cohorts, self.clusters, [0], k=1) == ["b"]

    def test_k_exceeds_membership(self):
        got = select_targets(self.table, self.cohorts, self.clusters, [0], k=10)
        assert got == ["b", "c", "a"]

    def test_tie_breaks_by_road_id(self):
        table = table_of({"a": 5.0, "b": 5.0, "c": 1.0, "d": 0.5})
        cohorts = ErrorCohorts(low=frozenset({"d"}), high=frozenset({"a", "b"}),
                               q1=0.9, q3=4.0, horizon=15)
        clusters = ClusterAssignment(k=1, label={r: 0 for r in "abcd"})
        assert select_targets(table, cohorts, clusters, [0], k=1) == ["a"]

    def test_empty_plan_warns(self):
        cohorts = ErrorCohorts(low=frozenset({"d"}), high=frozenset({"a", "b", "c"}),
                               q1=1.5, q3=6.0, horizon=15)
        with pytest.warns(UserWarning, match="empty plan"):
            got = select_targets(self.table, cohorts, self.clusters, [1], k=1)
        assert got == []

    def test_requires_selection(self):
        with pytest.raises(ValueError):
            select_targets(self.table, self.cohorts, self.clusters, [], k=1)


class TestFindReference:
    def make_distance(self, dists: dict[str, float], target="t"):
        ids = (target, *dists.keys())
        n = len(ids)
        d = np.zeros((n, n))
        for j, c in enumerate(dists, start=1):
            d[0, j] = d[j, 0] = dists[c]
        for a in range(1, n):
            for b in range(a + 1, n):
                d[a, b] = d[b, a] = 1.0
        return DistanceMatrix(ids=ids, d=d)

    def make_series(self, rng, target_follows: str | None, candidates, n=600, lag=2):
        series = {c: rng.standard_normal(n) for c in candidates}
        if target_follows is None:
            series["t"] = rng.standard_normal(n)
        else:
            src = series[target_follows]
            t = np.zeros(n)
            t[lag:] = 0.9 * src[:-lag]
            series["t"] = t + 0.3 * rng.standard_normal(n)
        return series

    def test_dominating_candidate_wins(self):
        rng = np.random.default_rng(0)
        d = self.make_distance({"good": 0.1, "bad": 5.0})
        series = self.make_series(rng, "good", ["good", "bad"])
        entry = find_reference("t", ["good", "bad"], d, series)
        assert entry.reference == "good"
        assert entry.granger_component == 1.0

    def test_no_significant_reduces_to_dtw(self):
        rng = np.random.default_rng(1)
        d = self.make_distance({"near": 0.2, "far": 3.0})
        series = self.make_series(rng, None, ["near", "far"])
        entry = find_reference("t", ["near", "far"], d, series)
        assert entry.reference == "near"
        assert entry.granger_component == 0.0

    def test_alpha_one_is_pure_dtw(self):
        rng = np.random.default_rng(2)
        d = self.make_distance({"near": 0.5, "causal": 4.0})
        series = self.make_series(rng, "causal", ["near", "causal"])
        entry = find_reference("t", ["near", "causal"], d, series, alpha=1.0)
        assert entry.reference == "near"

    def test_alpha_zero_is_pure_granger(self):
        rng = np.random.default_rng(3)
        d = self.make_distance({"near": 0.5, "causal": 4.0})
        series = self.make_series(rng, "causal", ["near", "causal"])
        entry = find_reference("t", ["near", "causal"], d, series, alpha=0.0)
        assert entry.reference == "causal"

    def test_causal_parent_beats_trend_twin(self, distracted_system):
        sys = distracted_system
        entry = find_reference(
            "013", ["011", "006"], sys["distance"],
            {r: sys["test"].series(r) for r in sys["panel"].roads},
        )
        assert entry.reference == "011"

    def test_empty_candidates(self):
        with pytest.raises(ValueError):
            find_reference("t", [], self.make_distance({"a": 1.0}), {})


def uniform_bundle(roads=("a", "b", "c"), heads=2, self_share=0.6):
    """Reference road b: self_share on sentinel, rest spread on its neighbors."""
    n = len(roads)
    sa = np.zeros((heads, 12, n, n + 1))
    sa[:, :, :, n] = self_share
    sa[:, :, :, 0] = 1.0 - self_share
    ta = np.full((heads, n, 12, 12), 1.0 / 12.0)
    return AttentionBundle(roads=roads, sa=sa, ta=ta, window_start=T0, start_step=0)


class TestBuildEnforcedAttention:
    def test_fully_self_referential_reference(self):
        bundle = uniform_bundle(self_share=1.0)
        rows = build_enforced_attention("a", "b", bundle)
        assert np.allclose(rows.sa_rows[:, :, -1], 1.0)
        assert rows.self_reference == pytest.approx(1.0)
        assert np.allclose(rows.ta_rows, 1.0 / 12.0)

    def test_rows_are_distributions(self):
        bundle = uniform_bundle(self_share=0.37)
        rows = build_enforced_attention("a", "b", bundle)
        assert np.allclose(rows.sa_rows.sum(-1), 1.0, atol=1e-6)
        assert np.allclose(rows.ta_rows.sum(-1), 1.0, atol=1e-6)
        assert np.all(rows.sa_rows >= 0) and np.all(rows.ta_rows >= 0)

    def test_self_reference_matches_reference(self, small_system):
        from trafficlens.model.attention import compose_st, extract_attention

        bundle = extract_attention(small_system["state"], small_system["test"], 2)
        ref = bundle.roads[1]
        rows = build_enforced_attention(bundle.roads[0], ref, bundle)
        ref_st = compose_st(bundle, ref, 15)
        assert rows.self_reference == pytest.approx(ref_st.self_reference, abs=1e-6)

    def test_residual_goes_to_reference_road(self):
        bundle = uniform_bundle(self_share=0.25)
        rows = build_enforced_attention("a", "b", bundle)
        ref_col = bundle.roads.index("b")
        assert np.allclose(rows.sa_rows[:, :, ref_col], 0.75)
        others = [i for i in range(len(bundle.roads)) if i != ref_col]
        assert np.all(rows.sa_rows[:, :, others] == 0.0)

    def test_target_equals_reference_rejected(self):
        with pytest.raises(ValueError):
            build_enforced_attention("a", "a", uniform_bundle())


class TestReportHistogram:
    def test_identical_zero_shift(self):
        errs = np.random.default_rng(4).uniform(0, 10, 100)
        h = report_histogram(errs, errs.copy())
        assert h["mean_shift"] == 0.0
        assert h["before"] == h["after"]

    def test_uniform_reduction(self):
        before = np.random.default_rng(5).uniform(2, 10, 200)
        h = report_histogram(before, before - 1.0)
        assert h["mean_shift"] == pytest.approx(-1.0)

    def test_count_conservation(self):
        rng = np.random.default_rng(6)
        before, after = rng.uniform(0, 5, 300), rng.uniform(0, 7, 300)
        h = report_histogram(before, after)
        assert sum(h["before"]) == sum(h["after"]) == 300


class TestAlternativeInference:
    def test_empty_plan_zero_deltas(self, small_system):
        plan = EnforcementPlan(selected_clusters=(0,), k=1, alpha=0.5, entries=())
        report = run_alternative_inference(small_system["state"], plan, small_system["test"])
        assert report.mean_delta == 0.0 and report.targets == ()
        assert report.locality_ok

    def test_locality_bitwise(self, distracted_system):
        sys = distracted_system
        plan = EnforcementPlan(
            selected_clusters=(2,), k=1, alpha=0.5,
            entries=(PlanEntry("013", "011", 1.0, 1.0, 1.0),),
        )
        report = run_alternative_inference(sys["state"], plan, sys["test"])
        assert report.locality_ok

    def test_distracted_fixture_improves(self, distracted_system):
        sys = distracted_system
        planted = ClusterAssignment(
            k=3, label={r: sys["info"]["cluster_of"][r] for r in sys["panel"].roads}
        )
        plan = build_plan(
            sys["table"], sys["cohorts"], planted, sys["distance"], sys["test"],
            selected=[2], k=3,
        )
        assert all(e.reference == "011" for e in plan.entries)
        report = run_alternative_inference(sys["state"], plan, sys["test"])
        assert report.locality_ok
        assert report.mean_delta < 0.0
        assert report.fraction_improved >= 0.6

    def test_reference_cannot_be_target(self, small_system):
        plan = EnforcementPlan(
            selected_clusters=(0,), k=1, alpha=0.5,
            entries=(
                PlanEntry("000", "001", 1.0, 1.0, 1.0),
                PlanEntry("001", "002", 1.0, 1.0, 1.0),
            ),
        )
        with pytest.raises(ValueError, match="itself"):
            run_alternative_inference(small_system["state"], plan, small_system["test"])

    def test_csv_export(self, small_system):
        plan = EnforcementPlan(selected_clusters=(0,), k=1, alpha=0.5, entries=())
        report = run_alternative_inference(small_system["state"], plan, small_system["test"])
        assert report.to_csv().startswith("road_id,horizon,mae_before,mae_after")
