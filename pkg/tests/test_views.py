"""Attention view products: arrows, head-cluster matrices, ST view."""

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from trafficlens.deps.clustering import ClusterAssignment
from trafficlens.errors import ErrorCohorts
from trafficlens.model.attention import AttentionBundle, STMatrix, compose_st
from trafficlens.views import attn_arrows, head_cluster_matrices, st_matrix_for_view

T0 = datetime(2024, 6, 3, tzinfo=timezone.utc)


def bundle_with(sa_fill, ta_key=5, roads=("a", "b", "c"), heads=2):
    n = len(roads)
    sa = np.zeros((heads, 12, n, n + 1))
    for i in range(n):
        sa[:, :, i, :] = sa_fill[i]
    ta = np.zeros((heads, n, 12, 12))
    ta[:, :, :, ta_key] = 1.0
    return AttentionBundle(roads=roads, sa=sa, ta=ta, window_start=T0, start_step=0)


class TestAttnArrows:
    def test_one_hot_single_arrow(self):
        # road a attends road b fully
        bundle = bundle_with({0: [0, 1, 0, 0], 1: [0, 0, 1, 0], 2: [0, 0, 0, 1]})
        st = compose_st(bundle, "a", 15)
        arrows = attn_arrows(st)
        assert arrows.arrows == (("b", 1.0),)
        assert arrows.dropped_mass == 0.0

    def test_threshold_drops_small_mass(self):
        bundle = bundle_with({0: [0, 0.95, 0.05, 0], 1: [0, 1, 0, 0], 2: [0, 0, 1, 0]})
        st = compose_st(bundle, "a", 15)
        arrows = attn_arrows(st, threshold=0.1)
        assert [r for r, _ in arrows.arrows] == ["b"]
        assert arrows.dropped_mass == pytest.approx(0.05)

    def test_mass_reconstruction(self, small_system):
        from trafficlens.model.attention import extract_attention

        bundle = extract_attention(small_system["state"], small_system["test"], 4)
        for road in small_system["test"].roads:
            st = compose_st(bundle, road, 15)
            arrows = attn_arrows(st, threshold=0.1)
            kept = sum(v for _, v in arrows.arrows)
            total = kept + arrows.dropped_mass + arrows.self_reference
            assert total == pytest.approx(1.0, abs=1e-5)


class TestHeadClusterMatrices:
    def test_single_cluster_local_scale(self, small_system):
        panel = small_system["test"]
        one_cluster = ClusterAssignment(k=1, label={r: 0 for r in panel.roads})
        cohorts = ErrorCohorts(
            low=frozenset(panel.roads[:2]), high=frozenset(panel.roads[-2:]),
            q1=1.0, q3=2.0, horizon=15,
        )
        hc = head_cluster_matrices(small_system["state"], panel, one_cluster, cohorts,
                                   scale="local", max_windows=4)
        assert hc.high.shape == (2, 1, 1)
        assert np.allclose(hc.high, 1.0) and np.allclose(hc.low, 1.0)

    def test_global_scale_max_is_one(self, small_system):
        panel = small_system["test"]
        clusters = ClusterAssignment(
            k=2, label={r: (0 if i < 3 else 1) for i, r in enumerate(panel.roads)}
        )
        cohorts = ErrorCohorts(
            low=frozenset(panel.roads[:2]), high=frozenset(panel.roads[-2:]),
            q1=1.0, q3=2.0, horizon=15,
        )
        hc = head_cluster_matrices(small_system["state"], panel, clusters, cohorts,
                                   scale="global", max_windows=4)
        assert max(hc.high.max(), hc.low.max()) == pytest.approx(1.0)
        assert np.all(hc.high >= 0) and np.all(hc.high <= 1)

    def test_local_rows_sum_to_one(self, small_system):
        panel = small_system["test"]
        clusters = ClusterAssignment(
            k=2, label={r: (0 if i < 3 else 1) for i, r in enumerate(panel.roads)}
        )
        cohorts = ErrorCohorts(
            low=frozenset(panel.roads[:2]), high=frozenset(panel.roads[3:5]),
            q1=1.0, q3=2.0, horizon=15,
        )
        hc = head_cluster_matrices(small_system["state"], panel, clusters, cohorts,
                                   scale="local", max_windows=4)
        for m in (hc.high, hc.low):
            sums = m.sum(axis=2)
            nz = sums > 0
            assert np.allclose(sums[nz], 1.0, atol=1e-6)

    def test_empty_intersection_flagged(self, small_system):
        panel = small_system["test"]
        clusters = ClusterAssignment(
            k=2, label={r: (0 if i < 3 else 1) for i, r in enumerate(panel.roads)}
        )
        cohorts = ErrorCohorts(
            low=frozenset(panel.roads[:2]),  # cluster 0 only
            high=frozenset(panel.roads[-2:]),  # cluster 1 only
            q1=1.0, q3=2.0, horizon=15,
        )
        hc = head_cluster_matrices(small_system["state"], panel, clusters, cohorts,
                                   scale="local", max_windows=2)
        assert 1 in hc.empty_rows["low"]
        assert 0 in hc.empty_rows["high"]
        assert np.all(hc.low[:, 1, :] == 0)

    def test_low_error_heavier_diagonal_than_high(self, distracted_system):
        # Accurate roads lean on their own cluster (self-reference and the
        # same-cluster parent); mis-wired high-error roads attend decoys in
        # another cluster, so their diagonal mass is lighter.
        sys = distracted_system
        planted = ClusterAssignment(
            k=3, label={r: sys["info"]["cluster_of"][r] for r in sys["panel"].roads}
        )
        hc = head_cluster_matrices(sys["state"], sys["test"], planted, sys["cohorts"],
                                   scale="local", max_windows=24)
        def mean_diag(m, rows):
            vals = [m[:, c, c].mean() for c in rows]
            return float(np.mean(vals))
        low_rows = sorted({planted.label[r] for r in sys["cohorts"].low})
        high_rows = sorted({planted.label[r] for r in sys["cohorts"].high})
        assert mean_diag(hc.low, low_rows) > mean_diag(hc.high, high_rows)

    def test_split_half_agreement(self, small_system):
        panel = small_system["test"]
        clusters = ClusterAssignment(
            k=2, label={r: (0 if i < 3 else 1) for i, r in enumerate(panel.roads)}
        )
        cohorts = ErrorCohorts(
            low=frozenset(panel.roads[:3]), high=frozenset(panel.roads[3:]),
            q1=1.0, q3=2.0, horizon=15,
        )
        a = head_cluster_matrices(small_system["state"], panel, clusters, cohorts,
                                  scale="global", max_windows=24, seed=1)
        b = head_cluster_matrices(small_system["state"], panel, clusters, cohorts,
                                  scale="global", max_windows=24, seed=2)
        assert np.abs(a.high - b.high).max() < 0.35  # same structure, sampled windows

    def test_unclustered_road_rejected(self, small_system):
        panel = small_system["test"]
        clusters = ClusterAssignment(k=1, label={panel.roads[0]: 0})
        cohorts = ErrorCohorts(low=frozenset(), high=frozenset(), q1=0, q3=0, horizon=15)
        with pytest.raises(ValueError, match="not clustered"):
            head_cluster_matrices(small_system["state"], panel, clusters, cohorts)


class TestStMatrixForView:
    def test_twelve_step_depth(self, small_system):
        panel = small_system["test"]
        t = panel.time_at(20)
        st = st_matrix_for_view(small_system["state"], panel, panel.roads[0], t, 15)
        assert st.cells.shape == (panel.num_roads, 12)
        assert st.to_dict()["lags_minutes"] == [60, 55, 50, 45, 40, 35, 30, 25, 20, 15, 10, 5]

    def test_cursor_shift_shifts_window(self, small_system):
        panel = small_system["test"]
        state = small_system["state"]
        road = panel.roads[1]  # has an in-neighbor, so cells carry mass
        st1 = st_matrix_for_view(state, panel, road, panel.time_at(20), 15)
        st2 = st_matrix_for_view(state, panel, road,
                                 panel.time_at(20) + timedelta(minutes=5), 15)
        full1 = np.concatenate([st1.cells.ravel(), st1.sentinel])
        full2 = np.concatenate([st2.cells.ravel(), st2.sentinel])
        assert not np.array_equal(full1, full2)

    def test_history_required(self, small_system):
        panel = small_system["test"]
        with pytest.raises(ValueError, match="history"):
            st_matrix_for_view(small_system["state"], panel, panel.roads[0],
                               panel.time_at(3), 15)

    def test_display_order_tie_break(self):
        st = STMatrix(
            target="a", horizon=15, ids=("c", "a", "b"),
            cells=np.full((3, 12), 1.0 / 36),
            sentinel=np.zeros(12),
            per_head_cells=np.full((1, 3, 12), 1.0 / 36),
            per_head_sentinel=np.zeros((1, 12)),
            self_reference=1.0 / 3,
        )
        assert st.display_order() == ["a", "b", "c"]
