"""Error metrics, quartile cohorts, histograms, and line-view readouts."""

from datetime import datetime, timezone

import numpy as np
import pytest

from trafficlens.data.types import SpeedPanel
from trafficlens.errors import (
    ErrorTable,
    PredictionSet,
    compute_errors,
    format_ae_std,
    horizon_step,
    quartile_cohorts,
    speed_histogram,
    windowed_ae,
)

T0 = datetime(2024, 6, 3, tzinfo=timezone.utc)


def panel_of(values):
    values = np.asarray(values, dtype=float)
    return SpeedPanel(
        start=T0,
        roads=tuple(f"r{i}" for i in range(values.shape[1])),
        values=values,
        mask=np.zeros_like(values, dtype=bool),
    )


def preds_from(panel, offset=0.0, windows=None):
    starts = np.arange(panel.num_steps - 23) if windows is None else windows
    values = np.stack([panel.values[s + 12 : s + 24] + offset for s in starts])
    return PredictionSet(roads=panel.roads, output_start=starts + 12, values=values)


class TestComputeErrors:
    def test_perfect_predictions(self):
        panel = panel_of(np.random.default_rng(0).uniform(20, 80, (100, 3)))
        table = compute_errors(preds_from(panel), panel)
        assert np.allclose(table.mae, 0) and np.allclose(table.rmse, 0)
        assert np.allclose(table.mape, 0)

    def test_constant_bias(self):
        panel = panel_of(np.random.default_rng(1).uniform(20, 80, (100, 2)))
        table = compute_errors(preds_from(panel, offset=2.0), panel)
        assert np.allclose(table.mae, 2.0) and np.allclose(table.rmse, 2.0)

    def test_hand_arithmetic(self):
        # errors alternate 1 and 3 -> MAE 2, RMSE sqrt(5)
        panel = panel_of(np.full((100, 1), 50.0))
        preds = preds_from(panel, windows=np.arange(60))  # even window count
        bump = np.where(np.arange(preds.values.shape[0]) % 2 == 0, 1.0, 3.0)
        preds = PredictionSet(
            roads=panel.roads,
            output_start=preds.output_start,
            values=panel.values[preds.output_start[:, None] + np.arange(12)[None, :]]
            + bump[:, None, None],
        )
        table = compute_errors(preds, panel)
        assert table.mae[0, 0] == pytest.approx(2.0)
        assert table.rmse[0, 0] == pytest.approx(np.sqrt(5.0))

    def test_rmse_at_least_mae(self):
        rng = np.random.default_rng(2)
        panel = panel_of(rng.uniform(20, 80, (150, 4)))
        noisy = preds_from(panel)
        noisy = PredictionSet(
            roads=panel.roads, output_start=noisy.output_start,
            values=noisy.values + rng.normal(0, 3, noisy.values.shape),
        )
        table = compute_errors(noisy, panel)
        assert np.all(table.rmse >= table.mae - 1e-12)

    def test_horizon_steps(self):
        assert [horizon_step(h) for h in (15, 30, 45, 60)] == [2, 5, 8, 11]
        with pytest.raises(ValueError):
            horizon_step(7)

    def test_no_overlap_excluded(self):
        panel = panel_of(np.full((40, 2), 50.0))
        preds = PredictionSet(
            roads=panel.roads, output_start=np.array([1000]),
            values=np.zeros((1, 12, 2)),
        )
        table = compute_errors(preds, panel)
        assert table.excluded == frozenset(panel.roads)
        with pytest.raises(ValueError):
            quartile_cohorts(table)

    def test_unit_mismatch(self):
        panel = panel_of(np.full((40, 2), 50.0))
        preds = PredictionSet(roads=panel.roads, output_start=np.array([12]),
                              values=np.zeros((1, 12, 2)), unit="mph")
        with pytest.raises(ValueError, match="unit"):
            compute_errors(preds, panel)


def table_with_maes(maes):
    n = len(maes)
    m = np.tile(np.asarray(maes, dtype=float)[:, None], (1, 4))
    return ErrorTable(
        roads=tuple(f"r{i}" for i in range(n)),
        horizons=(15, 30, 45, 60),
        mae=m, rmse=m, mape=m,
    )


class TestQuartileCohorts:
    def test_percentile_oracle_one_to_eight(self):
        cohorts = quartile_cohorts(table_with_maes([1, 2, 3, 4, 5, 6, 7, 8]))
        assert cohorts.q1 == pytest.approx(2.75)
        assert cohorts.q3 == pytest.approx(6.25)
        assert cohorts.low == {"r0", "r1"}
        assert cohorts.high == {"r6", "r7"}

    def test_all_equal_empty_cohorts(self):
        cohorts = quartile_cohorts(table_with_maes([3, 3, 3, 3, 3]))
        assert cohorts.low == frozenset() and cohorts.high == frozenset()

    def test_thresholds_exposed(self):
        cohorts = quartile_cohorts(table_with_maes([1, 2, 3, 4]))
        assert cohorts.q1 <= cohorts.q3

    def test_too_few_roads(self):
        with pytest.raises(ValueError, match="4 roads"):
            quartile_cohorts(table_with_maes([1, 2, 3]))

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        maes = rng.uniform(1, 9, 16)
        a = quartile_cohorts(table_with_maes(maes))
        b = quartile_cohorts(table_with_maes(np.exp(maes / 3.0)))
        assert a.low == b.low and a.high == b.high

    def test_cohort_size_bound(self):
        rng = np.random.default_rng(4)
        for n in (8, 13, 21):
            maes = rng.permutation(n) + rng.uniform(0, 0.1, n)
            c = quartile_cohorts(table_with_maes(maes))
            assert len(c.low) <= int(np.ceil(n / 4))
            assert len(c.high) <= int(np.ceil(n / 4))

    def test_disjoint(self):
        c = quartile_cohorts(table_with_maes([1, 2, 3, 4, 5, 6, 7, 8, 9]))
        assert not (c.low & c.high)


class TestSpeedHistogram:
    def test_constant_speed(self):
        bins, std = speed_histogram(panel_of(np.full((50, 1), 42.0)), "r0")
        assert std == 0.0
        assert sum(1 for b in bins if b["height"] == 1.0) == 1

    def test_two_bin_uniform(self):
        values = np.concatenate([np.full(25, 5.0), np.full(25, 15.0)])[:, None]
        bins, _ = speed_histogram(panel_of(values), "r0")
        assert [b["height"] for b in bins] == [1.0, 1.0]

    def test_bimodal_high_std(self):
        rng = np.random.default_rng(5)
        values = np.concatenate([rng.normal(20, 1, 200), rng.normal(70, 1, 200)])
        bins, std = speed_histogram(panel_of(values[:, None]), "r0")
        modal = sorted(bins, key=lambda b: -b["height"])[:2]
        assert {int(b["lo"]) for b in modal} == {10, 60}
        assert std > 20


class TestWindowedAe:
    def test_perfect_window(self):
        panel = panel_of(np.random.default_rng(6).uniform(30, 60, (60, 1)))
        preds = preds_from(panel)
        ae, _ = windowed_ae("r0", 30, preds, panel)
        assert ae == 0.0

    def test_constant_speed_zero_std(self):
        panel = panel_of(np.full((60, 1), 44.0))
        preds = preds_from(panel, offset=1.0)
        ae, std = windowed_ae("r0", 30, preds, panel)
        assert std == 0.0 and ae == pytest.approx(1.0)

    def test_insufficient_history(self):
        panel = panel_of(np.full((60, 1), 44.0))
        with pytest.raises(ValueError, match="history"):
            windowed_ae("r0", 5, preds_from(panel), panel)

    def test_display_format(self):
        assert format_ae_std(1.24, 160.70) == "AE: 1.24 STD:160.70"
