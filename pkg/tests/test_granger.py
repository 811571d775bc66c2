"""Granger F-test: power, calibration, invariances, and the scan filter."""

import numpy as np
import pytest

from trafficlens.data import SynthConfig, synth_generate
from trafficlens.deps import CausalityResult, UntestableError, causality_scan, granger_test


def planted_pair(rng, n=2000, lag=2, coef=0.9):
    x = rng.standard_normal(n)
    e = rng.standard_normal(n)
    y = np.zeros(n)
    y[lag:] = coef * x[:-lag]
    return x, y + e


class TestGrangerTest:
    def test_planted_lag_detected(self):
        rng = np.random.default_rng(0)
        hits = 0
        for _ in range(50):
            x, y = planted_pair(rng)
            r = granger_test(x, y)
            hits += r.p_value < 0.05
        assert hits >= 48

    def test_white_noise_calibration_small(self):
        rng = np.random.default_rng(1)
        rejects = 0
        trials = 120
        for _ in range(trials):
            x = rng.standard_normal(600)
            y = rng.standard_normal(600)
            rejects += granger_test(x, y).p_value < 0.05
        assert rejects / trials < 0.12

    def test_f_invariant_under_affine_rescaling(self):
        rng = np.random.default_rng(2)
        x, y = planted_pair(rng, n=900)
        base = granger_test(x, y)
        scaled_x = granger_test(x * 3.6, y)
        scaled_y = granger_test(x, y * 3.6 + 12.0)
        assert scaled_x.f_value == pytest.approx(base.f_value, abs=1e-8)
        assert scaled_y.f_value == pytest.approx(base.f_value, abs=1e-8)
        assert scaled_x.lag == base.lag == scaled_y.lag

    def test_constant_series_untestable(self):
        with pytest.raises(UntestableError):
            granger_test(np.ones(400), np.random.default_rng(3).standard_normal(400))

    def test_too_short(self):
        with pytest.raises(ValueError, match="points"):
            granger_test(np.zeros(30), np.zeros(30), max_lag=12)

    def test_dof_formula(self):
        rng = np.random.default_rng(4)
        x, y = planted_pair(rng, n=500)
        r = granger_test(x, y)
        n_rows = 500 - r.lag
        assert r.dof == (r.lag, n_rows - 2 * r.lag - 1)

    def test_display_format(self):
        r = CausalityResult(cause="112", effect="113", lag=6, f_value=16.2,
                            dof=(6, 268), p_value=0.001)
        assert r.display() == "F[6,268]=16.2, p=0.001"
        tiny = CausalityResult(cause="a", effect="b", lag=5, f_value=5.9,
                               dof=(5, 271), p_value=0.0001)
        assert tiny.display() == "F[5,271]=5.9, p<0.001"


class TestCausalityScan:
    @pytest.fixture(scope="class")
    def planted_panel(self):
        cfg = SynthConfig(clusters=1, roads_per_cluster=4, days=7, noise_std=1.0,
                          event_rate_per_day=6.0, edge_lag_steps=2)
        panel, _, truth = synth_generate(cfg, seed=5)
        return panel, truth

    def test_planted_parent_ranks_first(self, planted_panel):
        panel, truth = planted_panel
        series = {r: panel.series(r) for r in panel.roads}
        results = causality_scan("001", ["000", "002", "003"], series)
        assert results, "planted parent should be significant"
        assert results[0].cause == "000"

    def test_excludes_non_significant(self, planted_panel):
        panel, _ = planted_panel
        rng = np.random.default_rng(6)
        series = {r: panel.series(r) for r in panel.roads}
        series["noise"] = rng.standard_normal(panel.num_steps) + 50
        results = causality_scan("001", ["000", "noise"], series)
        assert all(r.p_value < 0.05 for r in results)

    def test_empty_result_allowed(self):
        rng = np.random.default_rng(7)
        series = {"a": rng.standard_normal(500), "b": rng.standard_normal(500),
                  "c": rng.standard_normal(500)}
        results = causality_scan("a", ["b", "c"], series)
        assert all(r.p_value < 0.05 for r in results)  # possibly empty

    def test_sorted_by_f_descending(self, planted_panel):
        panel, _ = planted_panel
        series = {r: panel.series(r) for r in panel.roads}
        results = causality_scan("003", ["000", "001", "002"], series)
        fs = [r.f_value for r in results]
        assert fs == sorted(fs, reverse=True)

    def test_requires_candidates(self):
        with pytest.raises(ValueError):
            causality_scan("a", [], {"a": np.zeros(100)})
