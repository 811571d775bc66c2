"""Shared session fixtures: trained models are expensive, so build once."""

from __future__ import annotations

import numpy as np
import pytest

from trafficlens.data import SplitSpec, SynthConfig, chronological_split, synth_generate
from trafficlens.data.preprocess import daily_trend
from trafficlens.deps import dtw_matrix, spectral_cluster
from trafficlens.errors import compute_errors, quartile_cohorts
from trafficlens.model import ModelConfig, train
from trafficlens.model.training import predict

from fixtures import distracted_fixture


@pytest.fixture(scope="session")
def small_system():
    """Tiny trained system: 6 roads, 2 clusters, quick model."""
    cfg = SynthConfig(
        clusters=2, roads_per_cluster=3, days=5, noise_std=0.8, event_rate_per_day=6.0,
        event_duration_steps=8,
    )
    panel, network, truth = synth_generate(cfg, seed=11)
    train_p, val_p, test_p = chronological_split(panel, SplitSpec(), min_steps=24)
    state = train(train_p, val_p, network, ModelConfig(width=16, heads=2, epochs=4, seed=3))
    return {
        "config": cfg,
        "panel": panel,
        "network": network,
        "truth": truth,
        "train": train_p,
        "val": val_p,
        "test": test_p,
        "state": state,
    }


@pytest.fixture(scope="session")
def distracted_system():
    """Mis-wired fixture with a trained model and the full analysis chain."""
    panel, network, info = distracted_fixture(seed=0, days=10)
    train_p, val_p, test_p = chronological_split(panel, SplitSpec(), min_steps=24)
    state = train(
        train_p, val_p, network,
        ModelConfig(epochs=12, patience=4, learning_rate=2e-3, seed=0),
    )
    preds = predict(state, test_p)
    table = compute_errors(preds, test_p)
    cohorts = quartile_cohorts(table)
    dm = dtw_matrix({r: daily_trend(train_p, r).slots for r in panel.roads}, window=4)
    assignment = spectral_cluster(dm, 3, seed=0)
    return {
        "panel": panel,
        "network": network,
        "info": info,
        "train": train_p,
        "val": val_p,
        "test": test_p,
        "state": state,
        "predictions": preds,
        "table": table,
        "cohorts": cohorts,
        "distance": dm,
        "clusters": assignment,
    }
