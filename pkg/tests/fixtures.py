"""Shared synthetic fixtures for tests, built on planted ground truth."""

from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from trafficlens.data.synth import ClusterProfile, default_profile
from trafficlens.data.types import SLOTS_PER_DAY, RoadNetwork, SpeedPanel


def _events(rng: np.random.Generator, steps: int, days: int, rate: float, depth: float,
            duration: int) -> np.ndarray:
    drop = np.zeros(steps)
    for day in range(days):
        for _ in range(rng.poisson(rate)):
            start = day * SLOTS_PER_DAY + int(rng.integers(0, SLOTS_PER_DAY))
            dur = max(2, int(round(duration * rng.uniform(0.7, 1.3))))
            d = depth * rng.uniform(0.8, 1.2)
            end = min(steps, start + dur)
            drop[start:end] = np.maximum(drop[start:end], d)
    return drop


def distracted_fixture(seed: int = 0, days: int = 10):
    """Panel where cluster 2's tail roads are mis-wired to decoy neighbors.

    Clusters 0 and 1 are chains whose declared edges match the causal
    event propagation (the model can learn that neighbors matter).
    Cluster 2 is a chain 010 -> ... -> 015 with a 3-step lag, but roads
    012..015 are declared as fed by cluster-0 decoys instead of their
    true parents. Their congestion onsets are therefore invisible to the
    model, while roads 011 (and 010's other children) stay predictable.

    Returns (panel, declared_network, info) where info carries the planted
    clusters, the mis-wired targets, and their true parents.
    """
    rng = np.random.default_rng(seed)
    steps = days * SLOTS_PER_DAY
    chains = {0: 5, 1: 5, 2: 6}
    cluster_noise = {0: 1.3, 1: 1.3, 2: 0.7}
    profiles = {c: default_profile(c).curve() for c in chains}

    road_ids: list[str] = []
    cluster_of: dict[str, int] = {}
    series: dict[str, np.ndarray] = {}
    causal_edges: list[tuple[str, str, int]] = []
    lag = 3
    i = 0
    for c, length in chains.items():
        noise = cluster_noise[c]
        rate, depth = 8.0, 25.0
        head_events = _events(rng, steps, days, rate, depth, duration=18)
        day_curve = np.tile(profiles[c], days)
        for p in range(length):
            road = f"{i:03d}"
            road_ids.append(road)
            cluster_of[road] = c
            shift = p * lag
            ev = np.zeros(steps)
            if shift < steps:
                ev[shift:] = head_events[: steps - shift]
            series[road] = np.clip(
                day_curve - ev + rng.normal(0, noise, steps), 0.0, None
            )
            if p > 0:
                causal_edges.append((f"{i - 1:03d}", road, lag))
            i += 1

    # Declared graph: clusters 0/1 follow the causal chains; cluster 2's
    # first child (011) does too, but 012..015 see only decoys from cluster 0.
    targets = ["012", "013", "014", "015"]
    decoys = {"012": "001", "013": "002", "014": "003", "015": "004"}
    edges = []
    for a, b, _ in causal_edges:
        if b in targets:
            continue
        edges.append((a, b, 1.0))
    for t, decoy in decoys.items():
        edges.append((decoy, t, 1.0))

    coords = {r: (35.5 + 0.02 * cluster_of[r], 129.3 + 0.005 * int(r)) for r in road_ids}
    values = np.column_stack([series[r] for r in road_ids])
    panel = SpeedPanel(
        start=datetime(2024, 6, 3, tzinfo=timezone.utc),
        roads=tuple(road_ids),
        values=values,
        mask=np.zeros_like(values, dtype=bool),
        unit="km/h",
    )
    network = RoadNetwork(roads=tuple(road_ids), edges=tuple(edges), coordinates=coords)
    info = {
        "cluster_of": cluster_of,
        "targets": targets,
        "parents": {t: f"{int(t) - 1:03d}" for t in targets},
        "causal_edges": causal_edges,
        "lag": lag,
    }
    return panel, network, info
