"""Synthetic road-network generator with planted clusters and causal lags.

Roads in one cluster share a daily speed profile. Each cluster is a chain
road_0 -> road_1 -> ...; congestion events originate at the chain head and
replay downstream with a fixed lag, planting Granger-causal pairs. The
ground truth (cluster labels, causal edges) is returned for oracle tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import numpy as np

from .types import SLOTS_PER_DAY, DataError, RoadNetwork, SpeedPanel


@dataclass(frozen=True)
class ClusterProfile:
    """Daily base profile: free-flow speed with Gaussian rush-hour dips."""

    base_speed: float
    dips: tuple[tuple[float, float, float], ...] = ()  # (center_slot, width_slots, depth)

    def curve(self) -> np.ndarray:
        slots = np.arange(SLOTS_PER_DAY, dtype=float)
        speed = np.full(SLOTS_PER_DAY, self.base_speed)
        for center, width, depth in self.dips:
            speed = speed - depth * np.exp(-0.5 * ((slots - center) / width) ** 2)
        return speed


def default_profile(cluster: int) -> ClusterProfile:
    """Structurally distinct dip families so clusters separate by trend shape."""
    base = 62.0 + 7.0 * cluster
    morning = (92.0 + 2.0 * cluster, 10.0, 22.0)
    midday = (150.0 + 3.0 * cluster, 22.0, 16.0)
    evening = (214.0 - 2.0 * cluster, 12.0, 20.0)
    night = (30.0 + 2.0 * cluster, 14.0, 14.0)
    families: tuple[tuple[tuple[float, float, float], ...], ...] = (
        (morning,),
        (evening,),
        (morning, evening),
        (midday,),
        (night, midday, evening),
        (night,),
        (morning, midday),
        (night, evening),
    )
    return ClusterProfile(base_speed=base, dips=families[cluster % len(families)])


@dataclass(frozen=True)
class SynthConfig:
    clusters: int = 2
    roads_per_cluster: int = 5
    days: int = 14
    edge_lag_steps: int = 2
    noise_std: float = 1.0
    event_rate_per_day: float = 4.0
    event_depth: float = 25.0
    event_duration_steps: int = 18
    profiles: tuple[ClusterProfile, ...] | None = None
    unit: str = "km/h"
    start: str = "2024-06-03T00:00:00+00:00"

    def __post_init__(self) -> None:
        if self.clusters < 1 or self.roads_per_cluster < 1:
            raise DataError("generator needs at least one cluster and one road per cluster")
        if self.days < 1:
            raise DataError("generator needs at least one day")
        if self.edge_lag_steps < 0:
            raise DataError("edge lag must be >= 0 steps")
        if self.noise_std < 0 or self.event_depth < 0 or self.event_rate_per_day < 0:
            raise DataError("noise, event depth, and event rate must be >= 0")
        if self.event_duration_steps < 1:
            raise DataError("event duration must be >= 1 step")
        if self.profiles is not None and len(self.profiles) != self.clusters:
            raise DataError("profiles, when given, must match the cluster count")

    def profile(self, cluster: int) -> ClusterProfile:
        if self.profiles is not None:
            return self.profiles[cluster]
        return default_profile(cluster)

    def to_json(self) -> str:
        doc = asdict(self)
        if self.profiles is not None:
            doc["profiles"] = [
                {"base_speed": p.base_speed, "dips": [list(d) for d in p.dips]}
                for p in self.profiles
            ]
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        doc = json.loads(text)
        profiles = doc.pop("profiles", None)
        if profiles is not None:
            doc["profiles"] = tuple(
                ClusterProfile(
                    base_speed=p["base_speed"],
                    dips=tuple(tuple(d) for d in p.get("dips", ())),
                )
                for p in profiles
            )
        return cls(**doc)


@dataclass(frozen=True)
class GroundTruth:
    """Planted structure: cluster labels and direct causal edges with lags."""

    cluster_of: dict[str, int]
    causal_edges: tuple[tuple[str, str, int], ...] = field(default_factory=tuple)


def _event_series(rng: np.random.Generator, cfg: SynthConfig, steps: int) -> np.ndarray:
    """Additive congestion depth per step for one chain head."""
    drop = np.zeros(steps)
    for day in range(cfg.days):
        n_events = rng.poisson(cfg.event_rate_per_day)
        for _ in range(n_events):
            start = day * SLOTS_PER_DAY + int(rng.integers(0, SLOTS_PER_DAY))
            duration = max(2, int(round(cfg.event_duration_steps * rng.uniform(0.7, 1.3))))
            depth = cfg.event_depth * rng.uniform(0.7, 1.3)
            end = min(steps, start + duration)
            drop[start:end] = np.maximum(drop[start:end], depth)
            # short linear ramps so onsets are not perfectly vertical
            for r, frac in ((start - 1, 0.5),):
                if 0 <= r < steps:
                    drop[r] = max(drop[r], frac * depth)
    return drop


def synth_generate(config: SynthConfig, seed: int) -> tuple[SpeedPanel, RoadNetwork, GroundTruth]:
    """Generate (panel, network, ground truth); bit-identical for a fixed seed."""
    rng = np.random.default_rng(seed)
    steps = config.days * SLOTS_PER_DAY
    n_roads = config.clusters * config.roads_per_cluster
    road_ids = [f"{i:03d}" for i in range(n_roads)]

    values = np.zeros((steps, n_roads))
    cluster_of: dict[str, int] = {}
    edges: list[tuple[str, str, float]] = []
    causal: list[tuple[str, str, int]] = []
    coords: dict[str, tuple[float, float]] = {}

    day_curve: dict[int, np.ndarray] = {}
    for c in range(config.clusters):
        curve = config.profile(c).curve()
        day_curve[c] = np.tile(curve, config.days)

    for c in range(config.clusters):
        head_events = _event_series(rng, config, steps)
        center_lat = 35.50 + 0.08 * (c % 4)
        center_lon = 129.30 + 0.08 * (c // 4)
        for p in range(config.roads_per_cluster):
            i = c * config.roads_per_cluster + p
            road = road_ids[i]
            cluster_of[road] = c
            coords[road] = (center_lat + 0.011 * p, center_lon + 0.004 * (p % 3))
            shift = p * config.edge_lag_steps
            events = np.zeros(steps)
            if shift < steps:
                events[shift:] = head_events[: steps - shift]
            noise = rng.normal(0.0, config.noise_std, size=steps) if config.noise_std > 0 else 0.0
            values[:, i] = np.clip(day_curve[c] - events + noise, 0.0, None)
            if p > 0:
                prev = road_ids[i - 1]
                edges.append((prev, road, 1.0))
                causal.append((prev, road, config.edge_lag_steps))

    panel = SpeedPanel(
        start=datetime.fromisoformat(config.start).astimezone(timezone.utc),
        roads=tuple(road_ids),
        values=values,
        mask=np.zeros((steps, n_roads), dtype=bool),
        unit=config.unit,
    )
    network = RoadNetwork(roads=tuple(road_ids), edges=tuple(edges), coordinates=coords)
    truth = GroundTruth(cluster_of=cluster_of, causal_edges=tuple(causal))
    return panel, network, truth
