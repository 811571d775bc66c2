"""Core domain types for road networks and speed panels."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

INTERVAL = timedelta(minutes=5)
SLOTS_PER_DAY = 288


class DataError(Exception):
    """Base class for data ingestion and validation failures."""


class ParseError(DataError):
    """A file row could not be parsed; message names the line number."""


class ConflictError(DataError):
    """Duplicate observations with conflicting values."""


@dataclass(frozen=True)
class RoadNetwork:
    """Directed road graph with edge weights and display coordinates.

    Edges are (from_id, to_id, weight) with weight >= 0. The graph is
    directed: (a, b) does not imply (b, a).
    """

    roads: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    coordinates: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        known = set(self.roads)
        if len(known) != len(self.roads):
            raise DataError("duplicate road ids in network")
        seen: set[tuple[str, str]] = set()
        for a, b, w in self.edges:
            if a not in known or b not in known:
                raise DataError(f"edge ({a}, {b}) references unknown road")
            if w < 0 or not np.isfinite(w):
                raise DataError(f"edge ({a}, {b}) has invalid weight {w}")
            if (a, b) in seen:
                raise DataError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))

    @property
    def index(self) -> dict[str, int]:
        return {r: i for i, r in enumerate(self.roads)}

    def adjacency(self) -> np.ndarray:
        """Dense weight matrix A with A[i, j] = weight of edge j -> i (in-edges per row)."""
        idx = self.index
        a = np.zeros((len(self.roads), len(self.roads)))
        for src, dst, w in self.edges:
            a[idx[dst], idx[src]] = w
        return a

    def in_neighbors(self, road: str) -> list[str]:
        return [src for src, dst, _ in self.edges if dst == road]


@dataclass(frozen=True)
class SpeedPanel:
    """Aligned per-road speed series on a uniform 5-minute grid.

    ``values`` is (T, N) float64; cells are NaN where missing before
    imputation. ``mask`` is True for cells that are missing or imputed.
    """

    start: datetime
    roads: tuple[str, ...]
    values: np.ndarray
    mask: np.ndarray
    unit: str = "km/h"
    interval: timedelta = INTERVAL

    def __post_init__(self) -> None:
        if self.interval != INTERVAL:
            raise DataError(f"panel interval must be 5 minutes, got {self.interval}")
        if self.start.tzinfo is None:
            raise DataError("panel start must be timezone-aware (UTC)")
        if self.values.shape != (self.num_steps, len(self.roads)):
            raise DataError(
                f"values shape {self.values.shape} != ({self.num_steps}, {len(self.roads)})"
            )
        if self.mask.shape != self.values.shape:
            raise DataError("mask shape differs from values shape")
        self.values.setflags(write=False)
        self.mask.setflags(write=False)

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_roads(self) -> int:
        return len(self.roads)

    @property
    def end(self) -> datetime:
        return self.start + self.num_steps * self.interval

    @property
    def road_index(self) -> dict[str, int]:
        return {r: i for i, r in enumerate(self.roads)}

    def time_at(self, step: int) -> datetime:
        return self.start + step * self.interval

    def step_at(self, t: datetime) -> int:
        delta = t - self.start
        steps, rem = divmod(delta, self.interval)
        if rem != timedelta(0):
            raise DataError(f"timestamp {t.isoformat()} is off the 5-minute grid")
        if not 0 <= steps < self.num_steps:
            raise DataError(f"timestamp {t.isoformat()} outside panel range")
        return int(steps)

    def slot_at(self, step: int) -> int:
        """Time-of-day slot (0..287) of a grid step."""
        t = self.time_at(step).astimezone(timezone.utc)
        return (t.hour * 60 + t.minute) // 5

    def dow_at(self, step: int) -> int:
        return self.time_at(step).astimezone(timezone.utc).weekday()

    def series(self, road: str) -> np.ndarray:
        return self.values[:, self.road_index[road]]

    def slice_steps(self, begin: int, end: int) -> "SpeedPanel":
        return SpeedPanel(
            start=self.time_at(begin),
            roads=self.roads,
            values=self.values[begin:end].copy(),
            mask=self.mask[begin:end].copy(),
            unit=self.unit,
        )


@dataclass(frozen=True)
class TrendVector:
    """Mean daily speed profile at 5-minute resolution (288 slots)."""

    slots: np.ndarray
    support: np.ndarray

    def __post_init__(self) -> None:
        if self.slots.shape != (SLOTS_PER_DAY,) or self.support.shape != (SLOTS_PER_DAY,):
            raise DataError("trend vectors must have exactly 288 slots")
        if not np.all(np.isfinite(self.slots)):
            raise DataError("trend slots must be finite")


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/val/test fractions; train is earliest, test latest."""

    train_fraction: float = 0.7
    val_fraction: float = 0.1
    test_fraction: float = 0.2

    def __post_init__(self) -> None:
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fracs):
            raise DataError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise DataError(f"split fractions must sum to 1, got {sum(fracs)}")
