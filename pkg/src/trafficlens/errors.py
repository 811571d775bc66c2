"""Per-road, per-horizon error metrics, quartile cohorts, and line-view readouts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data.types import SpeedPanel

HORIZONS_MIN = (15, 30, 45, 60)


def horizon_step(minutes: int) -> int:
    """0-based prediction step for a horizon; 15 min -> step index 2."""
    if minutes % 5 != 0 or not 5 <= minutes <= 60:
        raise ValueError(f"horizon must be a multiple of 5 in [5, 60], got {minutes}")
    return minutes // 5 - 1


@dataclass(frozen=True)
class PredictionSet:
    """Stacked 12-step-ahead predictions aligned to a panel's step grid.

    ``values[w, s, n]`` predicts the panel step ``output_start[w] + s`` for
    road n, in the panel's speed unit.
    """

    roads: tuple[str, ...]
    output_start: np.ndarray  # (W,) panel step index of each window's first output
    values: np.ndarray  # (W, 12, N)
    unit: str = "km/h"

    def __post_init__(self) -> None:
        if self.values.ndim != 3 or self.values.shape[2] != len(self.roads):
            raise ValueError(f"bad prediction shape {self.values.shape}")
        if len(self.output_start) != self.values.shape[0]:
            raise ValueError("output_start length must match window count")

    def horizon_series(self, panel_steps: int, horizon_min: int) -> np.ndarray:
        """(T, N) series of h-step-ahead predictions, NaN where not covered."""
        s = horizon_step(horizon_min)
        out = np.full((panel_steps, len(self.roads)), np.nan)
        steps = self.output_start + s
        ok = (steps >= 0) & (steps < panel_steps)
        out[steps[ok]] = self.values[ok, s, :]
        return out


@dataclass(frozen=True)
class ErrorTable:
    roads: tuple[str, ...]
    horizons: tuple[int, ...]
    mae: np.ndarray  # (N, H)
    rmse: np.ndarray
    mape: np.ndarray  # percent, NaN when no nonzero actuals
    excluded: frozenset[str] = field(default_factory=frozenset)

    def road_mae(self, road: str, horizon_min: int) -> float:
        return float(self.mae[self.roads.index(road), self.horizons.index(horizon_min)])

    def average_mae(self, road: str) -> float:
        return float(np.nanmean(self.mae[self.roads.index(road)]))

    def to_dict(self) -> dict:
        return {
            "roads": list(self.roads),
            "horizons": list(self.horizons),
            "mae": self.mae.tolist(),
            "rmse": self.rmse.tolist(),
            "mape": [[None if np.isnan(v) else v for v in row] for row in self.mape.tolist()],
            "excluded": sorted(self.excluded),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ErrorTable":
        mape = np.array(
            [[np.nan if v is None else v for v in row] for row in doc["mape"]], dtype=float
        )
        return cls(
            roads=tuple(doc["roads"]),
            horizons=tuple(doc["horizons"]),
            mae=np.asarray(doc["mae"], dtype=float),
            rmse=np.asarray(doc["rmse"], dtype=float),
            mape=mape,
            excluded=frozenset(doc["excluded"]),
        )


@dataclass(frozen=True)
class ErrorCohorts:
    """Low-error (MAE < Q1) and high-error (MAE > Q3) road groups."""

    low: frozenset[str]
    high: frozenset[str]
    q1: float
    q3: float
    horizon: int

    def to_dict(self) -> dict:
        return {
            "low": sorted(self.low),
            "high": sorted(self.high),
            "q1": self.q1,
            "q3": self.q3,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ErrorCohorts":
        return cls(
            low=frozenset(doc["low"]),
            high=frozenset(doc["high"]),
            q1=doc["q1"],
            q3=doc["q3"],
            horizon=doc["horizon"],
        )


def compute_errors(
    predictions: PredictionSet, actuals: SpeedPanel, horizons: tuple[int, ...] = HORIZONS_MIN
) -> ErrorTable:
    """MAE/RMSE/MAPE per road per horizon over aligned prediction windows."""
    if predictions.roads != actuals.roads:
        raise ValueError("prediction and actual road sets differ")
    if predictions.unit != actuals.unit:
        raise ValueError(f"unit mismatch: {predictions.unit} vs {actuals.unit}")
    n = len(actuals.roads)
    mae = np.full((n, len(horizons)), np.nan)
    rmse = np.full((n, len(horizons)), np.nan)
    mape = np.full((n, len(horizons)), np.nan)
    excluded: set[str] = set()
    for hi, h in enumerate(horizons):
        s = horizon_step(h)
        steps = predictions.output_start + s
        ok = (steps >= 0) & (steps < actuals.num_steps)
        if not ok.any():
            excluded.update(actuals.roads)
            continue
        pred = predictions.values[ok, s, :]
        act = actuals.values[steps[ok], :]
        err = pred - act
        mae[:, hi] = np.abs(err).mean(axis=0)
        rmse[:, hi] = np.sqrt((err ** 2).mean(axis=0))
        nz = act != 0
        for j in range(n):
            if nz[:, j].any():
                mape[j, hi] = float(np.abs(err[nz[:, j], j] / act[nz[:, j], j]).mean() * 100.0)
    for j, road in enumerate(actuals.roads):
        if np.isnan(mae[j]).all():
            excluded.add(road)
    return ErrorTable(
        roads=actuals.roads,
        horizons=tuple(horizons),
        mae=mae,
        rmse=rmse,
        mape=mape,
        excluded=frozenset(excluded),
    )


def quartile_cohorts(table: ErrorTable, horizon: int = 15) -> ErrorCohorts:
    """Split roads into low (< Q1) and high (> Q3) MAE cohorts.

    Quartiles use linear-interpolation percentiles; boundary roads (exactly
    at Q1/Q3) belong to neither cohort.
    """
    hi = table.horizons.index(horizon)
    usable = [
        (r, table.mae[j, hi])
        for j, r in enumerate(table.roads)
        if r not in table.excluded and np.isfinite(table.mae[j, hi])
    ]
    if len(usable) < 4:
        raise ValueError(f"need at least 4 roads with defined MAE, got {len(usable)}")
    values = np.array([v for _, v in usable])
    q1, q3 = np.percentile(values, [25, 75])
    low = frozenset(r for r, v in usable if v < q1)
    high = frozenset(r for r, v in usable if v > q3)
    return ErrorCohorts(low=low, high=high, q1=float(q1), q3=float(q3), horizon=horizon)


def speed_histogram(
    panel: SpeedPanel, road: str, bin_width: float = 10.0
) -> tuple[list[dict], float]:
    """Fixed-width speed histogram from 0, normalized by the max count.

    Returns (bins, sample std); each bin is {"lo", "hi", "height"}.
    """
    series = panel.series(road)
    series = series[np.isfinite(series)]
    if len(series) == 0:
        raise ValueError(f"road {road} has no finite speeds")
    top = float(series.max())
    n_bins = max(1, int(np.floor(top / bin_width)) + 1)
    counts, edges = np.histogram(series, bins=n_bins, range=(0.0, n_bins * bin_width))
    heights = counts / counts.max()
    bins = [
        {"lo": float(edges[i]), "hi": float(edges[i + 1]), "height": float(heights[i])}
        for i in range(n_bins)
    ]
    std = float(series.std(ddof=1)) if len(series) > 1 else 0.0
    return bins, std


def windowed_ae(
    road: str,
    step: int,
    predictions: PredictionSet,
    actuals: SpeedPanel,
    horizon: int = 15,
    window: int = 12,
) -> tuple[float, float]:
    """Mean absolute error and speed std over the trailing hour at a cursor step."""
    if step + 1 < window:
        raise ValueError(f"cursor step {step} has less than {window} steps of history")
    j = actuals.roads.index(road)
    lo = step + 1 - window
    pred_series = predictions.horizon_series(actuals.num_steps, horizon)[lo : step + 1, j]
    act = actuals.values[lo : step + 1, j]
    covered = np.isfinite(pred_series)
    if not covered.any():
        raise ValueError(f"no predictions cover steps {lo}..{step} for road {road}")
    ae = float(np.abs(pred_series[covered] - act[covered]).mean())
    std = float(act.std(ddof=1)) if len(act) > 1 else 0.0
    return ae, std


def format_ae_std(ae: float, std: float) -> str:
    """Line-view readout string, e.g. ``AE: 1.24 STD:160.70``."""
    return f"AE: {ae:.2f} STD:{std:.2f}"
