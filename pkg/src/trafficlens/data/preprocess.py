"""Missing-value imputation, chronological splitting, and daily trends."""

from __future__ import annotations

import numpy as np

from .types import SLOTS_PER_DAY, DataError, SpeedPanel, SplitSpec, TrendVector


def fill_missing(panel: SpeedPanel) -> SpeedPanel:
    """Impute missing cells with historical (day-of-week, slot) means.

    Non-finite and negative readings count as explicit errors and are
    imputed too. Fallback when a (dow, slot) bucket has no clean data is
    the road's mean over all clean cells. Idempotent: imputed cells are
    excluded from the historical means, so a second pass reproduces the
    same values.
    """
    values = np.array(panel.values, dtype=float)
    bad = panel.mask | ~np.isfinite(values) | (values < 0)
    if not bad.any():
        return panel

    steps = np.arange(panel.num_steps)
    slots = np.array([panel.slot_at(s) for s in steps])
    dows = np.array([panel.dow_at(s) for s in steps])
    bucket = dows * SLOTS_PER_DAY + slots  # 0..2015, one per (dow, slot)

    filled = values.copy()
    for j, road in enumerate(panel.roads):
        col = values[:, j]
        clean = ~bad[:, j]
        if not clean.any():
            raise DataError(f"road {road} has no valid observations to fill from")
        sums = np.bincount(bucket[clean], weights=col[clean], minlength=7 * SLOTS_PER_DAY)
        counts = np.bincount(bucket[clean], minlength=7 * SLOTS_PER_DAY)
        global_mean = col[clean].mean()
        miss = np.flatnonzero(bad[:, j])
        b = bucket[miss]
        have_hist = counts[b] > 0
        fill = np.where(have_hist, sums[b] / np.maximum(counts[b], 1), global_mean)
        filled[miss, j] = fill
    return SpeedPanel(
        start=panel.start, roads=panel.roads, values=filled, mask=bad.copy(), unit=panel.unit
    )


def chronological_split(
    panel: SpeedPanel, spec: SplitSpec, min_steps: int = 12
) -> tuple[SpeedPanel, SpeedPanel, SpeedPanel]:
    """Split into contiguous (train, val, test) segments, earliest first.

    Train and val get floor(fraction * T) steps; the remainder goes to test.
    """
    t = panel.num_steps
    n_train = int(spec.train_fraction * t)
    n_val = int(spec.val_fraction * t)
    n_test = t - n_train - n_val
    for name, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        if n < min_steps:
            raise DataError(
                f"{name} segment has {n} steps, shorter than one {min_steps}-step window"
            )
    train = panel.slice_steps(0, n_train)
    val = panel.slice_steps(n_train, n_train + n_val)
    test = panel.slice_steps(n_train + n_val, t)
    return train, val, test


def daily_trend(panel: SpeedPanel, road: str) -> TrendVector:
    """288-slot mean daily profile for one road.

    Imputed cells are ignored wherever a slot has clean observations;
    slots with only imputed data fall back to those, and slots never
    observed fall back to the road's overall mean with support 0.
    """
    if road not in panel.road_index:
        raise DataError(f"road {road} not in panel")
    j = panel.road_index[road]
    col = panel.values[:, j]
    imputed = panel.mask[:, j]
    slots = np.array([panel.slot_at(s) for s in range(panel.num_steps)])

    clean = np.isfinite(col) & ~imputed
    any_val = np.isfinite(col)
    sums_clean = np.bincount(slots[clean], weights=col[clean], minlength=SLOTS_PER_DAY)
    n_clean = np.bincount(slots[clean], minlength=SLOTS_PER_DAY)
    sums_all = np.bincount(slots[any_val], weights=col[any_val], minlength=SLOTS_PER_DAY)
    n_all = np.bincount(slots[any_val], minlength=SLOTS_PER_DAY)

    if not any_val.any():
        raise DataError(f"road {road} has no finite observations")
    overall = col[clean].mean() if clean.any() else col[any_val].mean()

    out = np.full(SLOTS_PER_DAY, overall)
    support = np.zeros(SLOTS_PER_DAY, dtype=int)
    use_clean = n_clean > 0
    out[use_clean] = sums_clean[use_clean] / n_clean[use_clean]
    support[use_clean] = n_clean[use_clean]
    only_imputed = (~use_clean) & (n_all > 0)
    out[only_imputed] = sums_all[only_imputed] / n_all[only_imputed]
    support[only_imputed] = n_all[only_imputed]
    return TrendVector(slots=out, support=support)


def trend_matrix(panel: SpeedPanel) -> np.ndarray:
    """Stack daily trends for all roads into an (N, 288) array."""
    return np.stack([daily_trend(panel, r).slots for r in panel.roads])
