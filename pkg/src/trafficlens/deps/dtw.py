"""Banded dynamic time warping over daily trends.

Distance is the minimum cumulative L1 cost over monotone alignment paths
constrained to a Sakoe-Chiba band |i - j| <= window. Trends are z-normalized
first so that shape, not absolute speed level, drives the comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


def znorm(v: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance copy; constant vectors normalize to zeros."""
    v = np.asarray(v, dtype=float)
    std = v.std()
    if std < _EPS:
        return np.zeros_like(v)
    return (v - v.mean()) / std


def _banded_dp(a: np.ndarray, b: np.ndarray, window: int) -> float:
    """Bottom-up DP over the band; recurrence D[i,j] = |a_i-b_j| + min(3 predecessors)."""
    n = len(a)
    w = window
    inf = np.inf
    prev = np.full(2 * w + 3, inf)  # padded row, index j maps to j - (i-1) + w + 1
    curr = np.full(2 * w + 3, inf)
    for i in range(n):
        curr.fill(inf)
        lo, hi = max(0, i - w), min(n - 1, i + w)
        for j in range(lo, hi + 1):
            k = j - i + w + 1
            c = abs(a[i] - b[j])
            if i == 0 and j == 0:
                curr[k] = c
                continue
            best = min(prev[k], prev[k + 1], curr[k - 1])  # diag, up, left
            curr[k] = c + best
        prev, curr = curr, prev
    return float(prev[w + 1])


def dtw_distance(a: np.ndarray, b: np.ndarray, window: int = 4, normalize: bool = True) -> float:
    """Banded DTW distance between two equal-length series.

    ``window`` is the Sakoe-Chiba band half-width in steps; 0 forces the
    diagonal, reducing to the pointwise L1 sum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"series length mismatch: {a.shape} vs {b.shape}")
    if window < 0:
        raise ValueError("window must be >= 0")
    if normalize:
        a, b = znorm(a), znorm(b)
    return _banded_dp(a, b, window)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distance matrix with a fixed road ordering."""

    ids: tuple[str, ...]
    d: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.ids)
        if self.d.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.d.shape} != ({n}, {n})")
        if not np.all(np.isfinite(self.d)):
            raise ValueError("distance matrix must be finite")
        if not np.allclose(self.d, self.d.T):
            raise ValueError("distance matrix must be symmetric")
        if not np.allclose(np.diag(self.d), 0.0):
            raise ValueError("distance matrix diagonal must be zero")
        self.d.setflags(write=False)

    def at(self, a: str, b: str) -> float:
        i, j = self.ids.index(a), self.ids.index(b)
        return float(self.d[i, j])

    def to_dict(self) -> dict:
        return {"ids": list(self.ids), "d": self.d.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DistanceMatrix":
        return cls(ids=tuple(doc["ids"]), d=np.asarray(doc["d"], dtype=float))


def dtw_matrix(trends: dict[str, np.ndarray], window: int = 4) -> DistanceMatrix:
    """All-pairs banded DTW over per-road trends; symmetric by construction."""
    ids = tuple(trends.keys())
    lengths = {len(trends[r]) for r in ids}
    if len(lengths) > 1:
        raise ValueError(f"trends must share one length, got {sorted(lengths)}")
    normed = [znorm(trends[r]) for r in ids]
    n = len(ids)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = _banded_dp(normed[i], normed[j], window)
    return DistanceMatrix(ids=ids, d=d)
