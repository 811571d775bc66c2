"""Spectral clustering of the DTW distance matrix with elbow suggestion."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .dtw import DistanceMatrix


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    label: dict[str, int]
    inertia_curve: tuple[tuple[int, float], ...] = field(default_factory=tuple)
    degenerate: bool = False

    def labels_for(self, ids: tuple[str, ...]) -> np.ndarray:
        return np.array([self.label[r] for r in ids])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "label": dict(self.label),
            "inertia_curve": [[k, v] for k, v in self.inertia_curve],
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClusterAssignment":
        return cls(
            k=doc["k"],
            label={r: int(c) for r, c in doc["label"].items()},
            inertia_curve=tuple((int(k), float(v)) for k, v in doc["inertia_curve"]),
            degenerate=doc.get("degenerate", False),
        )


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator, n_init: int = 10) -> np.ndarray:
    """Seeded k-means++ with Lloyd iterations; best of n_init restarts."""
    n = len(points)
    best_labels, best_cost = None, np.inf
    for _ in range(n_init):
        centers = np.empty((k, points.shape[1]))
        centers[0] = points[rng.integers(n)]
        d2 = np.sum((points - centers[0]) ** 2, axis=1)
        for c in range(1, k):
            total = d2.sum()
            if total <= 0:
                centers[c] = points[rng.integers(n)]
            else:
                centers[c] = points[rng.choice(n, p=d2 / total)]
            d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
        labels = np.zeros(n, dtype=int)
        for _ in range(300):
            dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
            new_labels = dist.argmin(axis=1)
            for c in range(k):
                members = points[new_labels == c]
                if len(members) == 0:
                    new_labels[dist.min(axis=1).argmax()] = c
                    members = points[new_labels == c]
                centers[c] = members.mean(axis=0)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        cost = float(np.sum((points - centers[labels]) ** 2))
        if cost < best_cost:
            best_cost, best_labels = cost, labels.copy()
    return best_labels


def _embedding(d: np.ndarray, k: int) -> np.ndarray:
    """Row-normalized eigenvectors of the symmetric normalized Laplacian."""
    off = d[~np.eye(len(d), dtype=bool)]
    sigma = float(np.median(off))
    if sigma <= 0:
        return np.zeros((len(d), k))
    affinity = np.exp(-(d ** 2) / (2.0 * sigma ** 2))
    deg = affinity.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(len(d)) - inv_sqrt[:, None] * affinity * inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(lap)
    emb = eigvecs[:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return emb / norms


def spectral_cluster(d: DistanceMatrix, k: int, seed: int = 0) -> ClusterAssignment:
    """Cluster roads from their DTW distances; deterministic for a fixed seed.

    Affinity is exp(-d^2 / (2 sigma^2)) with sigma the median off-diagonal
    distance; all-identical trends degenerate to a single cluster with a
    warning.
    """
    n = len(d.ids)
    if not 2 <= k < n:
        raise ValueError(f"k must be in [2, {n}), got {k}")
    off = d.d[~np.eye(n, dtype=bool)]
    if np.median(off) <= 0:
        warnings.warn("all trends identical; degenerate single-cluster result")
        return ClusterAssignment(k=1, label={r: 0 for r in d.ids}, degenerate=True)
    emb = _embedding(d.d, k)
    labels = _kmeans(emb, k, np.random.default_rng(seed))
    return ClusterAssignment(k=k, label={r: int(c) for r, c in zip(d.ids, labels)})


def _scatter(d: np.ndarray, labels: np.ndarray) -> float:
    """Within-cluster mean DTW distance over all same-cluster pairs."""
    total, pairs = 0.0, 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            continue
        block = d[np.ix_(members, members)]
        total += block.sum() / 2.0
        pairs += len(members) * (len(members) - 1) // 2
    return total / pairs if pairs else 0.0


def elbow_suggest(d: DistanceMatrix, k_max: int, seed: int = 0) -> tuple[int, tuple[tuple[int, float], ...]]:
    """Suggest k by maximum discrete curvature of the inertia curve.

    Inertia at k is the within-cluster mean DTW distance of the spectral
    clustering at k; k=1 (no split) anchors the curve. Ties resolve to the
    smallest k.
    """
    n = len(d.ids)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    if k_max >= n:
        raise ValueError(f"k_max must be below the road count {n}")
    curve: list[tuple[int, float]] = [(1, _scatter(d.d, np.zeros(n, dtype=int)))]
    for k in range(2, k_max + 1):
        assignment = spectral_cluster(d, k, seed=seed)
        labels = assignment.labels_for(d.ids)
        curve.append((k, _scatter(d.d, labels)))
    if k_max < 3:
        return 2, tuple(curve)
    # Curvature on the log scale so the kink at the natural cluster count
    # dominates the steep-but-smooth early descent; zeros floored to keep
    # perfectly separated fixtures well-defined.
    inertia = {k: v for k, v in curve}
    floor = max(1e-12, 1e-9 * inertia[1])
    log_inertia = {k: np.log(max(v, floor)) for k, v in curve}
    best_k, best_curv = 2, -np.inf
    for k in range(2, k_max):
        curv = log_inertia[k - 1] - 2.0 * log_inertia[k] + log_inertia[k + 1]
        if curv > best_curv + 1e-12:
            best_k, best_curv = k, curv
    return best_k, tuple(curve)


def adjusted_rand_index(a: np.ndarray, b: np.ndarray) -> float:
    """ARI between two labelings; 1.0 means identical up to label permutation."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    ua, ub = np.unique(a), np.unique(b)
    contingency = np.zeros((len(ua), len(ub)), dtype=np.int64)
    for i, ca in enumerate(ua):
        for j, cb in enumerate(ub):
            contingency[i, j] = np.sum((a == ca) & (b == cb))
    sum_comb = comb(contingency, 2).sum()
    sum_a = comb(contingency.sum(axis=1), 2).sum()
    sum_b = comb(contingency.sum(axis=0), 2).sum()
    total = comb(len(a), 2)
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_comb - expected) / (max_index - expected))
