"""Seeded K-means (k-means++ init, Lloyd iterations) and the Davies-Bouldin index."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..matrix import as_matrix
from ..search import InvalidInput


class DegenerateClustering(ValueError):
    """Two clusters share a centroid, so their separation is zero."""


@dataclass
class Labeling:
    assignments: np.ndarray
    k: int
    noise: Optional[np.ndarray] = None  # generator-only: points replaced by background

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        if self.k < 1:
            raise InvalidInput("k must be >= 1")
        if self.assignments.size and (self.assignments.min() < 0 or self.assignments.max() >= self.k):
            raise InvalidInput(f"cluster ids must lie in [0, {self.k})")

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] - 2.0 * x @ c.T + (c * c).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dists(x, x[idx]).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # All remaining points coincide with a chosen center.
            free = np.setdiff1d(np.arange(n), idx)
            nxt = int(rng.choice(free))
        idx.append(nxt)
        closest = np.minimum(closest, _sq_dists(x, x[nxt:nxt + 1]).ravel())
    return x[idx].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    k = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        new = d.argmin(1)
        counts = np.bincount(new, minlength=k)
        # Empty cluster: move its center onto the point farthest from its own.
        for j in np.flatnonzero(counts == 0):
            far = int(d[np.arange(len(x)), new].argmax())
            centers[j] = x[far]
            d = _sq_dists(x, centers)
            new = d.argmin(1)
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = x[labels == j]
            if len(members):
                centers[j] = members.mean(0)
    d = _sq_dists(x, centers)
    inertia = float(d[np.arange(len(x)), labels].sum())
    return centers, labels, inertia


def kmeans_fit(data, k: int, seed=0, max_iter: int = 300, n_init: int = 1):
    """Cluster the rows of ``data`` into ``k`` groups.

    Runs ``n_init`` seeded k-means++ starts and keeps the lowest inertia.
    Returns ``(centroids, Labeling)``.
    """
    x = as_matrix(data)
    n = x.shape[0]
    if k < 1 or k > n:
        raise InvalidInput(f"k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        centers, labels, inertia = _lloyd(x, _kmeanspp(x, k, rng), max_iter)
        if best is None or inertia < best[2]:
            best = (centers, labels, inertia)
    centers, labels, _ = best
    return centers, Labeling(labels, k)


def inertia(data, centroids, labels: Labeling) -> float:
    x = as_matrix(data)
    diff = x - np.asarray(centroids)[labels.assignments]
    return float((diff * diff).sum())


def davies_bouldin(data, labels: Labeling) -> float:
    """Mean over clusters of the worst (S_i + S_j) / d(c_i, c_j); lower is better.

    S_i is the mean Euclidean distance of cluster i's points to its centroid.
    """
    x = as_matrix(data)
    k = labels.k
    if k < 2:
        raise InvalidInput("Davies-Bouldin needs at least 2 clusters")
    if len(labels.assignments) != x.shape[0]:
        raise InvalidInput("labels do not match the number of samples")
    counts = labels.counts()
    if np.any(counts == 0):
        raise InvalidInput(f"empty cluster ids: {np.flatnonzero(counts == 0).tolist()}")
    centroids = np.stack([x[labels.assignments == j].mean(0) for j in range(k)])
    scatter = np.array([
        np.linalg.norm(x[labels.assignments == j] - centroids[j], axis=1).mean()
        for j in range(k)
    ])
    sep = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=2)
    np.fill_diagonal(sep, np.inf)
    if np.any(sep == 0):
        raise DegenerateClustering("coincident centroids")
    ratio = (scatter[:, None] + scatter[None, :]) / sep
    return float(ratio.max(1).mean())


@dataclass(frozen=True, eq=False)
class KMeansDaviesBouldin:
    """Evaluator: fit K-means at k and score it by Davies-Bouldin (minimize)."""

    data: np.ndarray
    n_init: int = 3
    max_iter: int = 300

    def __call__(self, k: int, seed: int = 0) -> float:
        # Seed per (seed, k) so scores do not depend on visit order.
        _, labels = kmeans_fit(self.data, k, seed=(seed % 2**32, k),
                               max_iter=self.max_iter, n_init=self.n_init)
        return davies_bouldin(self.data, labels)
