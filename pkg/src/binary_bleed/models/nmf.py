"""Multiplicative-update NMF with seeded restarts, and NMFk stability scoring."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import silhouette_samples

from ..matrix import as_matrix
from ..search import InvalidInput

_EPS = 1e-12


@dataclass
class NMFFit:
    W: np.ndarray
    H: np.ndarray
    error: float  # relative Frobenius error ||X - WH|| / ||X||
    n_iter: int
    history: list[float] = field(default_factory=list)


def _rel_error(x: np.ndarray, w: np.ndarray, h: np.ndarray, norm_x: float) -> float:
    return float(np.linalg.norm(x - w @ h) / norm_x)


def nmf_single(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 500,
               tol: float = 1e-6, track: bool = False) -> NMFFit:
    """One Lee-Seung factorization from a random nonnegative start.

    Stops when the relative error changes by less than ``tol`` between
    iterations or after ``max_iter`` sweeps.
    """
    rows, cols = x.shape
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        return NMFFit(np.zeros((rows, k)), np.zeros((k, cols)), 0.0, 0, [0.0] if track else [])
    scale = np.sqrt(x.mean() / k)
    w = rng.random((rows, k)) * scale + _EPS
    h = rng.random((k, cols)) * scale + _EPS
    err = _rel_error(x, w, h, norm_x)
    history = [err] if track else []
    it = 0
    for it in range(1, max_iter + 1):
        h *= (w.T @ x) / (w.T @ w @ h + _EPS)
        w *= (x @ h.T) / (w @ (h @ h.T) + _EPS)
        new = _rel_error(x, w, h, norm_x)
        if track:
            history.append(new)
        converged = abs(err - new) < tol
        err = new
        if converged:
            break
    return NMFFit(w, h, err, it, history)


def nmf_fit(data, k: int, restarts: int = 8, seed=0, max_iter: int = 500,
            tol: float = 1e-6, track: bool = False) -> list[NMFFit]:
    """``restarts`` independent factorizations of ``data`` at rank ``k``."""
    x = as_matrix(data, nonnegative=True)
    if not 1 <= k <= min(x.shape):
        raise InvalidInput(f"k={k} must lie in [1, {min(x.shape)}]")
    if restarts < 1:
        raise InvalidInput("restarts must be >= 1")
    ss = np.random.SeedSequence(seed)
    return [
        nmf_single(x, k, np.random.default_rng(child), max_iter, tol, track)
        for child in ss.spawn(restarts)
    ]


def _unit_columns(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0, keepdims=True)
    return m / np.where(norms > 0, norms, 1.0)


def _greedy_match(ref: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """perm[j] = column of ``cand`` matched to column j of ``ref`` (max cosine first)."""
    sim = ref.T @ cand
    k = sim.shape[0]
    perm = np.empty(k, dtype=np.int64)
    free_r, free_c = set(range(k)), set(range(k))
    order = np.dstack(np.unravel_index(np.argsort(-sim, axis=None), sim.shape))[0]
    for i, j in order:
        if i in free_r and j in free_c:
            perm[i] = j
            free_r.remove(i)
            free_c.remove(j)
            if not free_r:
                break
    return perm


def align_ensemble(ensemble: list[NMFFit]) -> tuple[np.ndarray, np.ndarray]:
    """Match factor columns across restarts.

    Returns unit-norm W patterns with shape ``(restarts, rows, k)`` and unit-norm
    H rows with shape ``(restarts, k, cols)``, both permuted so index j refers
    to the same latent feature in every restart. Restarts are matched to the
    first one, then re-matched once to the mean pattern.
    """
    ws = [_unit_columns(f.W) for f in ensemble]
    hs = [_unit_columns(f.H.T).T for f in ensemble]
    ref = ws[0]
    for _ in range(2):
        perms = [_greedy_match(ref, w) for w in ws]
        ref = _unit_columns(np.mean([w[:, p] for w, p in zip(ws, perms)], axis=0))
    w_al = np.stack([w[:, p] for w, p in zip(ws, perms)])
    h_al = np.stack([h[p, :] for h, p in zip(hs, perms)])
    return w_al, h_al


def _mean_silhouette(points: np.ndarray, labels: np.ndarray, metric: str) -> float:
    s = silhouette_samples(points, labels, metric=metric)
    return float(np.mean([s[labels == j].mean() for j in np.unique(labels)]))


def nmfk_scores(ensemble: list[NMFFit]) -> tuple[float, float]:
    """(W-pattern silhouette, H-row silhouette) of an aligned ensemble."""
    if len(ensemble) < 2:
        raise InvalidInput("stability scoring needs at least 2 restarts")
    w_al, h_al = align_ensemble(ensemble)
    restarts, _, k = w_al.shape
    if k == 1:
        # One cluster: silhouette is undefined, fall back to mean cosine to the centroid.
        def agreement(vecs):
            centre = vecs.mean(0)
            centre /= max(np.linalg.norm(centre), _EPS)
            return float((vecs @ centre).mean())
        return agreement(w_al[:, :, 0]), agreement(h_al[:, 0, :])
    labels = np.tile(np.arange(k), restarts)
    w_pts = w_al.transpose(0, 2, 1).reshape(restarts * k, -1)
    h_pts = h_al.reshape(restarts * k, -1)
    return (_mean_silhouette(w_pts, labels, "cosine"),
            _mean_silhouette(h_pts, labels, "euclidean"))


def nmfk_silhouette(ensemble: list[NMFFit]) -> float:
    """Stability of an NMF ensemble: the lower of the W and H silhouettes."""
    return min(nmfk_scores(ensemble))


@dataclass(frozen=True, eq=False)
class NMFkSilhouette:
    """Evaluator: NMF ensemble at k, scored by :func:`nmfk_silhouette` (maximize)."""

    data: np.ndarray
    restarts: int = 8
    max_iter: int = 500
    tol: float = 1e-6

    def __call__(self, k: int, seed: int = 0) -> float:
        ens = nmf_fit(self.data, k, self.restarts, seed=(seed % 2**32, k),
                      max_iter=self.max_iter, tol=self.tol)
        return nmfk_silhouette(ens)
