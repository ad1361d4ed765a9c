"""Seeded synthetic data with a known k_true."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import matrix
from .models.kmeans import Labeling
from .search import InvalidInput

MIN_SEPARATION = 6.0  # in units of cluster_std


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClusterGenSpec:
    k_true: int
    samples_per_cluster: int = 100
    dim: int = 2
    cluster_std: float = 0.5
    noise_fraction: float = 0.05
    seed: int = 0
    domain: Optional[float] = None  # half-width of the center box; None = sized from k_true

    def __post_init__(self):
        if self.k_true < 1 or self.samples_per_cluster < 1 or self.dim < 1:
            raise InvalidInput("k_true, samples_per_cluster and dim must be >= 1")
        if self.cluster_std <= 0:
            raise InvalidInput("cluster_std must be > 0")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidInput("noise_fraction must lie in [0, 1)")
        if self.domain is not None and self.domain <= 0:
            raise InvalidInput("domain must be > 0")

    def half_width(self) -> float:
        if self.domain is not None:
            return self.domain
        sep = MIN_SEPARATION * self.cluster_std
        # Room for ~2x the packing volume so rejection sampling succeeds quickly.
        return 0.5 * sep * ((2.0 * self.k_true) ** (1.0 / self.dim) + 1.0)


@dataclass(frozen=True)
class MatrixGenSpec:
    k_true: int
    rows: int = 200
    cols: int = 220
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidInput("rows and cols must be >= 1")
        if not 1 <= self.k_true <= min(self.rows, self.cols):
            raise InvalidInput("k_true must lie in [1, min(rows, cols)]")
        if self.noise_level < 0:
            raise InvalidInput("noise_level must be >= 0")


def _draw_centers(spec: ClusterGenSpec, rng: np.random.Generator, max_tries: int) -> np.ndarray:
    half = spec.half_width()
    sep = MIN_SEPARATION * spec.cluster_std
    centers: list[np.ndarray] = []
    tries = 0
    while len(centers) < spec.k_true:
        tries += 1
        if tries > max_tries:
            raise GenerationError(
                f"could not place {spec.k_true} centers {sep:g} apart in a box of "
                f"half-width {half:g} (dim={spec.dim}); pass a larger domain"
            )
        c = rng.uniform(-half, half, spec.dim)
        if all(np.linalg.norm(c - o) >= sep for o in centers):
            centers.append(c)
    return np.array(centers)


def gen_gaussian_clusters(spec: ClusterGenSpec, max_tries: int = 100_000):
    """Isotropic Gaussian blobs plus uniform background noise.

    Returns ``(data, true_labels)``. Points replaced by background noise keep
    their generator label and are flagged in ``true_labels.noise``.
    """
    rng = np.random.default_rng(spec.seed)
    centers = _draw_centers(spec, rng, max_tries)
    labels = np.repeat(np.arange(spec.k_true), spec.samples_per_cluster)
    data = centers[labels] + rng.normal(0.0, spec.cluster_std, (labels.size, spec.dim))
    noise = np.zeros(labels.size, dtype=bool)
    n_noise = int(round(spec.noise_fraction * labels.size))
    if n_noise:
        idx = rng.choice(labels.size, n_noise, replace=False)
        half = spec.half_width() + 3 * spec.cluster_std
        data[idx] = rng.uniform(-half, half, (n_noise, spec.dim))
        noise[idx] = True
    return data, Labeling(labels, spec.k_true, noise=noise)


def gen_nmf_matrix(spec: MatrixGenSpec) -> np.ndarray:
    """``|N(0,1)| @ |N(0,1)|`` of inner rank k_true plus clipped Gaussian noise."""
    rng = np.random.default_rng(spec.seed)
    w = np.abs(rng.standard_normal((spec.rows, spec.k_true)))
    h = np.abs(rng.standard_normal((spec.k_true, spec.cols)))
    x = w @ h
    if spec.noise_level > 0:
        x = np.clip(x + rng.normal(0.0, spec.noise_level, x.shape), 0.0, None)
    return x


def write_dataset(out_dir, name: str, data, spec, fmt: str = "bbmx",
                  labels: Optional[Labeling] = None) -> Path:
    """Write ``data`` plus a ``<name>.json`` manifest; returns the matrix path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "bbmx":
        path = out_dir / f"{name}.bbmx"
        matrix.write_bbmx(path, data)
    elif fmt == "csv":
        path = out_dir / f"{name}.csv"
        matrix.write_csv(path, data)
    else:
        raise InvalidInput(f"unknown format {fmt!r}")
    manifest = {
        "schema": "binary_bleed.dataset/1",
        "kind": type(spec).__name__,
        "k_true": spec.k_true,
        "seed": spec.seed,
        "spec": asdict(spec),
        "file": path.name,
        "shape": list(np.shape(data)),
    }
    if labels is not None:
        manifest["labels"] = labels.assignments.tolist()
        if labels.noise is not None:
            manifest["noise"] = np.flatnonzero(labels.noise).tolist()
    (out_dir / f"{name}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
