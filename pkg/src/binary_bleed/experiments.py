"""Run configurations, method dispatch, k_true sweeps and method comparisons."""
from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import matrix
from .coordinator import ParallelResult, RankConfig, run_parallel
from .datagen import ClusterGenSpec, MatrixGenSpec, gen_gaussian_clusters, gen_nmf_matrix
from .models import KMeansDaviesBouldin, LaplacianPeak, NMFkSilhouette, SquareWave
from .schedule import ScheduleVariant, TraversalOrder
from .search import (
    Direction,
    Evaluator,
    InvalidInput,
    KSpace,
    SearchResult,
    Thresholds,
    binary_bleed_serial,
    linear_grid_search,
)

METHODS = ("standard", "vanilla", "early-stop")
EVALUATORS = ("kmeans-db", "nmfk-silhouette", "square-wave", "laplacian")
# "recursive" is the serial index-halving search; the others go through the coordinator.
ORDERS = ("recursive", "pre", "post", "in")

DEFAULT_SELECT = {"kmeans-db": 0.4, "nmfk-silhouette": 0.7, "square-wave": 0.5, "laplacian": 0.5}
DEFAULT_DIRECTION = {"kmeans-db": "minimize"}

AnyResult = Union[SearchResult, ParallelResult]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    space: str = "2:30"
    method: str = "vanilla"
    evaluator: str = "square-wave"
    select: Optional[float] = None
    stop: Optional[float] = None
    direction: Optional[str] = None
    variant: str = "T4"
    order: str = "pre"
    ranks: Optional[int] = None
    threads: Optional[int] = None
    seed: int = 0
    deterministic: bool = False
    scheduler: str = "threads"
    # synthetic scorers
    k0: Optional[int] = None
    width: float = 2.0
    # data: a file, or generated from k_true
    data: Optional[str] = None
    k_true: Optional[int] = None
    samples_per_cluster: int = 50
    dim: int = 2
    cluster_std: float = 0.5
    noise_fraction: float = 0.01
    rows: int = 120
    cols: int = 130
    noise_level: float = 0.01
    restarts: int = 8
    max_iter: int = 500
    n_init: int = 3
    # sweep / compare
    k_true_range: str = "2:30"
    repeats: int = 1
    methods: list = field(default_factory=lambda: list(METHODS))
    orders: list = field(default_factory=lambda: ["recursive", "pre", "post"])

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def parallel(self) -> bool:
        return self.ranks is not None or self.threads is not None

    @property
    def mode(self) -> str:
        return "round-robin" if self.deterministic else self.scheduler

    def rank_config(self, order: Optional[str] = None) -> RankConfig:
        return RankConfig(self.ranks or 1, self.threads or 1, self.variant, order or self.order)

    def k_space(self) -> KSpace:
        return KSpace.parse(self.space)

    def thresholds(self, method: Optional[str] = None) -> Thresholds:
        method = method or self.method
        select = self.select if self.select is not None else DEFAULT_SELECT[self.evaluator]
        direction = self.direction or DEFAULT_DIRECTION.get(self.evaluator, "maximize")
        stop = self.stop if method == "early-stop" else None
        if method == "early-stop" and stop is None:
            raise ConfigError("method early-stop requires a stop threshold (--stop)")
        return Thresholds(select, stop, Direction(direction))

    def validate(self) -> "RunConfig":
        try:
            if self.method not in METHODS:
                raise ConfigError(f"method must be one of {METHODS}")
            if self.evaluator not in EVALUATORS:
                raise ConfigError(f"evaluator must be one of {EVALUATORS}")
            for m in self.methods:
                if m not in METHODS:
                    raise ConfigError(f"unknown method {m!r}")
            for o in self.orders:
                if o not in ORDERS:
                    raise ConfigError(f"unknown order {o!r}")
            ScheduleVariant(self.variant)
            TraversalOrder(self.order)
            if self.scheduler not in ("round-robin", "random", "threads"):
                raise ConfigError(f"unknown scheduler {self.scheduler!r}")
            self.k_space()
            self.thresholds()
            if self.direction is not None:
                Direction(self.direction)
            if self.repeats < 1:
                raise ConfigError("repeats must be >= 1")
            if self.parallel:
                self.rank_config()
        except (InvalidInput, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        return self


class CachedEvaluator:
    """Memoize ``(k, seed) -> score``; safe for deterministic evaluators only."""

    def __init__(self, inner: Evaluator):
        self.inner = inner
        self.cache: dict[tuple[int, int], float] = {}
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, k: int, seed: int = 0) -> float:
        key = (k, seed)
        with self._lock:
            if key in self.cache:
                return self.cache[key]
        score = float(self.inner(k, seed))
        with self._lock:
            self.calls += 1
            self.cache[key] = score
        return score


def dataset_for(cfg: RunConfig, k_true: Optional[int], seed: int):
    """Load ``cfg.data`` or generate a dataset for the configured evaluator."""
    if cfg.data:
        return matrix.read_matrix(cfg.data)
    if k_true is None:
        raise ConfigError(f"evaluator {cfg.evaluator} needs --data or --k-true")
    if cfg.evaluator == "kmeans-db":
        spec = ClusterGenSpec(k_true, cfg.samples_per_cluster, cfg.dim, cfg.cluster_std,
                              cfg.noise_fraction, seed)
        return gen_gaussian_clusters(spec)[0]
    spec = MatrixGenSpec(k_true, cfg.rows, cfg.cols, cfg.noise_level, seed)
    return gen_nmf_matrix(spec)


def make_evaluator(cfg: RunConfig, k_true: Optional[int] = None, data_seed: int = 0) -> Evaluator:
    """Build the configured evaluator.

    Synthetic scorers use ``cfg.k0`` when given; otherwise ``k_true + 1`` so
    that the last passing k is ``k_true`` itself.
    """
    if cfg.evaluator in ("square-wave", "laplacian"):
        k0 = cfg.k0
        if k0 is None:
            if k_true is None:
                raise ConfigError(f"evaluator {cfg.evaluator} needs --k0")
            k0 = k_true + 1 if cfg.evaluator == "square-wave" else k_true
        if cfg.evaluator == "square-wave":
            return SquareWave(k0)
        return LaplacianPeak(k0, cfg.width)
    data = dataset_for(cfg, k_true, data_seed)
    if cfg.evaluator == "kmeans-db":
        return KMeansDaviesBouldin(data, n_init=cfg.n_init, max_iter=cfg.max_iter)
    return NMFkSilhouette(data, restarts=cfg.restarts, max_iter=cfg.max_iter)


def run_method(cfg: RunConfig, evaluator: Evaluator, method: str, order: str,
               seed: Optional[int] = None) -> AnyResult:
    """Run one search; ``order="recursive"`` selects the serial search."""
    space = cfg.k_space()
    seed = cfg.seed if seed is None else seed
    th = cfg.thresholds(method)
    if method == "standard":
        return linear_grid_search(space, evaluator, th, seed)
    if order == "recursive":
        return binary_bleed_serial(space, evaluator, th, seed)
    return run_parallel(space, evaluator, th, cfg.rank_config(order), seed, mode=cfg.mode)


@dataclass
class SweepRow:
    run_id: str
    k_true: int
    repeat: int
    method: str
    order: str
    k_found: Optional[int]
    visited: int
    visited_fraction: float
    correct: bool


def k_true_values(cfg: RunConfig) -> list[int]:
    return list(KSpace.parse(cfg.k_true_range).values)


def sweep(cfg: RunConfig, on_result: Optional[Callable[[SweepRow, AnyResult], None]] = None
          ) -> list[SweepRow]:
    """For every k_true and repeat, build data once and run each method/order.

    Standard runs once per dataset (order is irrelevant to it). Evaluations
    are cached per dataset, which is sound because evaluators are
    deterministic in ``(k, seed)``.
    """
    rows: list[SweepRow] = []
    for kt in k_true_values(cfg):
        for rep in range(cfg.repeats):
            data_seed = cfg.seed + 1000 * kt + rep
            ev = CachedEvaluator(make_evaluator(cfg, kt, data_seed))
            for method in cfg.methods:
                orders = ["-"] if method == "standard" else cfg.orders
                for order in orders:
                    res = run_method(cfg, ev, method, order, seed=data_seed)
                    row = SweepRow(
                        run_id=f"kt{kt}-r{rep}-{method}-{order}",
                        k_true=kt, repeat=rep, method=method, order=order,
                        k_found=res.k_optimal, visited=res.visited,
                        visited_fraction=res.visited_fraction,
                        correct=res.k_optimal == kt,
                    )
                    rows.append(row)
                    if on_result is not None:
                        on_result(row, res)
    return rows


def aggregate(rows: Sequence[SweepRow]) -> list[dict]:
    """Per (method, order): mean visited fraction, accuracy, RMSE of k_found - k_true.

    A missing k_found counts as 0 in the RMSE.
    """
    groups: dict[tuple[str, str], list[SweepRow]] = {}
    for r in rows:
        groups.setdefault((r.method, r.order), []).append(r)
    out = []
    for (method, order), rs in groups.items():
        err = np.array([(r.k_found or 0) - r.k_true for r in rs], dtype=float)
        out.append({
            "method": method,
            "order": order,
            "runs": len(rs),
            "mean_visited_fraction": float(np.mean([r.visited_fraction for r in rs])),
            "accuracy": float(np.mean([r.correct for r in rs])),
            "within_one": float(np.mean(np.abs(err) <= 1)),
            "rmse": float(math.sqrt(np.mean(err ** 2))),
        })
    return out


def compare(cfg: RunConfig) -> list[dict]:
    """Mean visited fractions of standard and {vanilla, early-stop} x {pre, post}."""
    cmp_cfg = replace(cfg, methods=list(METHODS), orders=["pre", "post"],
                      ranks=cfg.ranks or 4, threads=cfg.threads or 1)
    return aggregate(sweep(cmp_cfg))
