"""Binary Bleed: pruned k search for clustering and factorization model selection."""
from .coordinator import ParallelResult, RankConfig, run_parallel
from .schedule import ScheduleVariant, TraversalOrder, build_schedule, chunk_ks, traversal_sort
from .search import (
    Bounds,
    Direction,
    InvalidInput,
    KSpace,
    ScoreRecord,
    SearchAborted,
    SearchResult,
    Thresholds,
    binary_bleed_serial,
    linear_grid_search,
    update_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "Bounds", "Direction", "InvalidInput", "KSpace", "ParallelResult", "RankConfig",
    "ScheduleVariant", "ScoreRecord", "SearchAborted", "SearchResult", "Thresholds",
    "TraversalOrder", "binary_bleed_serial", "build_schedule", "chunk_ks",
    "linear_grid_search", "run_parallel", "traversal_sort", "update_bounds",
]
