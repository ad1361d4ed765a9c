"""Serial Binary Bleed k search and the exhaustive grid-search baseline.

The search walks a sorted candidate space in binary-search order, but instead
of stopping at the first hit it keeps going and uses every threshold-passing
score to prune smaller k (and, when a stop bound is configured, every
stop-crossing score to prune larger k).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

Evaluator = Callable[[int, int], float]
"""Deterministic score function ``(k, seed) -> score``; the dataset is bound in."""


class InvalidInput(ValueError):
    pass


class SearchAborted(RuntimeError):
    """Raised when the evaluator fails; carries the records gathered so far."""

    def __init__(self, k: int, records: Sequence["ScoreRecord"], cause: BaseException):
        super().__init__(f"evaluator failed at k={k}: {cause!r}")
        self.k = k
        self.records = list(records)
        self.cause = cause


class Direction(str, enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class KSpace:
    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise InvalidInput("k space is empty")
        if vals[0] < 1:
            raise InvalidInput("k values must be >= 1")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidInput("k space must be strictly ascending")

    @classmethod
    def range(cls, lo: int, hi: int) -> "KSpace":
        """Inclusive integer range ``lo..hi``."""
        return cls(tuple(range(lo, hi + 1)))

    @classmethod
    def parse(cls, text: str) -> "KSpace":
        """Parse ``"a:b"`` (inclusive) or a comma separated list."""
        text = text.strip()
        try:
            if ":" in text:
                lo, hi = text.split(":")
                return cls.range(int(lo), int(hi))
            return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))
        except ValueError as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"cannot parse k space {text!r}") from exc

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class Thresholds:
    select: float
    stop: Optional[float] = None
    direction: Direction = Direction.MAXIMIZE

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.stop is None:
            return
        if self.direction is Direction.MAXIMIZE and self.stop > self.select:
            raise InvalidInput("under maximize the stop bound must be <= select")
        if self.direction is Direction.MINIMIZE and self.stop < self.select:
            raise InvalidInput("under minimize the stop bound must be >= select")

    def passes_select(self, score: float) -> bool:
        if self.direction is Direction.MAXIMIZE:
            return score >= self.select
        return score <= self.select

    def crosses_stop(self, score: float) -> bool:
        if self.stop is None:
            return False
        if self.direction is Direction.MAXIMIZE:
            return score <= self.stop
        return score >= self.stop


@dataclass(frozen=True)
class Bounds:
    """Open pruning window; only candidates strictly inside get evaluated."""

    k_min: float = -math.inf
    k_max: float = math.inf

    def admits(self, k: int) -> bool:
        return self.k_min < k < self.k_max


@dataclass(frozen=True)
class ScoreRecord:
    k: int
    score: float
    visit_index: int


@dataclass
class SearchResult:
    k_optimal: Optional[int]
    records: list[ScoreRecord]
    space_size: int
    pruned: frozenset[int]
    bounds: Bounds = field(default_factory=Bounds)

    @property
    def visited(self) -> int:
        return len(self.records)

    @property
    def visited_fraction(self) -> float:
        return len(self.records) / self.space_size

    def to_dict(self) -> dict:
        return {
            "k_optimal": self.k_optimal,
            "visited": self.visited,
            "visited_fraction": self.visited_fraction,
            "space_size": self.space_size,
            "pruned": sorted(self.pruned),
            "records": [
                {"k": r.k, "score": r.score, "visit_index": r.visit_index}
                for r in self.records
            ],
        }


def update_bounds(bounds: Bounds, k: int, score: float, thresholds: Thresholds) -> Bounds:
    """Apply the select/stop rules for one evaluated ``k``; never relaxes a bound."""
    k_min, k_max = bounds.k_min, bounds.k_max
    if thresholds.passes_select(score):
        k_min = max(k_min, k)
    if thresholds.crosses_stop(score):
        k_max = min(k_max, k)
    return Bounds(k_min, k_max)


def select_optimal(records: Iterable[ScoreRecord], thresholds: Thresholds) -> Optional[int]:
    # Largest passing k in both directions; direction only flips the score test.
    passing = [r.k for r in records if thresholds.passes_select(r.score)]
    return max(passing) if passing else None


def _evaluate(evaluator: Evaluator, k: int, seed: int, records: list[ScoreRecord]) -> float:
    try:
        return float(evaluator(k, seed))
    except Exception as exc:
        raise SearchAborted(k, records, exc) from exc


def binary_bleed_serial(
    space: KSpace,
    evaluator: Evaluator,
    thresholds: Thresholds,
    seed: int = 0,
    on_bounds: Optional[Callable[[Bounds], None]] = None,
) -> SearchResult:
    """Single-resource Binary Bleed.

    Evaluates the floor midpoint of the current index range when its k lies
    strictly inside the pruning window, updates the window, then recurses into
    the right half before the left half. A half is skipped outright once its
    whole k-range sits outside the window.

    ``on_bounds`` is called with the window after every evaluation, which is
    handy for checking monotonicity.
    """
    if not isinstance(space, KSpace):
        space = KSpace(tuple(space))
    ks = space.values
    records: list[ScoreRecord] = []
    seen: set[int] = set()
    bounds = Bounds()

    def recurse(lo: int, hi: int) -> None:
        nonlocal bounds
        if lo > hi:
            return
        mid = lo + (hi - lo) // 2
        k = ks[mid]
        if bounds.admits(k) and k not in seen:
            score = _evaluate(evaluator, k, seed, records)
            seen.add(k)
            records.append(ScoreRecord(k, score, len(records)))
            bounds = update_bounds(bounds, k, score, thresholds)
            if on_bounds is not None:
                on_bounds(bounds)
        # ks is ascending, so a half is dead iff its extreme k is outside.
        if mid + 1 <= hi and ks[mid + 1] < bounds.k_max and ks[hi] > bounds.k_min:
            recurse(mid + 1, hi)
        if lo <= mid - 1 and ks[mid - 1] > bounds.k_min and ks[lo] < bounds.k_max:
            recurse(lo, mid - 1)

    recurse(0, len(ks) - 1)
    visited = {r.k for r in records}
    return SearchResult(
        k_optimal=select_optimal(records, thresholds),
        records=records,
        space_size=len(ks),
        pruned=frozenset(k for k in ks if k not in visited),
        bounds=bounds,
    )


def linear_grid_search(
    space: KSpace, evaluator: Evaluator, thresholds: Thresholds, seed: int = 0
) -> SearchResult:
    """Exhaustive baseline: score every k in ascending order."""
    if not isinstance(space, KSpace):
        space = KSpace(tuple(space))
    records: list[ScoreRecord] = []
    for k in space:
        score = _evaluate(evaluator, k, seed, records)
        records.append(ScoreRecord(k, score, len(records)))
    return SearchResult(
        k_optimal=select_optimal(records, thresholds),
        records=records,
        space_size=len(space),
        pruned=frozenset(),
    )
