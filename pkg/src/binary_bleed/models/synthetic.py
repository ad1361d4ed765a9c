"""Analytic score shapes used to exercise the search deterministically."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..search import InvalidInput


@dataclass(frozen=True)
class SquareWaveSpec:
    k0: int

    def __post_init__(self):
        if self.k0 < 1:
            raise InvalidInput("k0 must be >= 1")


def square_wave_score(k: int, spec: SquareWaveSpec) -> float:
    """``(sgn(k0 - k) + 1) / 2`` with sgn(0) taken as -1: 1 below k0, else 0."""
    return 1.0 if k < spec.k0 else 0.0


def laplacian_peak_score(k: int, k0: int, width: float) -> float:
    if width <= 0:
        raise InvalidInput("width must be > 0")
    return math.exp(-abs(k - k0) / width)


@dataclass(frozen=True)
class SquareWave:
    k0: int

    def __call__(self, k: int, seed: int = 0) -> float:
        return square_wave_score(k, SquareWaveSpec(self.k0))


@dataclass(frozen=True)
class LaplacianPeak:
    k0: int
    width: float = 1.0

    def __call__(self, k: int, seed: int = 0) -> float:
        return laplacian_peak_score(k, self.k0, self.width)


@dataclass(frozen=True)
class TableScore:
    """Scores looked up from a dict, with a fallback for unlisted k."""

    scores: tuple[tuple[int, float], ...]
    default: float = 0.0

    @classmethod
    def of(cls, scores: dict[int, float], default: float = 0.0) -> "TableScore":
        return cls(tuple(sorted(scores.items())), default)

    def __call__(self, k: int, seed: int = 0) -> float:
        return dict(self.scores).get(k, self.default)
