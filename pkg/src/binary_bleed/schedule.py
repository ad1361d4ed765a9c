"""Per-resource work lists: skip-mod chunking and balanced-BST traversal sorts."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .search import InvalidInput, KSpace


class TraversalOrder(str, enum.Enum):
    IN = "in"
    PRE = "pre"
    POST = "post"


class ScheduleVariant(str, enum.Enum):
    T1 = "T1"  # traversal sort, then contiguous blocks
    T2 = "T2"  # traversal sort, then skip-mod chunks
    T3 = "T3"  # contiguous blocks, then traversal sort each
    T4 = "T4"  # skip-mod chunks, then traversal sort each


@dataclass(frozen=True)
class ChunkAssignment:
    chunks: tuple[tuple[int, ...], ...]

    @property
    def num_resources(self) -> int:
        return len(self.chunks)

    def as_lists(self) -> list[list[int]]:
        return [list(c) for c in self.chunks]


def _values(space) -> list[int]:
    return list(space.values if isinstance(space, KSpace) else space)


def _check_resources(num_resources: int) -> None:
    if num_resources < 1:
        raise InvalidInput(f"num_resources must be >= 1, got {num_resources}")


def chunk_ks(space, num_resources: int) -> ChunkAssignment:
    """Element ``i`` goes to resource ``i % num_resources``, order preserved."""
    _check_resources(num_resources)
    ks = _values(space)
    return ChunkAssignment(tuple(tuple(ks[r::num_resources]) for r in range(num_resources)))


def block_ks(space, num_resources: int) -> ChunkAssignment:
    """Contiguous blocks; the first ``len % n`` blocks carry one extra element."""
    _check_resources(num_resources)
    ks = _values(space)
    size, extra = divmod(len(ks), num_resources)
    chunks, start = [], 0
    for r in range(num_resources):
        end = start + size + (1 if r < extra else 0)
        chunks.append(tuple(ks[start:end]))
        start = end
    return ChunkAssignment(tuple(chunks))


def traversal_sort(ks: Sequence[int], order: TraversalOrder) -> list[int]:
    """Reorder sorted ``ks`` by a traversal of the balanced BST built over them.

    The root of every subtree ``[lo, hi]`` is ``lo + ceil((hi - lo) / 2)``, so
    ``[1, 2]`` roots at 2 with 1 as its left child.

    >>> traversal_sort(list(range(1, 12)), TraversalOrder.PRE)
    [6, 3, 2, 1, 5, 4, 9, 8, 7, 11, 10]
    """
    order = TraversalOrder(order)
    ks = list(ks)
    if order is TraversalOrder.IN:
        return ks
    out: list[int] = []
    # Explicit stack: (lo, hi, emitted_children)
    stack = [(0, len(ks) - 1, False)]
    while stack:
        lo, hi, expanded = stack.pop()
        if lo > hi:
            continue
        root = lo + (hi - lo + 1) // 2
        if order is TraversalOrder.PRE:
            out.append(ks[root])
            stack.append((root + 1, hi, False))
            stack.append((lo, root - 1, False))
        elif expanded:
            out.append(ks[root])
        else:
            stack.append((lo, hi, True))
            stack.append((root + 1, hi, False))
            stack.append((lo, root - 1, False))
    return out


def build_schedule(
    space,
    num_resources: int,
    variant: ScheduleVariant = ScheduleVariant.T4,
    order: TraversalOrder = TraversalOrder.PRE,
) -> ChunkAssignment:
    variant = ScheduleVariant(variant)
    order = TraversalOrder(order)
    _check_resources(num_resources)
    ks = sorted(_values(space))

    if variant is ScheduleVariant.T1:
        return block_ks(traversal_sort(ks, order), num_resources)
    if variant is ScheduleVariant.T2:
        # Membership follows the ascending position (skip-mod), ordering
        # follows the whole-space traversal.
        owner = {k: i % num_resources for i, k in enumerate(ks)}
        chunks = [[] for _ in range(num_resources)]
        for k in traversal_sort(ks, order):
            chunks[owner[k]].append(k)
        return ChunkAssignment(tuple(tuple(c) for c in chunks))
    if variant is ScheduleVariant.T3:
        base = block_ks(ks, num_resources)
    else:
        base = chunk_ks(ks, num_resources)
    return ChunkAssignment(tuple(tuple(traversal_sort(c, order)) for c in base.chunks))
