"""Multi-rank, multi-thread Binary Bleed over an in-process rank network.

Every rank owns a chunk of the k space (see :mod:`binary_bleed.schedule`),
splits it round-robin over its worker threads, and keeps one shared
``OptimalCell``. A worker that sees a threshold-passing score raises the cell
and broadcasts the k to the other ranks. Before each evaluation a worker drains
the rank's inbox and skips any k already beaten by the cell.

Three execution modes are supported:

``"round-robin"``
    Deterministic lock-step simulation. Each round delivers all in-flight
    messages, then every worker takes one action (start an evaluation, or
    finish the one it started last round).
``"random"``
    Seeded random interleaving of the same actions plus individual message
    deliveries. Used to stress the protocol invariants.
``"threads"``
    Free-running OS threads with immediate delivery. Only agreement and the
    final answer are reproducible.
"""
from __future__ import annotations

import json
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .schedule import ScheduleVariant, TraversalOrder, build_schedule
from .search import (
    Evaluator,
    InvalidInput,
    KSpace,
    ScoreRecord,
    Thresholds,
    select_optimal,
)

SELECT = "select"
STOP = "stop"
MODES = ("round-robin", "random", "threads")

Resource = tuple[int, int]  # (rank, thread)


@dataclass(frozen=True)
class RankConfig:
    num_ranks: int = 1
    threads_per_rank: int = 1
    variant: ScheduleVariant = ScheduleVariant.T4
    order: TraversalOrder = TraversalOrder.PRE

    def __post_init__(self):
        object.__setattr__(self, "variant", ScheduleVariant(self.variant))
        object.__setattr__(self, "order", TraversalOrder(self.order))
        if self.num_ranks < 1 or self.threads_per_rank < 1:
            raise InvalidInput("num_ranks and threads_per_rank must be >= 1")


@dataclass(frozen=True)
class KAnnouncement:
    k: int
    sender: int
    kind: str = SELECT


class OptimalCell:
    """Per-rank best-known k plus the tightest known stop bound.

    ``value`` only ever grows and ``stop`` only ever shrinks. Callers hold
    ``lock`` around read-modify-write sequences.
    """

    def __init__(self):
        self.value: Optional[int] = None
        self.stop: Optional[int] = None
        self.lock = threading.Lock()

    def offer(self, k: int) -> bool:
        if self.value is None or k > self.value:
            self.value = k
            return True
        return False

    def offer_stop(self, k: int) -> bool:
        if self.stop is None or k < self.stop:
            self.stop = k
            return True
        return False

    def prunes(self, k: int) -> Optional[str]:
        """Reason ``k`` must be skipped, or None if it is still live."""
        if self.value is not None and self.value > k:
            return f"k_optimal:{self.value}"
        if self.stop is not None and k > self.stop:
            return f"stop:{self.stop}"
        return None


class Network:
    """Reliable per-pair FIFO channels feeding per-rank inboxes.

    With ``immediate=True`` a send lands straight in the receiver's inbox;
    otherwise it waits in its channel until :meth:`deliver` is called.
    """

    def __init__(self, num_ranks: int, immediate: bool = False):
        self.num_ranks = num_ranks
        self.immediate = immediate
        self.channels: dict[tuple[int, int], deque] = {}
        self.inboxes = [deque() for _ in range(num_ranks)]
        self.lock = threading.Lock()
        self.on_deliver = None

    def send(self, msg: KAnnouncement, dst: int) -> None:
        with self.lock:
            if self.immediate:
                self.inboxes[dst].append(msg)
            else:
                self.channels.setdefault((msg.sender, dst), deque()).append(msg)

    def pending(self) -> list[tuple[int, int]]:
        with self.lock:
            return sorted(key for key, q in self.channels.items() if q)

    def deliver(self, src: int, dst: int) -> KAnnouncement:
        with self.lock:
            msg = self.channels[(src, dst)].popleft()
            self.inboxes[dst].append(msg)
        if self.on_deliver is not None:
            self.on_deliver(msg, dst)
        return msg

    def drain(self, rank: int, kind: str) -> list[KAnnouncement]:
        with self.lock:
            box = self.inboxes[rank]
            taken = [m for m in box if m.kind == kind]
            if taken:
                kept = [m for m in box if m.kind != kind]
                box.clear()
                box.extend(kept)
            return taken

    def has_mail(self, rank: int) -> bool:
        with self.lock:
            return bool(self.inboxes[rank])

    def idle(self) -> bool:
        with self.lock:
            return not any(self.channels.values()) and not any(self.inboxes)


def broadcast_k(k: int, sender: int, network: Network, kind: str = SELECT) -> list[int]:
    """Send ``k`` to every rank except ``sender``; returns the recipients."""
    targets = [n for n in range(network.num_ranks) if n != sender]
    for n in targets:
        network.send(KAnnouncement(k, sender, kind), n)
    return targets


def receive_k_check(
    local: Optional[int], network: Network, rank_id: int, kind: str = SELECT
) -> Optional[int]:
    """Drain ``rank_id``'s pending announcements of ``kind`` and merge them.

    Select announcements merge by max, stop announcements by min. When the
    local value strictly dominates a received one, the local value is sent
    back to that sender so it can catch up.
    """
    better = (lambda a, b: a > b) if kind == SELECT else (lambda a, b: a < b)
    for msg in network.drain(rank_id, kind):
        if local is None or better(msg.k, local):
            local = msg.k
        elif better(local, msg.k):
            network.send(KAnnouncement(local, rank_id, kind), msg.sender)
    return local


@dataclass
class ParallelResult:
    k_optimal: Optional[int]
    per_resource_records: dict[Resource, list[ScoreRecord]]
    space_size: int
    skipped: dict[Resource, list[tuple[int, str]]] = field(default_factory=dict)
    rank_cells: list[Optional[int]] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    @property
    def records(self) -> list[ScoreRecord]:
        out = [r for recs in self.per_resource_records.values() for r in recs]
        return sorted(out, key=lambda r: r.visit_index)

    @property
    def total_visited(self) -> int:
        return sum(len(v) for v in self.per_resource_records.values())

    @property
    def visited(self) -> int:
        return self.total_visited

    @property
    def visited_fraction(self) -> float:
        return self.total_visited / self.space_size

    @property
    def pruned(self) -> frozenset[int]:
        return frozenset(k for v in self.skipped.values() for k, _ in v)

    def resource_of(self) -> dict[int, Resource]:
        return {r.k: res for res, recs in self.per_resource_records.items() for r in recs}

    def to_dict(self) -> dict:
        return {
            "k_optimal": self.k_optimal,
            "visited": self.visited,
            "visited_fraction": self.visited_fraction,
            "space_size": self.space_size,
            "pruned": sorted(self.pruned),
            "rank_cells": self.rank_cells,
            "records": [
                {"k": r.k, "score": r.score, "visit_index": r.visit_index,
                 "resource": f"{res[0]}:{res[1]}"}
                for res, recs in sorted(self.per_resource_records.items())
                for r in recs
            ],
        }


class ParallelAborted(RuntimeError):
    def __init__(self, k: int, partial: ParallelResult, cause: BaseException):
        super().__init__(f"evaluator failed at k={k}: {cause!r}")
        self.k = k
        self.partial = partial
        self.cause = cause


class _Worker:
    __slots__ = ("rank", "thread", "queue", "running")

    def __init__(self, rank: int, thread: int, ks: Iterable[int]):
        self.rank = rank
        self.thread = thread
        self.queue = deque(ks)
        self.running: Optional[tuple[int, float]] = None

    @property
    def busy(self) -> bool:
        return self.running is not None or bool(self.queue)


def _nolog(event, rank, thread, k, **extra) -> None:
    pass


@dataclass(frozen=True)
class StepOutcome:
    k: int
    evaluated: bool
    score: Optional[float] = None
    skipped_by: Optional[str] = None


def sync_cell(cell: OptimalCell, network: Network, rank_id: int,
              thread: Optional[int] = None, log=_nolog) -> None:
    """Merge the rank inbox into ``cell``; re-broadcast if the cell is ahead."""
    for kind in (SELECT, STOP):
        with cell.lock:
            local = cell.value if kind == SELECT else cell.stop
        pending = network.has_mail(rank_id)
        received = receive_k_check(local, network, rank_id, kind)
        if pending and received != local:
            log("receive", rank_id, thread, received, kind=kind)
        report = False
        with cell.lock:
            current = cell.value if kind == SELECT else cell.stop
            if received is not None and received != current:
                changed = cell.offer(received) if kind == SELECT else cell.offer_stop(received)
                if changed:
                    log("cell_update", rank_id, thread, received, kind=kind,
                        cell_value=cell.value, stop_value=cell.stop)
                else:
                    # Another thread moved the cell past what we received.
                    report = True
            current = cell.value if kind == SELECT else cell.stop
        if report:
            targets = broadcast_k(current, rank_id, network, kind)
            log("broadcast", rank_id, thread, current, kind=kind, targets=targets)


def prune_check(k: int, cell: OptimalCell, network: Network, rank_id: int,
                thread: Optional[int] = None, log=_nolog) -> Optional[str]:
    """Sync with the network, then return why ``k`` is pruned (None if live)."""
    sync_cell(cell, network, rank_id, thread, log)
    with cell.lock:
        reason = cell.prunes(k)
        value = cell.value
    if reason is not None:
        log("skip", rank_id, thread, k, cell_value=value, reason=reason)
    else:
        log("eval_start", rank_id, thread, k, cell_value=value)
    return reason


def report_score(k: int, score: float, cell: OptimalCell, thresholds: Thresholds,
                 network: Network, rank_id: int, thread: Optional[int] = None,
                 log=_nolog) -> None:
    """Fold a finished evaluation into the cell and announce improvements."""
    log("eval_finish", rank_id, thread, k, score=score)
    for kind, hit in ((SELECT, thresholds.passes_select(score)),
                      (STOP, thresholds.crosses_stop(score))):
        if not hit:
            continue
        with cell.lock:
            report = cell.offer(k) if kind == SELECT else cell.offer_stop(k)
            if report:
                log("cell_update", rank_id, thread, k, kind=kind,
                    cell_value=cell.value, stop_value=cell.stop)
        if report:
            targets = broadcast_k(k, rank_id, network, kind)
            log("broadcast", rank_id, thread, k, kind=kind, targets=targets)


def worker_step(k: int, cell: OptimalCell, evaluator: Evaluator, thresholds: Thresholds,
                rank_id: int, network: Network, seed: int = 0,
                thread: Optional[int] = None, log=_nolog) -> StepOutcome:
    """Process one scheduled k: sync, maybe skip, otherwise evaluate and report."""
    reason = prune_check(k, cell, network, rank_id, thread, log)
    if reason is not None:
        return StepOutcome(k, False, skipped_by=reason)
    score = float(evaluator(k, seed))
    report_score(k, score, cell, thresholds, network, rank_id, thread, log)
    return StepOutcome(k, True, score=score)


class _Run:
    """Shared state of one parallel search."""

    def __init__(self, space: KSpace, evaluator: Evaluator, thresholds: Thresholds,
                 config: RankConfig, seed: int, immediate: bool):
        self.space = space
        self.evaluator = evaluator
        self.thresholds = thresholds
        self.config = config
        self.seed = seed
        self.network = Network(config.num_ranks, immediate=immediate)
        self.network.on_deliver = self._on_deliver
        self.cells = [OptimalCell() for _ in range(config.num_ranks)]
        self.records: dict[Resource, list[ScoreRecord]] = {}
        self.skipped: dict[Resource, list[tuple[int, str]]] = {}
        self.events: list[dict] = []
        self._log_lock = threading.Lock()
        self._visits = 0
        self.failure: Optional[tuple[int, BaseException]] = None

        schedule = build_schedule(space, config.num_ranks, config.variant, config.order)
        t = config.threads_per_rank
        self.workers: list[_Worker] = []
        for rank, chunk in enumerate(schedule.chunks):
            for thread in range(t):
                res = (rank, thread)
                self.records[res] = []
                self.skipped[res] = []
                self.workers.append(_Worker(rank, thread, chunk[thread::t]))

    def log(self, event: str, rank: int, thread: Optional[int], k: Optional[int], **extra) -> None:
        with self._log_lock:
            rec = {"event": event, "rank": rank, "thread": thread, "k": k}
            rec.update(extra)
            rec["logical_time"] = len(self.events)
            self.events.append(rec)

    def _on_deliver(self, msg: KAnnouncement, dst: int) -> None:
        self.log("deliver", dst, None, msg.k, sender=msg.sender, kind=msg.kind)

    def begin(self, w: _Worker) -> bool:
        """Pop ks until one survives the prune check, then evaluate it.

        The score is held on the worker until :meth:`complete`, so other
        workers can interleave between start and finish. Returns False when
        the queue ran dry without starting anything.
        """
        res = (w.rank, w.thread)
        cell = self.cells[w.rank]
        while w.queue:
            k = w.queue.popleft()
            reason = prune_check(k, cell, self.network, w.rank, w.thread, self.log)
            if reason is not None:
                self.skipped[res].append((k, reason))
                continue
            try:
                score = float(self.evaluator(k, self.seed))
            except Exception as exc:
                self.failure = (k, exc)
                w.queue.clear()
                return False
            w.running = (k, score)
            return True
        return False

    def complete(self, w: _Worker) -> None:
        k, score = w.running
        w.running = None
        with self._log_lock:
            visit = self._visits
            self._visits += 1
        self.records[(w.rank, w.thread)].append(ScoreRecord(k, score, visit))
        report_score(k, score, self.cells[w.rank], self.thresholds, self.network,
                     w.rank, w.thread, self.log)

    def finalize_rank(self, rank: int) -> None:
        sync_cell(self.cells[rank], self.network, rank, None, self.log)

    def result(self) -> ParallelResult:
        recs = {res: sorted(v, key=lambda r: r.visit_index) for res, v in self.records.items()}
        flat = [r for v in recs.values() for r in v]
        return ParallelResult(
            k_optimal=select_optimal(flat, self.thresholds),
            per_resource_records=recs,
            space_size=len(self.space),
            skipped={res: list(v) for res, v in self.skipped.items()},
            rank_cells=[c.value for c in self.cells],
            events=self.events,
        )


def _drive_round_robin(run: _Run) -> None:
    while True:
        for src, dst in run.network.pending():
            while run.network.channels[(src, dst)]:
                run.network.deliver(src, dst)
        progressed = False
        for w in run.workers:
            if run.failure:
                return
            if w.running is not None:
                run.complete(w)
                progressed = True
            elif w.queue:
                run.begin(w)
                progressed = True
        if progressed:
            continue
        for rank in range(run.config.num_ranks):
            if run.network.has_mail(rank):
                run.finalize_rank(rank)
        if run.network.idle():
            return


def _drive_random(run: _Run, rng: random.Random) -> None:
    by_rank: dict[int, list[_Worker]] = {}
    for w in run.workers:
        by_rank.setdefault(w.rank, []).append(w)
    while not run.failure:
        actions: list[tuple] = [("deliver", src, dst) for src, dst in run.network.pending()]
        actions += [("step", w) for w in run.workers if w.busy]
        actions += [
            ("drain", rank) for rank, ws in sorted(by_rank.items())
            if run.network.has_mail(rank) and not any(w.busy for w in ws)
        ]
        if not actions:
            return
        act = rng.choice(actions)
        if act[0] == "deliver":
            run.network.deliver(act[1], act[2])
        elif act[0] == "drain":
            run.finalize_rank(act[1])
        else:
            w = act[1]
            if w.running is not None:
                run.complete(w)
            else:
                run.begin(w)


def _drive_threads(run: _Run) -> None:
    def loop(w: _Worker) -> None:
        while w.queue and not run.failure:
            if run.begin(w):
                run.complete(w)

    threads = [threading.Thread(target=loop, args=(w,), daemon=True) for w in run.workers]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if run.failure:
        return
    while not run.network.idle():
        for rank in range(run.config.num_ranks):
            run.finalize_rank(rank)


def run_parallel(
    space: KSpace,
    evaluator: Evaluator,
    thresholds: Thresholds,
    config: RankConfig = RankConfig(),
    seed: int = 0,
    mode: str = "round-robin",
    schedule_seed: int = 0,
) -> ParallelResult:
    """Search ``space`` with ``config.num_ranks`` ranks of ``threads_per_rank`` workers.

    ``schedule_seed`` only matters in ``"random"`` mode, where it fixes the
    interleaving; ``seed`` is passed to the evaluator.
    """
    if not isinstance(space, KSpace):
        space = KSpace(tuple(space))
    if mode not in MODES:
        raise InvalidInput(f"unknown mode {mode!r}; expected one of {MODES}")
    run = _Run(space, evaluator, thresholds, config, seed, immediate=(mode == "threads"))
    if mode == "round-robin":
        _drive_round_robin(run)
    elif mode == "random":
        _drive_random(run, random.Random(schedule_seed))
    else:
        _drive_threads(run)
    result = run.result()
    if run.failure:
        k, exc = run.failure
        raise ParallelAborted(k, result, exc) from exc
    return result


def write_events(events: Iterable[dict], fh: IO[str]) -> None:
    """Write the event log as JSON lines."""
    for ev in events:
        fh.write(json.dumps(ev, sort_keys=True) + "\n")
