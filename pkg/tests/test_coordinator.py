import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binary_bleed.coordinator import (
    SELECT,
    STOP,
    KAnnouncement,
    Network,
    OptimalCell,
    ParallelAborted,
    RankConfig,
    broadcast_k,
    receive_k_check,
    run_parallel,
    worker_step,
)
from binary_bleed.models import SquareWave, TableScore
from binary_bleed.search import (
    Direction,
    InvalidInput,
    KSpace,
    Thresholds,
    binary_bleed_serial,
    linear_grid_search,
)

from protocol_checks import duplicate_evaluations, late_evaluations

SPACE = KSpace.range(1, 11)
ONLY_7 = TableScore.of({7: 1.0})
TH = Thresholds(0.5)


def test_three_rank_walkthrough():
    res = run_parallel(SPACE, ONLY_7, TH, RankConfig(3))
    assert [r.k for r in res.records] == [7, 8, 6, 10, 11, 9]
    assert res.k_optimal == 7
    assert res.pruned == frozenset(range(1, 6))
    assert res.rank_cells == [7, 7, 7]


def test_four_rank_early_stop_walkthrough():
    scores = TableScore.of({5: 1.0, 8: 0.0}, default=0.5)
    res = run_parallel(SPACE, scores, Thresholds(0.9, 0.1), RankConfig(4))
    assert {r.k for r in res.records} == {5, 6, 7, 8}
    assert res.pruned == frozenset({1, 2, 3, 4, 9, 10, 11})
    assert res.k_optimal == 5


def test_single_resource_agrees_with_serial_answer():
    space = KSpace.range(2, 30)
    for k0 in range(2, 31):
        par = run_parallel(space, SquareWave(k0), TH, RankConfig(1, 1))
        assert par.k_optimal == binary_bleed_serial(space, SquareWave(k0), TH).k_optimal


def test_eight_workers_on_2_30():
    res = run_parallel(KSpace.range(2, 30), SquareWave(20), TH, RankConfig(4, 2))
    assert res.k_optimal == 19
    assert res.total_visited < 29


def test_worker_step_skips_below_cell():
    cell = OptimalCell()
    cell.offer(24)
    net = Network(2)
    out = worker_step(19, cell, SquareWave(30), TH, 0, net)
    assert not out.evaluated and out.skipped_by == "k_optimal:24"
    assert net.pending() == []


def test_worker_step_pass_updates_and_broadcasts():
    cell, net = OptimalCell(), Network(3)
    out = worker_step(8, cell, SquareWave(10), TH, 1, net)
    assert out.evaluated and out.score == 1.0
    assert cell.value == 8
    assert net.pending() == [(1, 0), (1, 2)]


def test_worker_step_failure_propagates():
    def boom(k, seed):
        raise ValueError("bad")
    with pytest.raises(ValueError):
        worker_step(3, OptimalCell(), boom, TH, 0, Network(1))


def test_broadcast_fan_out():
    net = Network(4)
    assert broadcast_k(7, 2, net) == [0, 1, 3]
    assert net.pending() == [(2, 0), (2, 1), (2, 3)]


def test_receive_takes_larger_value():
    net = Network(2, immediate=True)
    net.send(KAnnouncement(9, 1), 0)
    assert receive_k_check(4, net, 0) == 9
    assert net.idle()


def test_receive_replies_when_local_is_ahead():
    net = Network(2, immediate=True)
    net.send(KAnnouncement(7, 1), 0)
    assert receive_k_check(10, net, 0) == 10
    assert net.drain(1, SELECT) == [KAnnouncement(10, 0)]


def test_receive_stop_merges_by_min():
    net = Network(2, immediate=True)
    net.send(KAnnouncement(6, 1, STOP), 0)
    assert receive_k_check(9, net, 0, STOP) == 6
    assert receive_k_check(None, net, 0, SELECT) is None


def test_cell_only_improves():
    cell = OptimalCell()
    assert cell.offer(5) and not cell.offer(3) and cell.value == 5
    assert cell.offer_stop(9) and not cell.offer_stop(12) and cell.stop == 9


def test_cell_concurrent_offers_keep_max():
    cell = OptimalCell()

    def offer(ks):
        for k in ks:
            with cell.lock:
                cell.offer(k)

    threads = [threading.Thread(target=offer, args=(range(i, 500, 7),)) for i in range(7)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert cell.value == 499


def test_invalid_config():
    with pytest.raises(InvalidInput):
        RankConfig(0)
    with pytest.raises(InvalidInput):
        run_parallel(SPACE, ONLY_7, TH, mode="nope")


def test_evaluator_failure_returns_partial():
    def boom(k, seed):
        if k == 10:
            raise RuntimeError("diverged")
        return 0.0
    with pytest.raises(ParallelAborted) as info:
        run_parallel(SPACE, boom, TH, RankConfig(2))
    assert info.value.k == 10
    assert 10 not in {r.k for r in info.value.partial.records}


def test_minimize_direction():
    scores = TableScore.of({3: 0.1, 4: 0.2, 9: 0.25}, default=0.9)
    th = Thresholds(0.3, direction=Direction.MINIMIZE)
    for mode in ("round-robin", "threads"):
        assert run_parallel(KSpace.range(1, 12), scores, th, RankConfig(3, 2), mode=mode).k_optimal == 9


def test_threads_mode_matches_grid():
    space = KSpace.range(2, 30)
    for k0 in (3, 11, 29):
        res = run_parallel(space, SquareWave(k0), TH, RankConfig(4, 2), mode="threads")
        assert res.k_optimal == k0 - 1
        assert not duplicate_evaluations(res)


def test_events_are_ordered_and_typed():
    res = run_parallel(SPACE, ONLY_7, TH, RankConfig(3))
    assert [e["logical_time"] for e in res.events] == list(range(len(res.events)))
    kinds = {e["event"] for e in res.events}
    assert {"eval_start", "eval_finish", "skip", "broadcast", "deliver", "cell_update"} <= kinds


@st.composite
def scenario(draw):
    values = draw(st.lists(st.integers(1, 40), min_size=1, max_size=20, unique=True))
    space = KSpace(tuple(sorted(values)))
    scores = TableScore.of({k: draw(st.sampled_from([0.0, 0.05, 0.5, 1.0])) for k in space})
    return space, scores


@settings(max_examples=150, deadline=None)
@given(scenario(), st.integers(1, 4), st.integers(1, 3), st.booleans(),
       st.sampled_from(["pre", "post", "in"]), st.integers(0, 10**6))
def test_random_interleavings(case, n, t, early, order, sched_seed):
    space, scores = case
    th = Thresholds(0.5, 0.05 if early else None)
    res = run_parallel(space, scores, th, RankConfig(n, t, "T4", order),
                       mode="random", schedule_seed=sched_seed)
    assert not duplicate_evaluations(res)
    assert res.total_visited <= len(space)
    assert {r.k for r in res.records} | res.pruned == set(space)
    if not early:
        # without a stop bound every passing k is either seen or pruned below a hit
        assert res.k_optimal == linear_grid_search(space, scores, th).k_optimal
        if res.k_optimal is not None:
            assert all(c == res.k_optimal for c in res.rank_cells)
    # cells move monotonically
    last = {}
    for ev in res.events:
        if ev["event"] == "cell_update" and ev["kind"] == SELECT:
            assert ev["cell_value"] > last.get(ev["rank"], float("-inf"))
            last[ev["rank"]] = ev["cell_value"]
    if res.k_optimal is not None and not early:
        assert not late_evaluations(res.events, res.k_optimal)
