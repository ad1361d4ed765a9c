import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binary_bleed.models import SquareWave, TableScore
from binary_bleed.search import (
    Bounds,
    Direction,
    InvalidInput,
    KSpace,
    SearchAborted,
    Thresholds,
    binary_bleed_serial,
    linear_grid_search,
    update_bounds,
)

MAX = Thresholds(0.5)


def ks(result):
    return [r.k for r in result.records]


# Traces below were replayed by hand on paper before the implementation existed.

def test_square_wave_trace_1_to_11():
    res = binary_bleed_serial(KSpace.range(1, 11), SquareWave(8), MAX)
    assert ks(res) == [6, 9, 10, 11, 7, 8]
    assert res.k_optimal == 7
    assert res.pruned == frozenset(range(1, 6))
    assert [r.visit_index for r in res.records] == list(range(6))


def test_early_stop_trace():
    scores = TableScore.of({5: 1.0, 8: 0.0}, default=0.5)
    th = Thresholds(0.9, 0.1)
    res = binary_bleed_serial(KSpace.range(1, 11), scores, th)
    assert ks(res) == [6, 9, 10, 11, 7, 8, 3, 4, 5]
    assert res.k_optimal == 5
    assert res.pruned == frozenset({1, 2})


def test_early_stop_truncates_upper_half():
    res = binary_bleed_serial(KSpace.range(2, 11), SquareWave(6), Thresholds(0.5, 0.0))
    assert res.k_optimal == 5
    assert res.visited == 4
    assert set(range(7, 12)) <= res.pruned


def test_single_element_space():
    res = binary_bleed_serial(KSpace((5,)), SquareWave(9), MAX)
    assert res.k_optimal == 5 and ks(res) == [5]


def test_nothing_passes_visits_everything():
    res = binary_bleed_serial(KSpace.range(1, 11), SquareWave(1), MAX)
    assert res.k_optimal is None
    assert sorted(ks(res)) == list(range(1, 12))
    assert res.pruned == frozenset()


def test_minimize_keeps_largest_passing_k():
    scores = TableScore.of({3: 0.1, 4: 0.2, 7: 0.9}, default=1.0)
    th = Thresholds(0.3, direction=Direction.MINIMIZE)
    assert binary_bleed_serial(KSpace.range(1, 10), scores, th).k_optimal == 4
    assert linear_grid_search(KSpace.range(1, 10), scores, th).k_optimal == 4


def test_linear_grid_search_visits_all_in_order():
    res = linear_grid_search(KSpace.range(2, 30), SquareWave(8), MAX)
    assert ks(res) == list(range(2, 31))
    assert res.k_optimal == 7
    assert res.visited_fraction == 1.0
    assert linear_grid_search(KSpace.range(2, 30), SquareWave(2), MAX).k_optimal is None


def test_update_bounds_examples():
    b = Bounds()
    b = update_bounds(b, 8, 0.9, Thresholds(0.5, 0.1))
    assert (b.k_min, b.k_max) == (8, math.inf)
    b = update_bounds(b, 12, 0.05, Thresholds(0.5, 0.1))
    assert (b.k_min, b.k_max) == (8, 12)
    # a passing k below k_min never relaxes the bound
    assert update_bounds(b, 3, 0.9, Thresholds(0.5, 0.1)).k_min == 8
    mn = Thresholds(0.3, 0.8, Direction.MINIMIZE)
    assert update_bounds(Bounds(), 5, 0.2, mn) == Bounds(5, math.inf)
    assert update_bounds(Bounds(), 9, 0.85, mn) == Bounds(-math.inf, 9)


def test_bounds_admit_only_open_interval():
    b = Bounds(3, 7)
    assert [k for k in range(1, 10) if b.admits(k)] == [4, 5, 6]


@pytest.mark.parametrize("values", [(), (3, 2), (1, 1), (0, 1), (-2,)])
def test_invalid_space(values):
    with pytest.raises(InvalidInput):
        KSpace(values)


def test_space_parse():
    assert KSpace.parse("2:5").values == (2, 3, 4, 5)
    assert KSpace.parse("2,4,9").values == (2, 4, 9)
    with pytest.raises(InvalidInput):
        KSpace.parse("5:2")


def test_threshold_invariant():
    with pytest.raises(InvalidInput):
        Thresholds(0.5, 0.6)
    with pytest.raises(InvalidInput):
        Thresholds(0.5, 0.4, Direction.MINIMIZE)


def test_evaluator_failure_keeps_partial_records():
    def boom(k, seed):
        if k == 9:
            raise RuntimeError("diverged")
        return 0.0

    with pytest.raises(SearchAborted) as info:
        binary_bleed_serial(KSpace.range(1, 11), boom, MAX)
    assert info.value.k == 9
    assert [r.k for r in info.value.records] == [6]
    assert isinstance(info.value.cause, RuntimeError)


# ---- properties ---------------------------------------------------------

spaces = st.lists(st.integers(1, 60), min_size=1, max_size=25, unique=True).map(
    lambda v: KSpace(tuple(sorted(v))))


@st.composite
def scored_space(draw):
    space = draw(spaces)
    scores = {k: draw(st.sampled_from([0.0, 0.05, 0.3, 0.5, 0.7, 1.0])) for k in space}
    return space, TableScore.of(scores)


@settings(max_examples=200, deadline=None)
@given(scored_space(), st.booleans())
def test_visit_bound_and_no_repeats(case, early):
    space, scores = case
    th = Thresholds(0.5, 0.1 if early else None)
    res = binary_bleed_serial(space, scores, th)
    assert res.visited <= len(space)
    assert len(set(ks(res))) == res.visited
    assert set(ks(res)).isdisjoint(res.pruned)
    assert set(ks(res)) | res.pruned == set(space)


@settings(max_examples=200, deadline=None)
@given(spaces, st.integers(1, 62), st.booleans())
def test_square_wave_matches_grid(space, k0, early):
    th = Thresholds(0.5, 0.0 if early else None)
    assert (binary_bleed_serial(space, SquareWave(k0), th).k_optimal
            == linear_grid_search(space, SquareWave(k0), th).k_optimal)


@settings(max_examples=200, deadline=None)
@given(scored_space(), st.booleans())
def test_bounds_are_monotone_and_gate_evaluation(case, early):
    space, scores = case
    th = Thresholds(0.5, 0.1 if early else None)
    seen = []
    res = binary_bleed_serial(space, scores, th, on_bounds=seen.append)
    for a, b in zip(seen, seen[1:]):
        assert b.k_min >= a.k_min and b.k_max <= a.k_max
    # replaying the records, each k was strictly inside the window at its start
    bounds = Bounds()
    for r in res.records:
        assert bounds.admits(r.k)
        bounds = update_bounds(bounds, r.k, r.score, th)


@settings(max_examples=200, deadline=None)
@given(scored_space(), st.booleans())
def test_pruning_soundness(case, early):
    space, scores = case
    th = Thresholds(0.5, 0.1 if early else None)
    res = binary_bleed_serial(space, scores, th)
    passing = [r.k for r in res.records if th.passes_select(r.score)]
    stopping = [r.k for r in res.records if th.crosses_stop(r.score)]
    for k in res.pruned:
        assert any(k < p for p in passing) or any(k > s for s in stopping)


@settings(max_examples=50, deadline=None)
@given(scored_space(), st.integers(0, 2**31))
def test_deterministic(case, seed):
    space, scores = case
    a = binary_bleed_serial(space, scores, MAX, seed=seed).to_dict()
    b = binary_bleed_serial(space, scores, MAX, seed=seed).to_dict()
    assert json.dumps(a) == json.dumps(b)
