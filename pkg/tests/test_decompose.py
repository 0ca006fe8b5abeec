import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from witnessdecomp.cascade import cascade_run, compute_dims
from witnessdecomp.decompose import (
    Partition,
    min_zero_subsets,
    monodromy_group,
    partition_witness_set,
    trace_residuals,
    zsr_threshold,
)
from witnessdecomp.junkfilter import WitnessSet, filter_supersets

from conftest import corpus_system


def test_threshold_floor():
    assert zsr_threshold([1e-3, 2e-3]) == pytest.approx(1e-4)
    assert zsr_threshold([100, -50]) == pytest.approx(1e-2)


def test_min_zero_subsets_prefers_small_and_lexicographic():
    R = [1, 2, -1, -2, 3, -3]
    part = min_zero_subsets(R, 1e-9)
    assert part.groups == [[0, 2], [1, 3], [4, 5]]
    assert all(part.certified)


def test_min_zero_subsets_leftover_is_uncertified():
    part = min_zero_subsets([1, 1, 1], 1e-9)
    assert part.groups == [[0, 1, 2]] and part.certified == [False]
    with pytest.raises(ValueError):
        min_zero_subsets([1], 0)


def test_budget_exhaustion_is_reported():
    R = list(np.random.default_rng(0).normal(size=18) + 5)
    part = min_zero_subsets(R, 1e-9, node_budget=50)
    assert part.certified == [False]
    assert sorted(part.groups[0]) == list(range(18))


@st.composite
def planted(draw):
    # residual lists built from zero-sum blocks
    sizes = draw(st.lists(st.integers(1, 4), min_size=1, max_size=4))
    vals = []
    for s in sizes:
        if s == 1:
            vals.append(0j)
            continue
        block = [complex(draw(st.floats(-50, 50)), draw(st.floats(-50, 50))) for _ in range(s - 1)]
        block.append(-sum(block))
        vals.extend(block)
    perm = draw(st.permutations(range(len(vals))))
    return [vals[i] for i in perm], len(sizes)


@settings(max_examples=80, deadline=None)
@given(planted())
def test_partition_is_exact_and_closes(data):
    R, blocks = data
    part = min_zero_subsets(R, 1e-6)
    part.check(len(R))
    thr = zsr_threshold(R, 1e-6)
    for g, ok in zip(part.groups, part.certified):
        if ok:
            assert abs(sum(R[i] for i in g)) <= thr
    assert all(part.certified)


def test_partition_check_catches_overlap():
    with pytest.raises(AssertionError):
        Partition([[0, 1], [1]], [True, True]).check(2)


@pytest.fixture(scope="module")
def surfaces():
    F = corpus_system("cubic_quadric_surfaces")
    dims = compute_dims(F)
    sr = cascade_run(F, dims)
    W = filter_supersets(sr, F)
    return F, dims, W[2]


def test_two_surfaces_split_three_two(surfaces):
    F, dims, W = surfaces
    part, trace, orbits = partition_witness_set(W, dims.f, dims.L)
    assert part.sizes == [2, 3]
    assert all(part.certified)
    assert abs(sum(trace.residuals)) <= zsr_threshold(trace.residuals)


def test_trace_only_matches_with_monodromy(surfaces):
    F, dims, W = surfaces
    a, _, _ = partition_witness_set(W, dims.f, dims.L, loops=0)
    b, _, _ = partition_witness_set(W, dims.f, dims.L, loops=5)
    assert a.groups == b.groups


def test_monodromy_orbits_refine_components(surfaces):
    F, dims, W = surfaces
    orbits = monodromy_group(W, dims.f, dims.L, loops=3)
    part, _, _ = partition_witness_set(W, dims.f, dims.L, loops=0)
    owner = {i: k for k, g in enumerate(part.groups) for i in g}
    for g in orbits.groups:
        assert len({owner[i] for i in g}) == 1


def test_monodromy_recovers_a_dropped_point(surfaces):
    F, dims, W = surfaces
    part, _, _ = partition_witness_set(W, dims.f, dims.L)
    big = max(part.groups, key=len)
    lost = W.points[big[0]]
    kept = [p for i, p in enumerate(W.points) if i != big[0]]
    W4 = WitnessSet(W.dim, list(kept), W.slice)
    part4, _, _ = partition_witness_set(W4, dims.f, dims.L, F=F)
    assert len(W4.points) == 5
    assert min(np.max(np.abs(p - lost)) for p in W4.points[4:]) < 1e-6
    assert part4.sizes == [2, 3] and all(part4.certified)


def test_complete_sets_do_not_grow(surfaces):
    F, dims, W = surfaces
    W5 = WitnessSet(W.dim, list(W.points), W.slice)
    partition_witness_set(W5, dims.f, dims.L, F=F)
    assert len(W5.points) == len(W.points)


def test_dimension_zero_is_trivial():
    W = WitnessSet(0, [np.zeros(2), np.ones(2)], None)
    part, trace, orbits = partition_witness_set(W, None, None)
    assert part.groups == [[0], [1]] and all(part.certified) and trace is None
    with pytest.raises(ValueError):
        trace_residuals(W, None, None)


def test_single_line_point_has_zero_residual():
    F = corpus_system("three_lines")
    dims = compute_dims(F)
    sr = cascade_run(F, dims)
    W = filter_supersets(sr, F)[1]
    tr = trace_residuals(W, dims.f, dims.L)
    scale = max(abs(tr.a), abs(tr.b), abs(tr.c), 1)
    assert all(abs(r) < 1e-8 * scale for r in tr.residuals)
    part, _, orbits = partition_witness_set(W, dims.f, dims.L, loops=4)
    assert part.groups == [[0], [1], [2]] and all(part.certified)
    assert orbits.groups == [[0], [1], [2]]
