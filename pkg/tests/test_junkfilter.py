import numpy as np
import pytest

from witnessdecomp.cascade import cascade_run, compute_dims
from witnessdecomp.junkfilter import (
    MembershipProbe,
    WitnessSet,
    exact_square,
    filter_supersets,
    isolated_test_dim0,
    membership_via_slice,
)
from witnessdecomp.polysys import parse_system

from conftest import corpus_system


@pytest.fixture(scope="module")
def cusp_run():
    F = corpus_system("cusp_line_points")
    dims = compute_dims(F)
    sr = cascade_run(F, dims)
    W = filter_supersets(sr, F)
    return F, dims, sr, W


def test_junk_removed_from_points_superset(cusp_run):
    F, dims, sr, W = cusp_run
    assert W[1].count == 4
    assert W[0].count == 2
    assert len(W[0].junk) == len(sr.supersets[0]) - 2
    pts = sorted((round(p[0].real, 6), round(p[1].real, 6)) for p in W[0].points)
    assert pts == [(1.0, -3.0), (1.0, 2.0)]
    assert all(c["kind"] in ("membership", "isolated_test") for c in W[0].certificates)
    assert not W[0].warnings


def test_membership_on_and_off_the_curve(cusp_run):
    F, dims, sr, W = cusp_run
    # (4, 8) is on the cusp y^2 = x^3; (1, 2) is an isolated point
    assert membership_via_slice(np.array([4, 8], dtype=complex), 1, W[1], dims.f, dims.L)
    cert = {}
    assert not membership_via_slice(np.array([1, 2], dtype=complex), 1, W[1], dims.f, dims.L, certificate=cert)
    assert cert["kind"] == "membership" and cert["distance"] > 1e-3
    with pytest.raises(ValueError):
        membership_via_slice(np.array([1, 2]), 1, WitnessSet(1, [], dims.L.head(1)), dims.f, dims.L)


def test_isolated_test(cusp_run):
    F, dims, sr, W = cusp_run
    assert not isolated_test_dim0(np.array([1, -3], dtype=complex), dims.f, 1, F=F)
    assert isolated_test_dim0(np.array([0, 7], dtype=complex), dims.f, 1, F=F)


def test_probe_randomness_is_reproducible():
    a = MembershipProbe.random(2, 3, 5, "k", 1)
    b = MembershipProbe.random(2, 3, 5, "k", 1)
    assert np.array_equal(a.A, b.A)
    w = np.array([1, 2, 3], dtype=complex)
    assert np.allclose(a.slice_through(w)(w), 0)
    assert np.linalg.norm(a.epsilon) == pytest.approx(1e-4)


def test_exact_square_keeps_exactness():
    F = corpus_system("cusp_line_overdetermined")
    G = exact_square(F, seed=0)
    assert G.is_square and G.is_exact
    H = parse_system("vars x, y; x*y; x - y;")
    assert exact_square(H, 0) is H


def test_prefilter_only_removes_with_a_certificate(cusp_run):
    F, dims, sr, W = cusp_run
    W2 = filter_supersets(sr, F, prefilter=True)
    assert W2[1].count == W[1].count
    kept = {tuple(np.round(p, 8)) for p in W[0].points}
    assert {tuple(np.round(p, 8)) for p in W2[0].points} <= kept
    # the bound is global: at exact rational points it reaches dim V(F) and overshoots
    dropped = [c for c in W2[0].certificates if c["kind"] == "local_dim"]
    assert all(c["bound"] == 1 for c in dropped)
    assert len(W2[0].points) + len(W2[0].junk) == len(sr.supersets[0])
