import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from witnessdecomp.polysys import LinearSlice, Poly, PolySystem, evaluate, parse_system
from witnessdecomp.tracker import (
    HomotopyProblem,
    PathOutcome,
    SlicedSystem,
    Status,
    TrackerConfig,
    cluster_endpoints,
    dedup,
    solve_total_degree,
    total_degree_start,
    track_path,
    track_slice_move,
    verify_on_system,
)


def _roots(outs):
    return sorted((complex(o.endpoint[0]) for o in outs if o.converged), key=lambda z: (round(z.real, 6), z.imag))


def test_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(step_init=0)
    with pytest.raises(ValueError):
        TrackerConfig(step_min=0.1, step_init=0.05)


def test_total_degree_start_roots():
    G, pts = total_degree_start([2, 3], ("x", "y"))
    assert len(pts) == 6
    for p in pts:
        assert np.max(np.abs(evaluate(G, p))) < 1e-12


def test_univariate_roots():
    F = parse_system("vars x; x^3 - 6*x^2 + 11*x - 6;")
    outs = solve_total_degree(F)
    assert all(o.status is Status.SUCCESS for o in outs)
    assert np.allclose(sorted(z.real for z in _roots(outs)), [1, 2, 3], atol=1e-10)


def test_circle_meets_line_twice():
    F = parse_system("vars x, y; x^2 + y^2 - 1; x - y;")
    outs = solve_total_degree(F)
    pts = cluster_endpoints(outs, F)
    assert len(pts) == 2
    r = 1 / math.sqrt(2)
    assert sorted(round(p[0].real, 8) for p in pts) == [round(-r, 8), round(r, 8)]


def test_solutions_at_infinity_diverge():
    # two parallel lines plus a conic: Bezout 2, one finite solution
    F = parse_system("vars x, y; x + y - 1; x*y;")
    outs = solve_total_degree(F)
    assert len(outs) == 2
    good = [o for o in outs if o.converged]
    assert len(cluster_endpoints(good, F)) == 2
    # hyperbola and a vertical line: one finite point, one at infinity
    G = parse_system("vars x, y; x*y - 1; x - 1;")
    outs = solve_total_degree(G)
    assert [o.status for o in outs].count(Status.DIVERGED) == 1
    assert len([o for o in outs if o.converged]) == 1


def test_double_root_endpoints_merge():
    F = parse_system("vars x; (x - 1)^2*(x + 2);")
    outs = solve_total_degree(F)
    pts = cluster_endpoints(outs, F)
    assert len(pts) == 2
    assert all(o.converged for o in outs)
    assert min(abs(p[0] - 1) for p in pts) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 1000))
def test_bezout_bound_never_exceeded(degrees, seed):
    n = len(degrees)
    names = [f"x{k}" for k in range(n)]
    rng = np.random.default_rng(seed)
    rows = []
    for k, d in enumerate(degrees):
        c = int(rng.integers(1, 5))
        other = f" - {c}*{names[(k + 1) % n]}" if n > 1 else ""
        rows.append(f"{names[k]}^{d}{other} + {int(rng.integers(-3, 4))}")
    F = parse_system(f"vars {', '.join(names)};\n" + ";\n".join(rows) + ";")
    outs = solve_total_degree(F, seed=seed)
    assert len(outs) == math.prod(degrees)
    assert len(cluster_endpoints(outs, F)) <= math.prod(degrees)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=2, max_size=2))
def test_identity_homotopy_fixes_points(pt):
    # start and target coincide, so every regular start point stays put
    pt = np.array(pt)
    F = parse_system("vars x, y; x^2 - y + 1; x*y - 2;")
    shift = evaluate(F, pt)
    G = PolySystem(tuple(p - Poly.constant(complex(c), 2) for p, c in zip(F.polys, shift)), F.varnames)
    J = np.array([[2 * pt[0], -1], [pt[1], pt[0]]])
    if abs(np.linalg.det(J)) < 1e-3:
        return
    out = track_path(HomotopyProblem(G, G, 0.6 + 0.8j), pt)
    assert out.converged
    assert np.max(np.abs(out.endpoint - pt)) < 1e-8 * (1 + np.max(np.abs(pt)))


def test_slice_move_follows_the_curve():
    # unit circle cut by x = c, moved from c = 0.6 to c = -0.8
    base = parse_system("vars x, y; x^2 + y^2 - 1;")
    start = SlicedSystem(base, LinearSlice([[1, 0]], [-0.6]))
    pts = [np.array([0.6, 0.8]), np.array([0.6, -0.8])]
    outs = track_slice_move(start, pts, LinearSlice([[1, 0]], [0.8]))
    assert all(o.converged for o in outs)
    ends = sorted(round(o.endpoint[1].real, 8) for o in outs)
    assert ends == [-0.6, 0.6]
    with pytest.raises(ValueError):
        track_slice_move(start, [np.array([0.0, 0.0])], LinearSlice([[1, 0]], [0.8]))


def test_identical_slice_is_identity():
    base = parse_system("vars x, y; x^2 + y^2 - 1;")
    sl = LinearSlice([[1, 0]], [-0.6])
    outs = track_slice_move(SlicedSystem(base, sl), [np.array([0.6, 0.8])], sl)
    assert outs[0].steps_taken == 0 and outs[0].converged


def test_verify_and_dedup():
    F = parse_system("vars x, y; 1000*x^2 - 1000*y; x - 1;")
    assert verify_on_system(F, [1, 1])
    assert not verify_on_system(F, [1, 1.001])
    assert len(dedup([np.array([1, 2]), np.array([1 + 1e-9, 2]), np.array([3, 4])])) == 2


def test_converged_requires_t_zero():
    o = PathOutcome(Status.SINGULAR, np.zeros(1), 0.0, 10, 1e-12, 0.3)
    assert not o.converged
    assert PathOutcome(Status.SINGULAR, np.zeros(1), 0.0, 10, 1e-12, 0.0).converged


def _surface_move(point, const):
    base = parse_system("vars x, y, z; (x^3 + z)*(x^2 - y);")
    start = SlicedSystem(base, LinearSlice([[4, 7, 2], [5, 7, 3]], [6, 6]))
    (o,) = track_slice_move(start, [np.array(point, dtype=complex)], LinearSlice([[4, 7, 2], [5, 7, 3]], [6, const]))
    assert o.converged
    return o.endpoint


def test_surface_slice_moves_reach_published_endpoints():
    w1 = [1, -8 / 7, -1]
    assert np.max(np.abs(_surface_move(w1, 9) - [1.671699881657157, -0.4776285376163331, -4.671699881657164])) < 1e-6
    assert np.max(np.abs(_surface_move(w1, 63) - [3.935100643260828, 14.30425695906836, -60.93510064326094])) < 1e-6
    w2 = [0, -6 / 7, 0]
    want = [-0.8358499408 + 1.0468693188j, 0.2388142688 - 0.2991055197j, -2.1641500592 - 1.0468693188j]
    assert np.max(np.abs(_surface_move(w2, 9) - want)) < 1e-6


def test_circle_and_line_solutions():
    F = parse_system("vars x, y; x^2 + y^2 - 5; x - 2*y - 3;")
    outs = solve_total_degree(F)
    assert [o.status for o in outs].count(Status.SUCCESS) == 2
    pts = sorted((round(o.endpoint[0].real, 8), round(o.endpoint[1].real, 8)) for o in outs)
    assert np.allclose(pts, [(-1, -2), (11 / 5, -2 / 5)], atol=1e-8)


def test_witness_candidates_of_mixed_surfaces_verify():
    from witnessdecomp.cascade import cascade_run, compute_dims

    from conftest import corpus_system

    F = corpus_system("cubic_two_lines")
    sr = cascade_run(F, compute_dims(F))
    assert sum(len(v) for v in sr.supersets.values()) > 0
    for pts in sr.supersets.values():
        assert all(verify_on_system(F, p, 1e-6) for p in pts)
