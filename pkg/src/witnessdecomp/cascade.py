"""Witness supersets by the slack-variable cascade.

Level ``i`` works with the embedding

    f_k(x) + sum_j lam[k, j] z_j      k = 1..N
    l_j(x) + z_j                      j = 1..i

in ``N + i`` unknowns.  Solutions with all slacks zero lie on ``V(f)``
intersected with the first ``i`` slices; solutions with some nonzero slack
start the homotopy to the next level down.  One ``N x d`` matrix ``lam`` is
shared by all levels (level ``i`` uses its first ``i`` columns).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import exactalg
from .polysys import (
    DimensionMismatch,
    LinearSlice,
    Poly,
    PolySystem,
    RandomizationMatrix,
    combine,
    generic_rank,
    normalized,
    random_annulus,
    random_slice,
    rng_for,
    square_up,
)
from .tracker import (
    HomotopyProblem,
    PathOutcome,
    SlicedSystem,
    Status,
    TrackerConfig,
    cluster_endpoints,
    random_gamma,
    solve_total_degree,
    track_many,
    verify_on_system,
)

log = logging.getLogger(__name__)

SLACK_THRESHOLD = 1e-6
BORDERLINE = 1e-8


@dataclass
class EmbeddedSystem:
    base: PolySystem
    slack_count: int
    lam: np.ndarray
    slice: LinearSlice
    assembled: PolySystem

    @property
    def nvars(self) -> int:
        return self.assembled.nvars


def embedding_matrix(N: int, d: int, seed: int) -> np.ndarray:
    return random_annulus(rng_for(seed, "cascade-lambda", N, d), (N, d))


def embed(f: PolySystem, L: LinearSlice, i: int, seed: int = 0, lam: np.ndarray | None = None) -> EmbeddedSystem:
    """The level-``i`` embedding of the square system ``f``."""
    N = f.nvars
    if not f.is_square:
        raise DimensionMismatch("embedding needs a square system")
    if not 0 <= i <= L.rows:
        raise ValueError(f"level {i} exceeds the {L.rows} available slice rows")
    if lam is None:
        lam = embedding_matrix(N, L.rows, seed)
    lam = np.asarray(lam)[:, :i]
    if i == 0:
        return EmbeddedSystem(f, 0, lam, L.head(0), f)
    M = N + i
    rows = []
    for k, p in enumerate(f.polys):
        q = p.extend(M)
        for j in range(i):
            q = q + Poly.variable(N + j, M) * complex(lam[k, j])
        rows.append(q)
    for j, lj in enumerate(L.head(i).polys(M)):
        rows.append(lj + Poly.variable(N + j, M))
    names = tuple(f.varnames) + tuple(f"_z{j + 1}" for j in range(i))
    return EmbeddedSystem(f, i, lam, L.head(i), PolySystem(tuple(rows), names))


@dataclass
class Dims:
    f: PolySystem
    d: int
    r: int
    L: LinearSlice
    exact_dim: bool = True


def compute_dims(F: PolySystem, seed: int = 0, max_pairs: int | None = None) -> Dims:
    """Square ``F``, find the top dimension ``d`` exactly and the bound ``r``.

    ``d`` comes from a Groebner basis of the input ideal.  Inexact input, or
    a basis computation over budget, falls back to ``d = N - 1``.
    """
    if F.npolys == 0:
        raise ValueError("empty system")
    N, n = F.nvars, F.npolys
    exact = False
    d = N - 1
    if F.is_exact:
        try:
            gb = exactalg.buchberger(exactalg.exact_polys(F), max_pairs=max_pairs)
            d = exactalg.ideal_dimension(gb)
            exact = True
        except exactalg.BuchbergerBudgetExceeded as exc:
            log.warning("Groebner basis over budget (%s pairs); cascading from N-1", exc.pairs)
    else:
        log.warning("inexact coefficients; cascading from N-1")
    r = N - generic_rank(F, seed)
    Fn = normalized(F)
    if n == N:
        f = Fn
    else:
        f = square_up(Fn, RandomizationMatrix.random(N, n, seed))
    if d >= 0:
        r = min(r, d)
    L = random_slice(max(d, 0), N, seed)
    return Dims(f, d, r, L, exact)


@dataclass
class SupersetResult:
    f: PolySystem
    dims: tuple[int, int]
    L: LinearSlice
    supersets: dict[int, list[np.ndarray]] = field(default_factory=dict)
    nonsolutions: dict[int, list[np.ndarray]] = field(default_factory=dict)
    singular_dropped: dict[int, int] = field(default_factory=dict)
    failed_paths: dict[int, int] = field(default_factory=dict)
    borderline: dict[int, int] = field(default_factory=dict)
    paths: dict[int, int] = field(default_factory=dict)


def randomized_rows(f: PolySystem, k: int, seed: int) -> PolySystem:
    """``N - k`` random combinations of the rows of ``f``."""
    N = f.nvars
    if k == 0:
        return f
    R = RandomizationMatrix.random(N - k, N, seed + 7919 * k).matrix
    return PolySystem(tuple(combine(f.polys, R)), f.varnames)


def sliced_system(f: PolySystem, L: LinearSlice, k: int, seed: int) -> SlicedSystem:
    """Square system for ``V(f)`` cut by the first ``k`` slices."""
    return SlicedSystem(randomized_rows(f, k, seed), L.head(k))


def randomized_slice_system(f: PolySystem, L: LinearSlice, k: int, seed: int) -> PolySystem:
    return sliced_system(f, L, k, seed).system


def _split(
    outcomes: list[PathOutcome],
    target: PolySystem,
    F: PolySystem,
    N: int,
    nslack: int,
    i: int,
    res: SupersetResult,
):
    """Sort level-``i`` endpoints (``nslack`` slack columns) into superset points and nonsolutions."""
    good = [o for o in outcomes if o.converged]
    res.failed_paths[i] = len(outcomes) - len(good)
    cand, nonsol, dropped, border = [], [], 0, 0
    for p in cluster_endpoints(good, target):
        z = p[N : N + nslack]
        x = p[:N]
        if nslack == 0 or float(np.max(np.abs(z))) <= SLACK_THRESHOLD:
            if verify_on_system(F, x, 1e-8):
                cand.append(x)
            elif verify_on_system(F, x, 1e-6):
                cand.append(x)
                border += 1
        else:
            nonsol.append(p)
    # nonsolutions must be regular to serve as start points
    keep = []
    for p in nonsol:
        o = min(good, key=lambda o: float(np.max(np.abs(o.endpoint - p))))
        if o.status is Status.SUCCESS:
            keep.append(p)
        else:
            dropped += 1
    res.supersets[i] = cand
    res.nonsolutions[i] = keep
    res.singular_dropped[i] = dropped
    res.borderline[i] = border


def cascade_run(
    F: PolySystem,
    dims: Dims,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
) -> SupersetResult:
    """Run the cascade from the top dimension ``d`` down to ``r``."""
    cfg = cfg or TrackerConfig()
    f, d, r, L = dims.f, dims.d, dims.r, dims.L
    N = f.nvars
    res = SupersetResult(f, (r, d), L)
    if d < 0:
        return res
    if d == r:
        # pure-dimensional top: witness points of V(f) directly
        sq = randomized_slice_system(f, L, d, seed)
        outs = solve_total_degree(sq, cfg, seed)
        res.paths[d] = len(outs)
        _split(outs, normalized(sq), F, N, 0, d, res)
        return res
    lam = embedding_matrix(N, d, seed)
    top = embed(f, L, d, seed, lam)
    outs = solve_total_degree(top.assembled, cfg, seed)
    res.paths[d] = len(outs)
    _split(outs, normalized(top.assembled), F, N, d, d, res)
    for i in range(d - 1, r - 1, -1):
        start = embed(f, L, i + 1, seed, lam).assembled
        M = N + i + 1
        rows = list(start.polys[:-1]) + [Poly.variable(M - 1, M)]
        target = PolySystem(tuple(rows), start.varnames)
        pts = res.nonsolutions[i + 1]
        res.paths[i] = len(pts)
        if not pts:
            res.supersets[i], res.nonsolutions[i] = [], []
            res.singular_dropped[i] = res.failed_paths[i] = res.borderline[i] = 0
            continue
        h = HomotopyProblem(start, target, random_gamma(seed, "cascade", i))
        outs = track_many(h, pts, cfg)
        # drop the vanished slack z_{i+1}
        proj = [
            PathOutcome(o.status, o.endpoint[: N + i], o.residual, o.steps_taken, o.rcond, o.t_final) for o in outs
        ]
        _split(proj, embed(f, L, i, seed, lam).assembled, F, N, i, i, res)
    return res
