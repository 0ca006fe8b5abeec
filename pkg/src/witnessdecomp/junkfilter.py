"""Removing junk points from witness supersets.

A point of the level-``i`` superset is junk when it lies on a component of
dimension ``j > i``.  The test moves the witness set ``W_j`` onto a generic
codimension-``j`` slice through the point; the point is junk exactly when
one of the moved witness points lands on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exactalg
from .cascade import SupersetResult, randomized_rows, sliced_system
from .polysys import LinearSlice, PolySystem, random_annulus, rng_for
from .tracker import (
    SlicedSystem,
    TrackerConfig,
    cluster_endpoints,
    solve_total_degree,
    track_slice_move,
    verify_on_system,
)

log = logging.getLogger(__name__)

MATCH_TOL = 1e-6
EPSILON_NORM = 1e-4


class InconclusiveMembership(RuntimeError):
    pass


@dataclass
class WitnessSet:
    dim: int
    points: list[np.ndarray]
    slice: LinearSlice
    junk: list[np.ndarray] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass
class MembershipProbe:
    A: np.ndarray
    epsilon: np.ndarray
    target_dim: int

    @classmethod
    def random(cls, j: int, N: int, seed: int, *keys) -> "MembershipProbe":
        rng = rng_for(seed, "probe", j, *keys)
        A = random_annulus(rng, (j, N))
        eps = random_annulus(rng, N)
        return cls(A, eps * (EPSILON_NORM / np.linalg.norm(eps)), j)

    def slice_through(self, w) -> LinearSlice:
        return LinearSlice(self.A, -self.A @ np.asarray(w, dtype=complex))


def _key(w) -> tuple:
    # stable per-point randomness that does not depend on processing order
    return tuple(np.round(np.concatenate([np.real(w), np.imag(w)]), 6).tolist())


def membership_via_slice(
    w,
    j: int,
    W_j: WitnessSet,
    f: PolySystem,
    L: LinearSlice,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    certificate: dict | None = None,
) -> bool:
    """True when ``w`` lies on a ``j``-dimensional component witnessed by ``W_j``."""
    if not W_j.points:
        raise ValueError("membership test needs a nonempty witness set")
    w = np.asarray(w, dtype=complex)
    probe = MembershipProbe.random(j, f.nvars, seed, *_key(w))
    start = sliced_system(f, L, j, seed)
    outs = track_slice_move(start, W_j.points, probe.slice_through(w), cfg, seed)
    done = [o for o in outs if o.converged]
    if not done:
        raise InconclusiveMembership(f"all {len(outs)} membership paths failed")
    best = min(done, key=lambda o: float(np.max(np.abs(o.endpoint - w))))
    dist = float(np.max(np.abs(best.endpoint - w)))
    if certificate is not None:
        certificate.update(
            kind="membership", dim=j, distance=dist, endpoint=best.endpoint.tolist(), failed=len(outs) - len(done)
        )
    return dist <= MATCH_TOL * (1 + float(np.max(np.abs(w))))


def _probe_count(base: PolySystem, A: np.ndarray, center, F: PolySystem, cfg, seed) -> int:
    sl = LinearSlice(A, -A @ center)
    sq = SlicedSystem(base, sl).system
    outs = [o for o in solve_total_degree(sq, cfg, seed) if o.converged]
    on_F = [o for o in outs if verify_on_system(F, o.endpoint)]
    return len(cluster_endpoints(on_F, sq))


def isolated_test_dim0(
    w,
    f: PolySystem,
    d: int,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    F: PolySystem | None = None,
    certificate: dict | None = None,
) -> bool:
    """True (junk) when a codimension-``d`` probe through ``w`` and a shifted
    copy meet ``V(f)`` in the same number of points."""
    if d < 1:
        return False
    w = np.asarray(w, dtype=complex)
    probe = MembershipProbe.random(d, f.nvars, seed, "isolated", *_key(w))
    base = randomized_rows(f, d, seed + 1)
    F = F if F is not None else f
    t = _probe_count(base, probe.A, w, F, cfg, seed)
    s = _probe_count(base, probe.A, w + probe.epsilon, F, cfg, seed)
    if certificate is not None:
        certificate.update(kind="isolated_test", through_point=t, shifted=s)
    if t == 0 or s == 0:
        raise InconclusiveMembership("probe system has no finite solutions")
    return s == t


def exact_square(F: PolySystem, seed: int) -> PolySystem:
    """Exact square system from ``F`` using a small random integer matrix."""
    N, n = F.nvars, F.npolys
    if n == N:
        return F
    rng = rng_for(seed, "exact-square", N, n)
    M = rng.integers(1, 10, size=(N, n)) * rng.choice([-1, 1], size=(N, n))
    polys = []
    for row in M:
        acc = None
        for c, p in zip(row, F.polys):
            term = p * Fraction(int(c))
            acc = term if acc is None else acc + term
        polys.append(acc)
    return PolySystem(tuple(polys), F.varnames)


def filter_supersets(
    sr: SupersetResult,
    F: PolySystem,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    prefilter: bool = False,
) -> dict[int, WitnessSet]:
    """Witness sets ``W_i`` from the supersets, highest dimension first."""
    r, d = sr.dims
    f, L = sr.f, sr.L
    out: dict[int, WitnessSet] = {}
    if d < 0:
        return out
    out[d] = WitnessSet(d, list(sr.supersets.get(d, [])), L.head(d))
    f_exact = exact_square(F, seed) if prefilter and F.is_exact else None
    for i in range(d - 1, r - 1, -1):
        ws = WitnessSet(i, [], L.head(i))
        for w in sr.supersets.get(i, []):
            cert: dict = {}
            junk = False
            if f_exact is not None:
                try:
                    t = exactalg.local_dim_bound(f_exact, w)
                    if t > i:
                        junk = True
                        cert = {"kind": "local_dim", "bound": t}
                except exactalg.ExactAlgebraError as exc:
                    ws.warnings.append(f"local dimension prefilter skipped: {exc}")
            for j in range(i + 1, d + 1):
                if junk:
                    break
                if not out[j].points:
                    continue
                try:
                    c: dict = {}
                    if membership_via_slice(w, j, out[j], f, L, cfg, seed, c):
                        junk, cert = True, c
                except InconclusiveMembership as exc:
                    ws.warnings.append(f"dim {i}: {exc}; point retained")
            if not junk and i == 0:
                try:
                    c = {}
                    if isolated_test_dim0(w, f, d, cfg, seed, F, c):
                        junk, cert = True, c
                except InconclusiveMembership as exc:
                    ws.warnings.append(f"dim 0: {exc}; point retained")
            if junk:
                ws.junk.append(w)
                ws.certificates.append(cert)
            else:
                ws.points.append(w)
        out[i] = ws
    return out
