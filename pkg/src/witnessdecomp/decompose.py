"""Splitting a witness set into irreducible pieces.

For ``W_k`` on the slice ``L`` only the constant of the last row moves:
``a`` (its current value), then ``b`` and ``c``.  With ``v_i`` and ``vh_i``
the images of ``w_i`` on the ``b`` and ``c`` slices and ``p`` a weight
vector, the per-point residual is

    r_i = (a - b) <p, vh_i> + (b - c) <p, w_i> + (c - a) <p, v_i>.

The sum of ``r_i`` over a set of points vanishes exactly when their trace is
linear in the moving constant, which happens for unions of complete
irreducible witness sets.  Monodromy loops merge points known to share a
component before the subset search.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .cascade import sliced_system
from .junkfilter import WitnessSet
from .polysys import LinearSlice, PolySystem, random_annulus, rng_for
from .tracker import TrackerConfig, track_slice_move, verify_on_system

log = logging.getLogger(__name__)

ZSR_TOL = 1e-4
NODE_BUDGET = 10**7
MONODROMY_LOOPS = 5


class TraceIncomplete(RuntimeError):
    pass


@dataclass
class TraceData:
    k: int
    a: complex
    b: complex
    c: complex
    p: np.ndarray
    base_points: list
    images_b: list
    images_c: list
    residuals: list

    def group_sum(self, idx) -> complex:
        return complex(sum(self.residuals[i] for i in idx))


@dataclass
class Partition:
    groups: list[list[int]]
    certified: list[bool]
    nodes: int = 0

    @property
    def sizes(self) -> list[int]:
        return sorted(len(g) for g in self.groups)

    def check(self, n: int):
        seen = sorted(i for g in self.groups for i in g)
        if seen != list(range(n)):
            raise AssertionError(f"groups {self.groups} are not a partition of {n} indices")


def _offsets(a: complex, seed: int, attempt: int, k: int) -> tuple[complex, complex]:
    rng = rng_for(seed, "trace-offsets", k, attempt)
    scale = max(1.0, abs(a))
    rho = rng.uniform(1, 10, size=2) * scale
    theta = rng.uniform(0, 2 * np.pi, size=2)
    b = a + rho[0] * np.exp(1j * theta[0])
    c = a + rho[1] * np.exp(1j * theta[1])
    return complex(b), complex(c)


def trace_residuals(
    W: WitnessSet,
    f: PolySystem,
    L: LinearSlice,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    b: complex | None = None,
    c: complex | None = None,
    p: Sequence | None = None,
    retries: int = 3,
) -> TraceData:
    """Per-point residuals of the linear-trace relation for ``W``.

    ``b``, ``c`` and ``p`` are random unless given.  With random offsets a
    failed path triggers a redraw (at most ``retries`` draws).
    """
    k = W.dim
    if k < 1:
        raise ValueError("dimension-0 witness sets need no trace")
    if not W.points:
        raise ValueError("empty witness set")
    sl = L.head(k)
    a = complex(sl.constants[k - 1])
    if p is None:
        p = random_annulus(rng_for(seed, "trace-weights", k), f.nvars)
    p = np.asarray(p, dtype=complex)
    start = sliced_system(f, L, k, seed)
    fixed = b is not None and c is not None
    for attempt in range(1 if fixed else retries):
        bb, cc = (b, c) if fixed else _offsets(a, seed, attempt, k)
        vb = track_slice_move(start, W.points, sl.with_constant(k - 1, bb), cfg, seed)
        vc = track_slice_move(start, W.points, sl.with_constant(k - 1, cc), cfg, seed)
        if all(o.converged for o in vb + vc):
            break
        log.info("trace paths failed for offsets %s, %s", bb, cc)
    else:
        raise TraceIncomplete(f"trace paths failed after {retries} offset draws")
    res = []
    for w, ob, oc in zip(W.points, vb, vc):
        res.append(
            complex((a - bb) * (p @ oc.endpoint) + (bb - cc) * (p @ np.asarray(w)) + (cc - a) * (p @ ob.endpoint))
        )
    return TraceData(
        k, a, complex(bb), complex(cc), p, list(W.points), [o.endpoint for o in vb], [o.endpoint for o in vc], res
    )


def zsr_threshold(R: Sequence[complex], tol: float = ZSR_TOL) -> float:
    return tol * max(max((abs(r) for r in R), default=0.0), 1.0)


def _smallest_zero_subset(vals: list[complex], thr: float, budget: list[int]):
    """Lexicographically first minimum-cardinality subset summing to ``<= thr``."""
    n = len(vals)
    mags = [abs(v) for v in vals]
    for size in range(1, n + 1):
        # suffix bound: the largest ``m`` magnitudes among indices >= j
        best = [sorted(mags[j:], reverse=True) for j in range(n + 1)]

        def dfs(start, need, acc, chosen):
            budget[0] -= 1
            if budget[0] < 0:
                raise _Budget
            if need == 0:
                return list(chosen) if abs(acc) <= thr else None
            for j in range(start, n - need + 1):
                reach = sum(best[j + 1][: need - 1])
                if abs(acc + vals[j]) - reach > thr:
                    continue
                chosen.append(j)
                hit = dfs(j + 1, need - 1, acc + vals[j], chosen)
                chosen.pop()
                if hit is not None:
                    return hit
            return None

        hit = dfs(0, size, 0j, [])
        if hit is not None:
            return hit
    return None


class _Budget(Exception):
    pass


def min_zero_subsets(
    R: Sequence[complex], tol: float = ZSR_TOL, node_budget: int = NODE_BUDGET, scale: float | None = None
) -> Partition:
    """Repeatedly extract minimum-cardinality subsets of ``R`` with (near) zero sum.

    A sum closes when its modulus is at most ``tol * scale``; ``scale``
    defaults to ``max |r|`` with floor 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    thr = zsr_threshold(R, tol) if scale is None else tol * scale
    remaining = list(range(len(R)))
    groups, cert = [], []
    budget = [node_budget]
    while remaining:
        try:
            hit = _smallest_zero_subset([R[i] for i in remaining], thr, budget)
        except _Budget:
            hit = None
            log.warning("subset search budget exhausted; %d residuals left uncertified", len(remaining))
        if hit is None:
            groups.append(list(remaining))
            cert.append(False)
            break
        g = [remaining[j] for j in hit]
        groups.append(g)
        cert.append(True)
        remaining = [i for i in remaining if i not in g]
    used = node_budget - budget[0]
    return Partition(groups, cert, used)


def _nearest(points: list, q, tol: float) -> int | None:
    d = [float(np.max(np.abs(q - p))) for p in points]
    j = int(np.argmin(d))
    return j if d[j] <= tol * (1 + float(np.max(np.abs(points[j])))) else None


def monodromy_group(
    W: WitnessSet,
    f: PolySystem,
    L: LinearSlice,
    loops: int = MONODROMY_LOOPS,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    match_tol: float = 1e-5,
    loop_slices: Sequence | None = None,
    grow: bool = False,
    F: PolySystem | None = None,
) -> Partition:
    """Orbit partition of ``W`` under random slice loops ``L -> L' -> L'' -> L``.

    With ``grow`` a loop endpoint that matches no point of ``W`` but solves
    ``F`` (default ``f``) on ``L`` is appended to ``W.points``: it lies on
    the same component as the point it came from, so the cascade missed it.
    """
    if loops < 0:
        raise ValueError("loops must be >= 0")
    k = W.dim
    ds = DisjointSet(range(len(W.points)))
    sl = L.head(k)
    start = sliced_system(f, L, k, seed)
    N = f.nvars
    check = F if F is not None else f
    for t in range(loops):
        n = len(W.points)
        if not grow and (n < 2 or len(ds.subsets()) == 1):
            break
        if loop_slices is not None:
            L1, L2 = loop_slices[t]
        else:
            rng = rng_for(seed, "monodromy", k, t)
            L1 = LinearSlice(random_annulus(rng, (k, N)), random_annulus(rng, k))
            L2 = LinearSlice(random_annulus(rng, (k, N)), random_annulus(rng, k))
        pts = list(W.points)
        cur = start
        outs = []
        for target in (L1, L2, sl):
            outs = track_slice_move(cur, pts, target, cfg, seed)
            if not all(o.converged for o in outs):
                break
            pts = [o.endpoint for o in outs]
            cur = cur.with_slice(target)
        else:
            outs = None
        if outs is not None:
            log.info("monodromy loop %d voided by a failed path", t)
            continue
        known = list(W.points)
        perm, fresh = [], []
        for q in pts:
            j = _nearest(known, q, match_tol)
            if j is None and grow and verify_on_system(check, q, 1e-8):
                known.append(q)
                fresh.append(q)
                j = len(known) - 1
            perm.append(j)
        if None in perm or len(set(perm)) != n:
            log.info("monodromy loop %d voided: endpoints do not match the witness set", t)
            continue
        for q in fresh:
            W.points.append(q)
            ds.add(len(W.points) - 1)
        if fresh:
            log.info("monodromy loop %d added %d witness points", t, len(fresh))
        for i, j in enumerate(perm):
            ds.merge(i, j)
    groups = sorted((sorted(g) for g in ds.subsets()), key=min)
    return Partition(groups, [False] * len(groups))


def partition_witness_set(
    W: WitnessSet,
    f: PolySystem,
    L: LinearSlice,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
    loops: int = MONODROMY_LOOPS,
    tol: float = ZSR_TOL,
    trace: TraceData | None = None,
    F: PolySystem | None = None,
    **trace_kw,
) -> tuple[Partition, TraceData | None, Partition | None]:
    """Certified partition of ``W``; also returns the trace data and orbit partition.

    Monodromy loops may append witness points the cascade lost (see
    ``monodromy_group``); ``W.points`` is then longer on return.
    """
    n = len(W.points)
    if n == 0:
        return Partition([], []), None, None
    if W.dim == 0:
        return Partition([[i] for i in range(n)], [True] * n), None, None
    given = trace is not None
    orbits = monodromy_group(W, f, L, loops, cfg, seed) if loops > 0 else None
    if trace is None:
        trace = trace_residuals(W, f, L, cfg, seed, **trace_kw)
    part = _certify(trace, orbits, n, tol)
    if loops > 0 and not given and not all(part.certified):
        # an open group means missing points; loops can recover them
        grown = monodromy_group(W, f, L, loops, cfg, seed + 1, grow=True, F=F)
        if len(W.points) > n:
            n = len(W.points)
            orbits = _join(orbits, grown, n)
            trace = trace_residuals(W, f, L, cfg, seed, **trace_kw)
            part = _certify(trace, orbits, n, tol)
    return part, trace, orbits


def _join(a: Partition | None, b: Partition, n: int) -> Partition:
    ds = DisjointSet(range(n))
    for g in (a.groups if a else []) + b.groups:
        for i in g[1:]:
            ds.merge(g[0], i)
    groups = sorted((sorted(g) for g in ds.subsets()), key=min)
    return Partition(groups, [False] * len(groups))


def _certify(trace: TraceData, orbits: Partition | None, n: int, tol: float) -> Partition:
    coarse = orbits.groups if orbits else [[i] for i in range(n)]
    sums = [trace.group_sum(g) for g in coarse]
    # the threshold scale is set by the point residuals, not the group sums
    top = min_zero_subsets(sums, tol, scale=max(max(abs(r) for r in trace.residuals), 1.0))
    groups = [sorted(i for gi in g for i in coarse[gi]) for g in top.groups]
    order = sorted(range(len(groups)), key=lambda t: groups[t][0])
    part = Partition([groups[t] for t in order], [top.certified[t] for t in order], top.nodes)
    part.check(n)
    return part
