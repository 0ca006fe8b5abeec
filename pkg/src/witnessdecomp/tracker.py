"""Predictor-corrector path tracking for square polynomial homotopies.

The tracked family is ``H(x, t) = gamma*t*start(x) + (1 - t)*target(x)`` for
``t`` running from 1 down to 0.  Steps use a fourth-order Runge-Kutta
predictor on ``dx/dt = -H_x^{-1} H_t`` and a Newton corrector.

Singular endpoints (multiple roots, points on positive-dimensional solution
sets) are not discarded: the final corrector at ``t = 0`` tolerates linear
convergence and accepts on a residual test, and the outcome is tagged
``SINGULAR``.  Paths whose start point is already singular (points on a
nonreduced component) are tracked in the same tolerant mode throughout.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .polysys import (
    CompiledSystem,
    DimensionMismatch,
    LinearSlice,
    Poly,
    PolySystem,
    evaluate,
    normalized,
    rng_for,
)


SLICE_DETOUR = 0.1


class Status(str, enum.Enum):
    SUCCESS = "success"
    DIVERGED = "diverged"
    SINGULAR = "singular"
    STEP_LIMIT = "step_limit"


@dataclass(frozen=True)
class TrackerConfig:
    step_init: float = 0.05
    step_min: float = 1e-10
    newton_tol: float = 1e-10
    newton_iters_max: int = 10
    endpoint_tol: float = 1e-11
    infinity_threshold: float = 1e8
    max_steps: int = 5000
    step_max: float = 0.2
    path_tol: float = 1e-8
    corrector_iters: int = 3
    singular_rcond: float = 1e-8
    near_singular_rcond: float = 1e-4
    singular_iters_max: int = 60
    residual_floor: float = 1e-13
    residual_accept: float = 1e-9

    def __post_init__(self):
        for name in ("step_init", "step_min", "newton_tol", "endpoint_tol", "infinity_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.step_min < self.step_init < 1:
            raise ValueError("need step_min < step_init < 1")


@dataclass
class PathOutcome:
    status: Status
    endpoint: np.ndarray
    residual: float
    steps_taken: int
    rcond: float = float("nan")
    t_final: float = 0.0

    @property
    def converged(self) -> bool:
        """True when the endpoint is a trustworthy solution at ``t = 0``."""
        return self.status in (Status.SUCCESS, Status.SINGULAR) and self.t_final == 0.0


@dataclass
class HomotopyProblem:
    start: PolySystem
    target: PolySystem
    gamma: complex = 1.0
    # nonzero: follow the complex arc t(s) = s + i*detour*s*(1-s) instead of real t
    detour: float = 0.0

    def __post_init__(self):
        if self.start.nvars != self.target.nvars or self.start.npolys != self.target.npolys:
            raise DimensionMismatch("start and target systems must have the same shape")
        if self.start.npolys != self.start.nvars:
            raise DimensionMismatch("homotopy systems must be square")
        self._stacked = CompiledSystem(list(self.start.polys) + list(self.target.polys), self.start.nvars)
        self._n = self.start.npolys
        self.maxdeg = max(max(self.start.degrees), max(self.target.degrees))

    def _t(self, s):
        if self.detour:
            return s + 1j * self.detour * s * (1 - s), 1 + 1j * self.detour * (1 - 2 * s)
        return s, 1.0

    def evaluate(self, x, s):
        """Return ``H``, ``H_x`` and ``dH/ds`` at path parameter ``s``."""
        v, J = self._stacked.evaluate_jacobian(x)
        n, g = self._n, self.gamma
        t, dt = self._t(s)
        S, T = v[:n], v[n:]
        H = g * t * S + (1 - t) * T
        Hx = g * t * J[:n] + (1 - t) * J[n:]
        Ht = (g * S - T) * dt
        return H, Hx, Ht

    def residual_scale(self, x, s) -> float:
        m = self._stacked.magnitudes(x)
        n = self._n
        t = self._t(s)[0]
        return max(1.0, float(np.max(abs(self.gamma * t) * m[:n] + abs(1 - t) * m[n:])))


def _solve(A, b, singular: bool):
    if not singular:
        try:
            return np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            pass
    return np.linalg.lstsq(A, b, rcond=1e-10)[0]


def _rcond(A) -> float:
    # systems are scaled to unit coefficients, so a Jacobian that is tiny
    # everywhere counts as singular rather than merely badly scaled
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[-1] / max(s[0], 1.0))


def _norm(v) -> float:
    return float(np.max(np.abs(v))) if len(v) else 0.0


class _Tracker:
    def __init__(self, h: HomotopyProblem, cfg: TrackerConfig):
        self.h = h
        self.cfg = cfg

    def tangent(self, x, t, singular):
        _, Hx, Ht = self.h.evaluate(x, t)
        return -_solve(Hx, Ht, singular)

    def predict(self, x, t, dt, singular):
        # dt is negative: t decreases
        k1 = self.tangent(x, t, singular)
        k2 = self.tangent(x + 0.5 * dt * k1, t + 0.5 * dt, singular)
        k3 = self.tangent(x + 0.5 * dt * k2, t + 0.5 * dt, singular)
        k4 = self.tangent(x + dt * k3, t + dt, singular)
        return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def correct(self, x, t, tolerant):
        """Newton at fixed ``t``.  Returns (ok, x, residual)."""
        cfg = self.cfg
        iters = cfg.singular_iters_max if tolerant else cfg.corrector_iters
        tol = cfg.endpoint_tol if t == 0 else (cfg.newton_tol if tolerant else cfg.path_tol)
        prev = np.inf
        for _ in range(iters):
            H, Hx, _ = self.h.evaluate(x, t)
            res = _norm(H)
            scale = self.h.residual_scale(x, t)
            if tolerant and res <= cfg.residual_floor * scale:
                return True, x, res
            dx = _solve(Hx, -H, tolerant)
            ndx = _norm(dx)
            if not np.isfinite(ndx):
                return False, x, np.inf
            x = x + dx
            if ndx <= tol * (1 + _norm(x)):
                res = _norm(self.h.evaluate(x, t)[0])
                # a tiny step along a flat direction is not convergence
                return res <= cfg.residual_accept * self.h.residual_scale(x, t), x, res
            if tolerant:
                if ndx > 0.95 * prev and ndx > 1e-6 * (1 + _norm(x)):
                    return False, x, res
            elif ndx > 0.5 * prev:
                return False, x, res
            prev = ndx
        if tolerant:
            H = self.h.evaluate(x, t)[0]
            res = _norm(H)
            return res <= cfg.residual_floor * self.h.residual_scale(x, t), x, res
        return False, x, np.inf

    def run(self, x0) -> PathOutcome:
        cfg = self.cfg
        x = np.asarray(x0, dtype=complex).copy()
        t = 1.0
        _, Hx, _ = self.h.evaluate(x, t)
        singular = _rcond(Hx) < cfg.singular_rcond
        dt = cfg.step_init
        streak = 0
        steps = 0
        while t > 0:
            if steps >= cfg.max_steps:
                return self._finish(Status.STEP_LIMIT, x, t, steps)
            steps += 1
            h = min(dt, t)
            t1 = t - h
            if t1 < 1e-14:
                t1 = 0.0
                h = t
            xp = self.predict(x, t, -h, singular)
            final = t1 == 0.0
            ok, x1, _ = self.correct(xp, t1, tolerant=singular or final)
            if not ok and not singular and _rcond(self.h.evaluate(x, t)[1]) < cfg.near_singular_rcond:
                # along a double root Newton only halves the error each step;
                # accept the slow solve if it stays next to the prediction
                ok, x1, _ = self.correct(xp, t1, tolerant=True)
                ok = ok and _norm(x1 - xp) <= 1e-4 * (1 + _norm(x))
            if ok and final and not singular:
                # a tolerant endpoint solve must not wander far from the path
                ok = _norm(x1 - xp) <= 1e-2 * (1 + _norm(x))
            if ok and np.all(np.isfinite(x1)):
                x, t = x1, t1
                streak += 1
                if streak >= 5:
                    dt = min(2 * dt, cfg.step_max)
                    streak = 0
                if _norm(x) > cfg.infinity_threshold:
                    return self._finish(Status.DIVERGED, x, t, steps)
            else:
                dt *= 0.5
                streak = 0
                if _norm(xp) > cfg.infinity_threshold:
                    return self._finish(Status.DIVERGED, xp, t, steps)
                if dt < cfg.step_min:
                    return self._finish(Status.SINGULAR, x, t, steps)
        return self._finish(None, x, 0.0, steps)

    def _finish(self, status, x, t, steps) -> PathOutcome:
        H, Hx, _ = self.h.evaluate(x, t)
        res = _norm(H)
        rc = _rcond(Hx) if np.all(np.isfinite(Hx)) else 0.0
        if status is None:
            status = Status.SUCCESS if rc >= self.cfg.singular_rcond else Status.SINGULAR
        return PathOutcome(status, x, res, steps, rc, t)


def track_path(h: HomotopyProblem, start_pt, cfg: TrackerConfig | None = None) -> PathOutcome:
    """Track one solution of ``h.start`` to ``t = 0``."""
    return _Tracker(h, cfg or TrackerConfig()).run(start_pt)


def track_many(h: HomotopyProblem, points: Sequence, cfg: TrackerConfig | None = None) -> list[PathOutcome]:
    tr = _Tracker(h, cfg or TrackerConfig())
    return [tr.run(p) for p in points]


# --------------------------------------------------------------------------
# total-degree solving


def random_gamma(seed: int, *keys) -> complex:
    theta = rng_for(seed, "gamma", *keys).uniform(0, 2 * np.pi)
    return complex(np.exp(1j * theta))


def total_degree_start(degrees: Sequence[int], varnames) -> tuple[PolySystem, list[np.ndarray]]:
    """Start system ``x_k^d_k - 1`` and its roots-of-unity solutions."""
    n = len(degrees)
    polys = []
    for k, d in enumerate(degrees):
        if d < 1:
            raise ValueError("total-degree homotopy needs every degree >= 1")
        m = [0] * n
        m[k] = d
        polys.append(Poly({tuple(m): 1.0 + 0j, (0,) * n: -1.0 + 0j}, n))
    roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in degrees]
    starts = [np.array(c, dtype=complex) for c in itertools.product(*roots)]
    return PolySystem(tuple(polys), tuple(varnames)), starts


def solve_total_degree(f: PolySystem, cfg: TrackerConfig | None = None, seed: int = 0) -> list[PathOutcome]:
    """Track all Bezout-many paths from ``x_k^d_k - 1`` to ``f``."""
    if not f.is_square:
        raise DimensionMismatch("total-degree solving needs a square system")
    f = normalized(f)
    start, pts = total_degree_start(f.degrees, f.varnames)
    h = HomotopyProblem(start, f, random_gamma(seed, "total-degree", f.nvars))
    return track_many(h, pts, cfg)


# --------------------------------------------------------------------------
# slice moves


@dataclass
class SlicedSystem:
    """Square system: ``base`` rows (``N - k`` of them) followed by ``k`` slice rows."""

    base: PolySystem
    slice: LinearSlice

    def __post_init__(self):
        if self.base.npolys + self.slice.rows != self.base.nvars:
            raise DimensionMismatch("base rows plus slice rows must equal the number of variables")

    @property
    def system(self) -> PolySystem:
        if self.slice.rows == 0:
            return self.base
        return PolySystem(tuple(self.base.polys) + tuple(self.slice.polys(self.base.nvars)), self.base.varnames)

    def with_slice(self, sl: LinearSlice) -> "SlicedSystem":
        return SlicedSystem(self.base, sl)


def track_slice_move(
    start: SlicedSystem,
    points: Sequence,
    slice_target: LinearSlice,
    cfg: TrackerConfig | None = None,
    seed: int = 0,
) -> list[PathOutcome]:
    """Move every point from ``start.slice`` to ``slice_target``.

    The homotopy is the straight line between the two sliced systems (no
    gamma factor); outcome ``i`` belongs to input point ``i``.
    """
    cfg = cfg or TrackerConfig()
    sys0 = start.system
    tol = cfg.newton_tol * 10
    for p in points:
        scale = max(1.0, _norm(np.asarray(p)) ** max(sys0.degrees))
        if _norm(evaluate(sys0, p)) > max(tol, 1e-8) * scale:
            raise ValueError("start point does not satisfy the start system")
    if points and np.allclose(start.slice.coeffs, slice_target.coeffs) and np.allclose(
        start.slice.constants, slice_target.constants
    ):
        return [
            PathOutcome(Status.SUCCESS, np.asarray(p, dtype=complex), _norm(evaluate(sys0, p)), 0, 1.0, 0.0)
            for p in points
        ]
    h = HomotopyProblem(sys0, start.with_slice(slice_target).system, 1.0)
    outs = track_many(h, points, cfg)
    # a real straight line can run into a branch point; go around it
    for detour in (SLICE_DETOUR, -SLICE_DETOUR):
        bad = [i for i, o in enumerate(outs) if not o.converged]
        if not bad:
            break
        hd = replace(h, detour=detour)
        for i in bad:
            o = track_path(hd, points[i], cfg)
            if o.converged:
                outs[i] = o
    return outs


# --------------------------------------------------------------------------
# endpoint hygiene


def dedup(points: Sequence, tol: float = 1e-6) -> list[np.ndarray]:
    """Greedy max-norm clustering; the first member of a cluster is kept."""
    kept: list[np.ndarray] = []
    for p in points:
        p = np.asarray(p, dtype=complex)
        if not any(_norm(p - q) <= tol for q in kept):
            kept.append(p)
    return kept


def relative_residual(F: PolySystem, x) -> float:
    """``|F(x)|`` divided by the row-wise magnitude ``sum |c| |x^m|`` (floor 1)."""
    C = F.compiled
    x = np.asarray(x, dtype=complex)
    return _norm(C.evaluate(x)) / max(1.0, float(np.max(C.magnitudes(x))))


def cluster_endpoints(
    outcomes: Sequence[PathOutcome],
    F: PolySystem,
    tol: float = 1e-6,
    radius: float = 1e-2,
    midpoint_tol: float = 1e-8,
) -> list[np.ndarray]:
    """Distinct converged endpoints of paths whose target is ``F``.

    Endpoints at a multiple root are only accurate to roughly ``eps^(1/m)``,
    so besides merging at ``tol`` two endpoints also merge when they lie
    within ``radius`` and their midpoint still solves ``F`` to
    ``midpoint_tol`` (distinct roots fail that test).  Clusters are the
    transitive closure of these merges; a cluster of several endpoints is
    represented by its centroid, which cancels the leading error of a
    multiple-root cluster.  Output order follows first members.
    """
    Fn = normalized(F)
    pts = [np.asarray(o.endpoint, dtype=complex) for o in outcomes if o.converged]
    ds = DisjointSet(range(len(pts)))
    for i, p in enumerate(pts):
        for j in range(i):
            if ds.connected(i, j):
                continue
            dist = _norm(p - pts[j])
            if dist <= tol or (
                dist <= radius * (1 + _norm(p)) and relative_residual(Fn, (p + pts[j]) / 2) <= midpoint_tol
            ):
                ds.merge(j, i)
    groups = sorted(ds.subsets(), key=min)
    return [pts[min(g)] if len(g) == 1 else np.mean([pts[k] for k in sorted(g)], axis=0) for g in groups]


def verify_on_system(F: PolySystem, pt, tol: float = 1e-8) -> bool:
    """Residual test ``|F(pt)| <= tol * max(1, |pt|^deg)`` on unit-scaled ``F``."""
    pt = np.asarray(pt, dtype=complex)
    if pt.shape != (F.nvars,):
        raise DimensionMismatch("point length does not match the system")
    Fn = _normalized_cache(F)
    scale = max(1.0, _norm(pt) ** max(Fn.degrees))
    return _norm(evaluate(Fn, pt)) <= tol * scale


_NORMALIZED: dict = {}


def _normalized_cache(F: PolySystem) -> PolySystem:
    key = id(F)
    hit = _NORMALIZED.get(key)
    if hit is None or hit[0] is not F:
        if len(_NORMALIZED) > 256:
            _NORMALIZED.clear()
        hit = (F, normalized(F))
        _NORMALIZED[key] = hit
    return hit[1]


def with_config(cfg: TrackerConfig | None, **changes) -> TrackerConfig:
    return replace(cfg or TrackerConfig(), **changes)
