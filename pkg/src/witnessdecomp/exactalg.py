"""Exact rational arithmetic, Buchberger's algorithm and ideal dimension.

Coefficients are :class:`fractions.Fraction` for real rationals and
:class:`GaussRat` for Gaussian rationals ``a + b*i``.  Mixed arithmetic
between the two is closed; mixing with ``complex`` falls back to floats.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Sequence

Monomial = tuple  # tuple[int, ...]

DEFAULT_DENOMINATOR = 10**12


class ExactAlgebraError(ValueError):
    pass


class GaussRat:
    """Gaussian rational ``re + im*i`` with Fraction parts.

    Use :func:`gauss` to build values; it collapses to a plain Fraction
    when the imaginary part vanishes.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _parts(other):
        if isinstance(other, GaussRat):
            return other.re, other.im
        if isinstance(other, Rational):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) + other
        return gauss(self.re + p[0], self.im + p[1])

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) - other
        return gauss(self.re - p[0], self.im - p[1])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) * other
        a, b = self.re, self.im
        c, d = p
        return gauss(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("GaussRat division by zero")
        return GaussRat(self.re / n, -self.im / n)

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) / other
        return self * GaussRat(*p).inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __eq__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) == other
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        return f"({self.re} + {self.im}*i)"


def gauss(re, im=0):
    """Return ``re + im*i`` as a Fraction when real, else a GaussRat."""
    im = Fraction(im)
    if im == 0:
        return Fraction(re)
    return GaussRat(re, im)


def is_exact(c) -> bool:
    return isinstance(c, (Rational, GaussRat))


def rationalize(x: complex, den: int = DEFAULT_DENOMINATOR):
    """Round ``x`` onto the Gaussian grid ``(Z + iZ)/den``."""
    if den < 1:
        raise ExactAlgebraError("denominator must be positive")
    x = complex(x)
    if not (math.isfinite(x.real) and math.isfinite(x.imag)):
        raise ExactAlgebraError(f"cannot rationalize non-finite value {x!r}")
    return gauss(Fraction(round(x.real * den), den), Fraction(round(x.imag * den), den))


# --------------------------------------------------------------------------
# monomials and polynomials


@lru_cache(maxsize=None)
def _grevlex_key(m: Monomial):
    return (sum(m),) + tuple(-e for e in reversed(m))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def _mono_div(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


def _mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def _divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _coprime(a: Monomial, b: Monomial) -> bool:
    return all(x == 0 or y == 0 for x, y in zip(a, b))


@dataclass
class ExactPoly:
    """Sparse polynomial with exact coefficients; zero terms never stored."""

    terms: dict
    nvars: int

    def __post_init__(self):
        self.terms = {m: c for m, c in self.terms.items() if c != 0}
        for m, c in self.terms.items():
            if len(m) != self.nvars:
                raise ExactAlgebraError("monomial length does not match nvars")
            if not is_exact(c):
                raise ExactAlgebraError(f"inexact coefficient {c!r}")

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def lm(self) -> Monomial:
        return max(self.terms, key=_grevlex_key)

    @property
    def lc(self):
        return self.terms[self.lm]

    def monic(self) -> "ExactPoly":
        inv = 1 / self.lc
        return ExactPoly({m: c * inv for m, c in self.terms.items()}, self.nvars)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _grevlex_key(t[0]), reverse=True)

    def __eq__(self, other):
        return isinstance(other, ExactPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __repr__(self):
        return f"ExactPoly({self.sorted_terms()!r}, nvars={self.nvars})"


@dataclass
class GroebnerBasis:
    generators: list
    nvars: int
    order: str = "grevlex"
    pairs_processed: int = field(default=0, compare=False)

    @property
    def leading_monomials(self) -> list:
        return [g.lm for g in self.generators]

    def is_unit(self) -> bool:
        zero = (0,) * self.nvars
        return any(g.lm == zero for g in self.generators)


class BuchbergerBudgetExceeded(RuntimeError):
    def __init__(self, pairs):
        super().__init__(f"Buchberger aborted after {pairs} S-pairs")
        self.pairs = pairs


def _reduce(p: dict, basis: list, lms: list) -> dict:
    """Full reduction of ``p`` modulo the monic polynomials in ``basis``."""
    p = dict(p)
    heap = [(tuple(-k for k in _grevlex_key(m)), m) for m in p]
    heapq.heapify(heap)
    rem = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = p.pop(m, 0)
        if c == 0:
            continue
        for g, lm in zip(basis, lms):
            if _divides(lm, m):
                q = _mono_div(m, lm)
                for gm, gc in g.items():
                    nm = _mono_mul(gm, q)
                    if nm == m:
                        continue
                    if nm in p:
                        v = p[nm] - c * gc
                        if v == 0:
                            del p[nm]
                        else:
                            p[nm] = v
                    else:
                        p[nm] = -c * gc
                        heapq.heappush(heap, (tuple(-k for k in _grevlex_key(nm)), nm))
                break
        else:
            rem[m] = c
    return rem


def _lm_of(d: dict) -> Monomial:
    return max(d, key=_grevlex_key)


def _monic(d: dict) -> dict:
    inv = 1 / d[_lm_of(d)]
    return {m: c * inv for m, c in d.items()}


def buchberger(gens: Sequence[ExactPoly], order: str = "grevlex", max_pairs: int | None = None) -> GroebnerBasis:
    """Reduced Groebner basis in degree-reverse-lexicographic order.

    Pairs are selected by the normal strategy (smallest lcm first); useless
    pairs are discarded with the Gebauer-Moeller form of Buchberger's
    product and chain criteria.
    """
    if order != "grevlex":
        raise ExactAlgebraError(f"unsupported monomial order {order!r}")
    gens = list(gens)
    if not gens:
        raise ExactAlgebraError("empty generator list")
    nvars = gens[0].nvars
    if any(g.nvars != nvars for g in gens):
        raise ExactAlgebraError("generators disagree on the number of variables")

    G: list[dict] = []
    lms: list[Monomial] = []
    live: list[bool] = []
    pairs: list = []
    counter = itertools.count()

    def add(h: dict):
        lmh = _lm_of(h)
        k = len(G)
        # Gebauer-Moeller update
        new = {}
        for i in range(k):
            if live[i]:
                new.setdefault(_mono_lcm(lms[i], lmh), []).append(i)
        keep_new = []
        lcms_sorted = sorted(new, key=_grevlex_key)
        minimal = []
        for L in lcms_sorted:
            if any(_divides(M, L) for M in minimal):
                continue
            minimal.append(L)
            idx = new[L]
            # product criterion: drop the whole class if any pair is coprime
            if any(_coprime(lms[i], lmh) for i in idx):
                continue
            keep_new.append((L, min(idx)))
        old = []
        for item in pairs:
            _, _, i, j, L = item
            if _divides(lmh, L) and L != _mono_lcm(lms[i], lmh) and L != _mono_lcm(lms[j], lmh):
                continue
            old.append(item)
        pairs[:] = old
        heapq.heapify(pairs)
        for L, i in keep_new:
            heapq.heappush(pairs, (_grevlex_key(L), next(counter), i, k, L))
        for i in range(k):
            if live[i] and _divides(lmh, lms[i]):
                live[i] = False
        G.append(h)
        lms.append(lmh)
        live.append(True)

    for g in sorted((g for g in gens if not g.is_zero()), key=lambda g: _grevlex_key(g.lm)):
        r = _reduce(g.terms, [G[i] for i in range(len(G)) if live[i]], [lms[i] for i in range(len(G)) if live[i]])
        if r:
            add(_monic(r))

    processed = 0
    while pairs:
        _, _, i, j, L = heapq.heappop(pairs)
        processed += 1
        if max_pairs is not None and processed > max_pairs:
            raise BuchbergerBudgetExceeded(processed)
        qi, qj = _mono_div(L, lms[i]), _mono_div(L, lms[j])
        s = {}
        for m, c in G[i].items():
            s[_mono_mul(m, qi)] = c
        for m, c in G[j].items():
            nm = _mono_mul(m, qj)
            v = s.get(nm, 0) - c
            if v == 0:
                s.pop(nm, None)
            else:
                s[nm] = v
        basis = [G[t] for t in range(len(G)) if live[t]]
        blms = [lms[t] for t in range(len(G)) if live[t]]
        r = _reduce(s, basis, blms)
        if r:
            add(_monic(r))

    # minimal then reduced basis
    idx = [t for t in range(len(G)) if live[t]]
    minimal = []
    for t in sorted(idx, key=lambda t: _grevlex_key(lms[t])):
        if not any(_divides(lms[u], lms[t]) for u in minimal):
            minimal.append(t)
    reduced = []
    for t in minimal:
        others = [G[u] for u in minimal if u != t]
        olms = [lms[u] for u in minimal if u != t]
        lead = {lms[t]: Fraction(1)}
        tail = {m: c for m, c in G[t].items() if m != lms[t]}
        tail = _reduce(tail, others, olms)
        lead.update(tail)
        reduced.append(ExactPoly(lead, nvars))
    reduced.sort(key=lambda g: _grevlex_key(g.lm), reverse=True)
    return GroebnerBasis(reduced, nvars, order, processed)


def ideal_dimension(gb: GroebnerBasis) -> int:
    """Krull dimension from the leading-term ideal; -1 for the unit ideal."""
    if gb.is_unit():
        return -1
    supports = [frozenset(k for k, e in enumerate(m) if e) for m in gb.leading_monomials]
    n = gb.nvars
    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            s = frozenset(subset)
            if all(not sup <= s for sup in supports):
                return size
    return 0


def local_dim_bound(f, w: Iterable[complex], den: int = DEFAULT_DENOMINATOR, max_pairs: int | None = None) -> int:
    """Dimension of ``V(f - f(w'))`` where ``w'`` is ``w`` rounded to the grid.

    ``f`` must be a square system whose coefficients are all exact.  The
    shifted ideal contains ``w'`` by construction, so the result is >= 0.
    """
    if f.npolys != f.nvars:
        raise ExactAlgebraError("local dimension bound needs a square system")
    if not f.is_exact:
        raise ExactAlgebraError("system has inexact coefficients; refusing to rationalize it")
    wr = [rationalize(c, den) for c in w]
    if len(wr) != f.nvars:
        raise ExactAlgebraError("point length does not match the number of variables")
    gens = []
    zero = (0,) * f.nvars
    for p in f.polys:
        value = p.evaluate_exact(wr)
        terms = dict(p.terms)
        terms[zero] = terms.get(zero, 0) - value
        gens.append(ExactPoly(terms, f.nvars))
    return ideal_dimension(buchberger(gens, max_pairs=max_pairs))


def exact_polys(system) -> list[ExactPoly]:
    """Exact copies of the polynomials of a system with exact coefficients."""
    if not system.is_exact:
        raise ExactAlgebraError("system has inexact coefficients")
    return [ExactPoly(dict(p.terms), system.nvars) for p in system.polys]
