"""Polynomial systems: parsing, evaluation, Jacobians, squaring-up, slices.

Coefficients are kept exactly (``Fraction`` / :class:`GaussRat`) whenever the
input spells them exactly; decimal literals and all randomized data are
binary64 ``complex``.  Numerical work goes through a compiled monomial table
(:class:`CompiledSystem`) built once per system.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .exactalg import GaussRat, is_exact

I_UNIT = GaussRat(0, 1)


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


class DimensionMismatch(ValueError):
    pass


# --------------------------------------------------------------------------
# randomness


def rng_for(seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``seed`` and a tuple of int/str keys."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return np.random.default_rng(words)


def random_annulus(rng: np.random.Generator, shape=()) -> np.ndarray:
    """Complex numbers uniform (by area) on 0.5 <= |z| <= 1."""
    r = np.sqrt(rng.uniform(0.25, 1.0, size=shape))
    theta = rng.uniform(0.0, 2 * np.pi, size=shape)
    return r * np.exp(1j * theta)


# --------------------------------------------------------------------------
# polynomials


def _grlex_key(m):
    return (sum(m), m)


def _format_coeff(c) -> str:
    if isinstance(c, Fraction):
        return str(c) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, GaussRat):
        return f"({_format_coeff(c.re)} + {_format_coeff(c.im)}*i)"
    c = complex(c)
    return f"({c.real!r} + {c.imag!r}*i)"


class Poly:
    """Immutable sparse polynomial ``{exponent tuple: coefficient}``."""

    __slots__ = ("terms", "nvars", "__dict__")

    def __init__(self, terms: dict, nvars: int):
        clean = {}
        for m, c in terms.items():
            if len(m) != nvars:
                raise DimensionMismatch("monomial length does not match nvars")
            if c != 0:
                clean[tuple(int(e) for e in m)] = c
        self.terms = clean
        self.nvars = nvars

    @classmethod
    def constant(cls, c, nvars: int) -> "Poly":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, k: int, nvars: int) -> "Poly":
        m = [0] * nvars
        m[k] = 1
        return cls({tuple(m): Fraction(1)}, nvars)

    @classmethod
    def linear(cls, coeffs: Sequence, const, nvars: int) -> "Poly":
        terms = {(0,) * nvars: const}
        for k, c in enumerate(coeffs):
            m = [0] * nvars
            m[k] = 1
            terms[tuple(m)] = c
        return cls(terms, nvars)

    def is_zero(self) -> bool:
        return not self.terms

    @cached_property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, 0)

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionMismatch("polynomials live in different rings")
            return other
        return Poly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Poly(terms, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly({m: c * other for m, c in self.terms.items()}, self.nvars)
        other = self._coerce(other)
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0) + c1 * c2
        return Poly(terms, self.nvars)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial exponents must be nonnegative integers")
        result = Poly.constant(Fraction(1), self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        return isinstance(other, Poly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms)))

    def diff(self, k: int) -> "Poly":
        terms = {}
        for m, c in self.terms.items():
            if m[k]:
                nm = list(m)
                nm[k] -= 1
                terms[tuple(nm)] = c * m[k]
        return Poly(terms, self.nvars)

    def extend(self, nvars: int) -> "Poly":
        """The same polynomial in a ring with extra trailing variables."""
        pad = (0,) * (nvars - self.nvars)
        return Poly({m + pad: c for m, c in self.terms.items()}, nvars)

    def evaluate(self, pt) -> complex:
        pt = [complex(v) for v in pt]
        total = 0j
        for m, c in self.terms.items():
            v = complex(c)
            for x, e in zip(pt, m):
                if e:
                    v *= x**e
            total += v
        return total

    def evaluate_exact(self, pt):
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for x, e in zip(pt, m):
                for _ in range(e):
                    v = v * x
            total = total + v
        return total

    def numeric(self) -> "Poly":
        return Poly({m: complex(c) for m, c in self.terms.items()}, self.nvars)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def to_string(self, varnames: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = [_format_coeff(c)]
            for name, e in zip(varnames, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"Poly({self.to_string([f'x{k + 1}' for k in range(self.nvars)])})"


class CompiledSystem:
    """Dense monomial tables for fast evaluation of a list of polynomials."""

    def __init__(self, polys: Sequence[Poly], nvars: int):
        monos = sorted({m for p in polys for m in p.terms}) or [(0,) * nvars]
        index = {m: t for t, m in enumerate(monos)}
        self.nvars = nvars
        self.npolys = len(polys)
        self.exps = np.array(monos, dtype=np.int64).reshape(len(monos), nvars)
        self.coeffs = np.zeros((len(polys), len(monos)), dtype=complex)
        for k, p in enumerate(polys):
            for m, c in p.terms.items():
                self.coeffs[k, index[m]] = complex(c)
        self.maxdeg = int(self.exps.max()) if self.exps.size else 0
        self._cols = np.arange(nvars)
        # exponent tables for d/dx_v of every monomial
        dexps = np.repeat(self.exps[None, :, :], nvars, axis=0)
        for v in range(nvars):
            dexps[v, :, v] = np.maximum(dexps[v, :, v] - 1, 0)
        self.dexps = dexps
        self.dfactor = self.exps.T.astype(float)  # (nvars, nmonos)

    def _powers(self, x: np.ndarray) -> np.ndarray:
        P = np.empty((self.nvars, self.maxdeg + 1), dtype=complex)
        P[:, 0] = 1.0
        for k in range(1, self.maxdeg + 1):
            P[:, k] = P[:, k - 1] * x
        return P

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        P = self._powers(x)
        mons = P[self._cols, self.exps].prod(axis=1)
        return self.coeffs @ mons

    def magnitudes(self, x) -> np.ndarray:
        """Row-wise sum of |c|*|x^m|; the natural scale of a residual at ``x``."""
        a = np.abs(np.asarray(x, dtype=complex))
        P = np.empty((self.nvars, self.maxdeg + 1))
        P[:, 0] = 1.0
        for k in range(1, self.maxdeg + 1):
            P[:, k] = P[:, k - 1] * a
        return np.abs(self.coeffs) @ P[self._cols, self.exps].prod(axis=1)

    def evaluate_jacobian(self, x):
        x = np.asarray(x, dtype=complex)
        P = self._powers(x)
        mons = P[self._cols, self.exps].prod(axis=1)
        dm = P[self._cols, self.dexps].prod(axis=2) * self.dfactor
        return self.coeffs @ mons, self.coeffs @ dm.T


@dataclass(frozen=True)
class PolySystem:
    polys: tuple
    varnames: tuple

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "varnames", tuple(self.varnames))
        if not self.polys:
            raise ValueError("a polynomial system needs at least one polynomial")
        n = len(self.varnames)
        for p in self.polys:
            if p.nvars != n:
                raise DimensionMismatch("polynomial ring does not match the declared variables")

    @classmethod
    def from_polys(cls, polys, nvars: int | None = None, varnames=None) -> "PolySystem":
        polys = list(polys)
        if varnames is None:
            nvars = polys[0].nvars if nvars is None else nvars
            varnames = [f"x{k + 1}" for k in range(nvars)]
        return cls(tuple(polys), tuple(varnames))

    @property
    def nvars(self) -> int:
        return len(self.varnames)

    @property
    def npolys(self) -> int:
        return len(self.polys)

    @property
    def degrees(self) -> list[int]:
        return [p.degree for p in self.polys]

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for p in self.polys)

    @property
    def is_square(self) -> bool:
        return self.npolys == self.nvars

    @cached_property
    def compiled(self) -> CompiledSystem:
        return CompiledSystem(self.polys, self.nvars)

    def __hash__(self):
        return hash((self.polys, self.varnames))

    def to_string(self) -> str:
        lines = [f"vars {', '.join(self.varnames)};"]
        lines += [p.to_string(self.varnames) + ";" for p in self.polys]
        return "\n".join(lines) + "\n"

    __str__ = to_string

    def numeric(self) -> "PolySystem":
        return PolySystem(tuple(p.numeric() for p in self.polys), self.varnames)


def _check_point(sys: PolySystem, pt) -> np.ndarray:
    pt = np.asarray(pt, dtype=complex)
    if pt.shape != (sys.nvars,):
        raise DimensionMismatch(f"point has shape {pt.shape}, expected ({sys.nvars},)")
    return pt


def evaluate(sys: PolySystem, pt) -> np.ndarray:
    return sys.compiled.evaluate(_check_point(sys, pt))


def jacobian(sys: PolySystem, pt) -> np.ndarray:
    return sys.compiled.evaluate_jacobian(_check_point(sys, pt))[1]


def numeric_rank(M, tol: float = 1e-8) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        raise ValueError("empty matrix")
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def generic_rank(sys: PolySystem, seed: int, tol: float = 1e-8) -> int:
    """Rank of the Jacobian at a random complex point."""
    pt = random_annulus(rng_for(seed, "rank-point"), sys.nvars)
    return numeric_rank(jacobian(sys, pt), tol)


# --------------------------------------------------------------------------
# randomization and slices


@dataclass(frozen=True)
class RandomizationMatrix:
    matrix: np.ndarray
    seed: int | None = None

    @classmethod
    def random(cls, rows: int, cols: int, seed: int) -> "RandomizationMatrix":
        M = random_annulus(rng_for(seed, "randomize", rows, cols), (rows, cols))
        return cls(M, seed)

    @property
    def shape(self):
        return self.matrix.shape


def combine(polys: Sequence[Poly], matrix) -> list[Poly]:
    """Rows of ``matrix @ polys`` as polynomials."""
    matrix = np.asarray(matrix)
    nvars = polys[0].nvars
    out = []
    for row in matrix:
        terms: dict = {}
        for c, p in zip(row, polys):
            c = complex(c)
            if c == 0:
                continue
            for m, v in p.terms.items():
                terms[m] = terms.get(m, 0) + c * complex(v)
        out.append(Poly(terms, nvars))
    return out


def square_up(F: PolySystem, lam) -> PolySystem:
    """Replace ``F`` (n polys) by N generic combinations ``lam @ F``."""
    M = lam.matrix if isinstance(lam, RandomizationMatrix) else np.asarray(lam)
    if M.shape != (F.nvars, F.npolys):
        raise DimensionMismatch(f"randomization matrix has shape {M.shape}, expected {(F.nvars, F.npolys)}")
    if F.npolys == F.nvars and np.array_equal(M, np.eye(F.nvars)):
        return F
    return PolySystem(tuple(combine(F.polys, M)), F.varnames)


@dataclass(frozen=True)
class LinearSlice:
    """Affine forms ``l_j(x) = constants[j] + coeffs[j] @ x``."""

    coeffs: np.ndarray
    constants: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_2d(np.asarray(self.coeffs, dtype=complex)))
        object.__setattr__(self, "constants", np.asarray(self.constants, dtype=complex).reshape(-1))
        if self.coeffs.shape[0] != self.constants.shape[0]:
            raise DimensionMismatch("slice rows and constants disagree")

    @property
    def rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def nvars(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, x) -> np.ndarray:
        return self.coeffs @ np.asarray(x, dtype=complex) + self.constants

    def head(self, k: int) -> "LinearSlice":
        return LinearSlice(self.coeffs[:k], self.constants[:k])

    def with_constant(self, row: int, value: complex) -> "LinearSlice":
        const = self.constants.copy()
        const[row] = value
        return LinearSlice(self.coeffs, const)

    def through(self, point) -> "LinearSlice":
        """Same normals, shifted to pass through ``point``."""
        return LinearSlice(self.coeffs, -self.coeffs @ np.asarray(point, dtype=complex))

    def polys(self, nvars: int | None = None) -> list[Poly]:
        nvars = self.nvars if nvars is None else nvars
        out = []
        for row, c0 in zip(self.coeffs, self.constants):
            coeffs = list(complex(c) for c in row) + [0j] * (nvars - self.nvars)
            out.append(Poly.linear(coeffs, complex(c0), nvars))
        return out

    def full_rank(self, tol: float = 1e-12) -> bool:
        return numeric_rank(self.coeffs, tol) == self.rows

    @classmethod
    def from_polys(cls, polys: Sequence[Poly]) -> "LinearSlice":
        nvars = polys[0].nvars
        coeffs = np.zeros((len(polys), nvars), dtype=complex)
        const = np.zeros(len(polys), dtype=complex)
        for j, p in enumerate(polys):
            if p.degree > 1:
                raise ValueError("slice polynomials must be affine-linear")
            for m, c in p.terms.items():
                if sum(m) == 0:
                    const[j] = complex(c)
                else:
                    coeffs[j, m.index(1)] = complex(c)
        return cls(coeffs, const)


def random_slice(k: int, N: int, seed: int) -> LinearSlice:
    if not 0 <= k <= N:
        raise ValueError(f"slice needs 0 <= k <= N, got k={k}, N={N}")
    rng = rng_for(seed, "slice", k, N)
    return LinearSlice(random_annulus(rng, (k, N)), random_annulus(rng, k))


def normalized(sys: PolySystem) -> PolySystem:
    """Numeric copy with each polynomial scaled to unit max coefficient."""
    polys = []
    for p in sys.polys:
        scale = max(abs(complex(c)) for c in p.terms.values())
        polys.append(Poly({m: complex(c) / scale for m, c in p.terms.items()}, p.nvars))
    return PolySystem(tuple(polys), sys.varnames)


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),;])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


@dataclass
class _Parser:
    toks: list
    pos: int = 0
    names: dict = field(default_factory=dict)

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg, tok=None):
        tok = tok or self.cur
        raise ParseError(msg, tok.line, tok.col)

    def take(self, text=None, kind=None) -> _Tok:
        tok = self.cur
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            self.error(f"expected {want}, found {got}")
        self.pos += 1
        return tok

    def system(self) -> PolySystem:
        head = self.take(kind="ident")
        if head.text != "vars":
            self.error("system must start with 'vars'", head)
        names = []
        while True:
            tok = self.take(kind="ident")
            if tok.text == "i":
                self.error("'i' is reserved for the imaginary unit", tok)
            if tok.text in names:
                self.error(f"variable {tok.text!r} declared twice", tok)
            names.append(tok.text)
            if self.cur.text == ",":
                self.pos += 1
                continue
            break
        self.take(";")
        self.names = {n: k for k, n in enumerate(names)}
        polys = []
        while self.cur.kind != "eof":
            start = self.cur
            p = self.expr()
            self.take(";")
            if p.is_zero():
                self.error("zero polynomial in system", start)
            polys.append(p)
        if not polys:
            self.error("empty system: no polynomials after the declaration")
        return PolySystem(tuple(polys), tuple(names))

    def expr(self) -> Poly:
        p = self.term()
        while self.cur.text in ("+", "-"):
            op = self.take().text
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly:
        p = self.unary()
        while self.cur.text in ("*", "/"):
            op = self.take()
            q = self.unary()
            if op.text == "*":
                p = p * q
            else:
                if q.degree > 0 or q.is_zero():
                    self.error("division only by nonzero constants", op)
                c = q.constant_term()
                p = p * (1 / c if is_exact(c) else 1 / complex(c))
        return p

    def unary(self) -> Poly:
        if self.cur.text == "-":
            self.pos += 1
            return -self.unary()
        if self.cur.text == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.cur.text in ("^", "**"):
            self.pos += 1
            tok = self.take(kind="number")
            if not tok.text.isdigit():
                self.error("exponent must be a nonnegative integer", tok)
            base = base ** int(tok.text)
        return base

    def atom(self) -> Poly:
        tok = self.cur
        n = len(self.names)
        if tok.kind == "number":
            self.pos += 1
            if tok.text.isdigit():
                return Poly.constant(Fraction(int(tok.text)), n)
            return Poly.constant(complex(float(tok.text)), n)
        if tok.kind == "ident":
            self.pos += 1
            if tok.text == "i":
                return Poly.constant(I_UNIT, n)
            if tok.text not in self.names:
                self.error(f"undeclared variable {tok.text!r}", tok)
            return Poly.variable(self.names[tok.text], n)
        if tok.text == "(":
            self.pos += 1
            p = self.expr()
            self.take(")")
            return p
        self.error(f"unexpected token {tok.text!r}" if tok.kind != "eof" else "unexpected end of input")


def parse_system(text: str) -> PolySystem:
    """Parse ``vars x, y; poly; poly; ...`` into a :class:`PolySystem`."""
    return _Parser(_tokenize(text)).system()


def load_system(path) -> PolySystem:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())
