"""Independent symbolic oracle for the corpus fixtures.

Generates ``src/witnessdecomp/corpus/expected.json`` with, per system, the
map dimension -> sorted degrees of the irreducible components.  Everything
here runs on sympy's Groebner engine; nothing from ``witnessdecomp`` is
imported, so the fixtures do not share code with the code they check.

Positive-dimensional systems: a hand-written list of prime component ideals
is certified by
  * containment   every input polynomial reduces to 0 modulo each component,
  * dimension and degree   slicing a component with dim-many random rational
    hyperplanes leaves a zero-dimensional ideal whose quotient dimension is
    the degree,
  * completeness  the product of random generator combinations (one per
    component) lies in the radical of the input ideal (Rabinowitsch).
Components are linear spaces, graphs of polynomial maps, or hypersurfaces
whose defining polynomial is irreducible over Q(i); primality of the graph
and linear cases is structural.

Zero-dimensional systems: the number of distinct solutions is the degree of
the squarefree part of the characteristic polynomial of multiplication by a
random linear form on the quotient ring.

Run from the repository root:  python3 tools/oracle_fixtures.py
"""

from __future__ import annotations

import json
import random
import sys
from itertools import product
from pathlib import Path

import sympy as sp
from sympy.polys.matrices import DomainMatrix

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "src" / "witnessdecomp" / "corpus"
RNG = random.Random(20240601)


def load(name):
    text = (CORPUS / f"{name}.sys").read_text()
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    body = " ".join(lines)
    head, rest = body.split(";", 1)
    names = [v.strip() for v in head.strip()[len("vars"):].split(",")]
    gens = sp.symbols(names)
    loc = dict(zip(names, gens))
    polys = [sp.expand(sp.sympify(s.replace("^", "**"), locals=loc)) for s in rest.split(";") if s.strip()]
    return gens, polys


def rand_q():
    return sp.Rational(RNG.randint(-97, 97) or 1, RNG.randint(1, 31))


def groebner(polys, gens):
    return sp.groebner(polys, *gens, order="grevlex", domain=sp.QQ)


def standard_monomials(G, gens):
    """Monomials outside the leading-term ideal of a zero-dimensional basis."""
    lts = [sp.Poly(g, *gens).monoms(order="grevlex")[0] for g in G.exprs]
    bounds = []
    for v in range(len(gens)):
        pure = [m[v] for m in lts if all(e == 0 for k, e in enumerate(m) if k != v)]
        if not pure:
            raise ValueError("ideal is not zero-dimensional")
        bounds.append(min(pure))
    out = []
    for m in product(*(range(b) for b in bounds)):
        if not any(all(a >= b for a, b in zip(m, lt)) for lt in lts):
            out.append(m)
    return out


def quotient_dim(polys, gens):
    G = groebner(polys, gens)
    if G.exprs == [1]:
        return 0
    return len(standard_monomials(G, gens))


def distinct_roots(polys, gens):
    G = groebner(polys, gens)
    if G.exprs == [1]:
        return 0
    basis = standard_monomials(G, gens)
    index = {m: k for k, m in enumerate(basis)}
    mono = [sp.Mul(*(g**e for g, e in zip(gens, m))) for m in basis]
    form = sum(rand_q() * g for g in gens)
    D = len(basis)
    cols = []
    for mb in mono:
        r = G.reduce(sp.expand(form * mb))[1]
        col = [sp.Rational(0)] * D
        for m, c in sp.Poly(r, *gens).terms():
            col[index[m]] = sp.Rational(c)
        cols.append(col)
    q = sp.QQ.from_sympy
    M = DomainMatrix([[q(cols[j][i]) for j in range(D)] for i in range(D)], (D, D), sp.QQ)
    # distinct eigenvalues of multiplication by a separating form = distinct roots
    cp = M.charpoly()
    s = sp.Symbol("s")
    chi = sp.Poly([sp.QQ.to_sympy(c) for c in cp], s)
    sqf = sp.quo(chi, sp.gcd(chi, chi.diff(s)))
    return int(sp.degree(sqf, s))


def check_components(polys, gens, comps):
    """comps: list of (generators, expected_dim[, splitting univariate]).

    The optional third entry marks a Q-prime ideal that is linear over a
    squarefree univariate polynomial; it splits over C into one component
    per root, each of degree ``deg / roots``.
    """
    result: dict[int, list[int]] = {}
    combos = []
    for cg, dim, *split in comps:
        G = groebner(cg, gens)
        for p in polys:
            assert G.reduce(p)[1] == 0, f"{p} not in component {cg}"
        if len(cg) == 1 and sp.Poly(cg[0], *gens).total_degree() > 1:
            fl = sp.factor_list(cg[0], *gens, extension=sp.I)[1]
            assert len(fl) == 1 and fl[0][1] == 1, f"{cg[0]} is reducible"
        slices = [sum(rand_q() * g for g in gens) + rand_q() for _ in range(dim)]
        deg = quotient_dim(list(cg) + slices, gens)
        # one more slice must empty it: the dimension is exactly ``dim``
        extra = sum(rand_q() * g for g in gens) + rand_q()
        assert quotient_dim(list(cg) + slices + [extra], gens) == 0, f"{cg} has dim > {dim}"
        assert deg > 0, f"{cg} has dim < {dim}"
        if split:
            u = sp.Poly(split[0], *gens)
            (var,) = [g for g in gens if u.degree(g) > 0]
            k = sp.degree(split[0], var)
            assert sp.degree(sp.gcd(split[0], sp.diff(split[0], var)), var) == 0
            assert deg % k == 0
            result.setdefault(dim, []).extend([deg // k] * k)
        else:
            result.setdefault(dim, []).append(deg)
        combos.append(sum(rand_q() * g for g in cg))
    t = sp.Symbol("_t")
    g = sp.expand(sp.Mul(*combos))
    R = sp.groebner(list(polys) + [1 - t * g], t, *gens, order="grevlex", domain=sp.QQ)
    assert R.exprs == [1], "components do not cover the variety"
    return {d: sorted(int(e) for e in v) for d, v in result.items()}


def components(name, gens):
    x = gens
    if name == "circle_line":
        X, Y = x
        return [([X**2 + Y**2 - 5], 1), ([X - 2 * Y - 3], 1)]
    if name == "three_lines":
        X, Y = x
        return [([Y - X], 1), ([Y - 2 * X], 1), ([Y - 3 * X], 1)]
    if name == "cubic_quadric_surfaces":
        X, Y, Z = x
        return [([X**3 + Z], 2), ([X**2 - Y], 2)]
    if name == "sphere_cubic_lines":
        X, Y, Z = x
        h = sp.Rational(1, 2)
        return [
            ([X**2 + Y**2 + Z**2 - 1], 2),
            ([Y - X**2, Z - X**3], 1),
            ([X - h, Z - h**3], 1),
            # prime over Q, two lines x = +-1/sqrt(2) over C
            ([Y - h, 2 * X**2 - 1], 1, 2 * X**2 - 1),
            ([X - h, Y - h, Z - h], 0),
        ]
    if name == "cusp_line_points" or name == "cusp_line_overdetermined":
        X, Y = x
        comps = [([X], 1), ([Y**2 - X**3], 1)]
        if name == "cusp_line_points":
            comps += [([X - 1, Y - 2], 0), ([X - 1, Y + 3], 0)]
        return comps
    if name == "twisted_cubic_lines":
        X, Y, Z = x
        return [
            ([Y + X**3, Z + X**3], 1),
            ([X, Z], 1),
            ([X, Y], 1),
            ([X + 1, Z - 1], 1),
            ([X + 1, Y - 1], 1),
            ([X - 1, Y - 1, Z - 1], 0),
        ]
    if name == "cubic_two_lines":
        X, Y, Z = x
        return [([Y - X**2, Z + X**3], 1), ([X - 1, Z + 1], 1), ([X - 1, Y - 1], 1)]
    if name == "cyclic4":
        a, b, c, d = x
        return [([c + a, d + b, a * b - 1], 1), ([c + a, d + b, a * b + 1], 1)]
    return None


ZERO_DIM = [
    "quadric_sums5",
    "convolution7",
    "cyclic5",
    "cusp_perturbed",
    "twisted_cubic_perturbed",
    "sphere_cubic_perturbed",
]


def main(argv):
    out = {}
    names = argv or [
        "circle_line",
        "three_lines",
        "cubic_quadric_surfaces",
        "sphere_cubic_lines",
        "cusp_line_points",
        "cusp_line_overdetermined",
        "twisted_cubic_lines",
        "cubic_two_lines",
        "cyclic4",
    ] + ZERO_DIM
    for name in names:
        gens, polys = load(name)
        comps = components(name, gens)
        if comps is not None:
            dims = check_components(polys, gens, comps)
        else:
            n = distinct_roots(polys, gens)
            dims = {0: [1] * n} if n else {}
        out[name] = {"dims": {str(d): v for d, v in sorted(dims.items(), reverse=True)}}
        print(name, out[name]["dims"], flush=True)
    path = CORPUS / "expected.json"
    old = json.loads(path.read_text()) if path.exists() else {}
    old.update(out)
    path.write_text(json.dumps(dict(sorted(old.items())), indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1:])
