from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from witnessdecomp.exactalg import (
    BuchbergerBudgetExceeded,
    ExactAlgebraError,
    ExactPoly,
    GaussRat,
    buchberger,
    exact_polys,
    gauss,
    ideal_dimension,
    local_dim_bound,
    rationalize,
)
from witnessdecomp.polysys import parse_system


def _gb(text):
    F = parse_system(text)
    return buchberger(exact_polys(F))


def _as_sympy(gb, names):
    xs = sp.symbols(names)
    out = []
    for g in gb.generators:
        expr = 0
        for m, c in g.terms.items():
            expr += sp.Rational(c.numerator, c.denominator) * sp.Mul(*[x**e for x, e in zip(xs, m)])
        out.append(sp.expand(expr))
    return out


def test_gaussian_rationals():
    a = gauss(Fraction(1, 2), 3)
    b = GaussRat(2, -1)
    assert a * b == gauss(Fraction(1, 1) + 3, Fraction(-1, 2) + 6)
    assert (a / b) * b == a
    assert complex(a) == complex(0.5, 3)
    assert rationalize(0.25 + 0.5j) == gauss(Fraction(1, 4), Fraction(1, 2))


@pytest.mark.parametrize(
    "text, dim",
    [
        ("vars x, y; x^2 + y^2 - 1; x - y;", 0),
        ("vars x, y; (y - x)*(y - 2*x)*(y - 3*x);", 1),
        ("vars x, y, z; (x^3 + z)*(x^2 - y);", 2),
        ("vars x, y; x*(y^2 - x^3)*(x - 1); x*(y^2 - x^3)*(y - 2)*(3*x + y);", 1),
        ("vars x, y; x - 1; x - 2;", -1),
    ],
)
def test_ideal_dimension(text, dim):
    assert ideal_dimension(_gb(text)) == dim


def test_reduced_basis_agrees_with_sympy():
    text = "vars x, y, z; x^2 + y*z - 2; y^2 - x*z + 1; x*y*z - 3;"
    ours = _as_sympy(_gb(text), "x y z")
    x, y, z = sp.symbols("x y z")
    ref = sp.groebner([x**2 + y * z - 2, y**2 - x * z + 1, x * y * z - 3], x, y, z, order="grevlex", domain=sp.QQ)
    assert sorted(map(str, ours)) == sorted(str(sp.expand(g)) for g in ref.exprs)


def test_budget_is_enforced():
    F = parse_system("vars a, b, c, d; a+b+c+d; a*b+b*c+c*d+d*a; a*b*c+b*c*d+c*d*a+d*a*b; a*b*c*d-1;")
    with pytest.raises(BuchbergerBudgetExceeded):
        buchberger(exact_polys(F), max_pairs=2)


def test_inexact_input_is_refused():
    with pytest.raises(ExactAlgebraError):
        exact_polys(parse_system("vars x; 0.1*x - 1;"))
    with pytest.raises(ExactAlgebraError):
        ExactPoly({(1,): 0.5}, 1)


def test_local_dimension_bound():
    # the bound is the global dimension of the shifted ideal, hence >= local dimension
    F = parse_system("vars x, y; x*(y^2 - x^3)*(x - 1); x*(y^2 - x^3)*(y - 2)*(3*x + y);")
    assert local_dim_bound(F, [1, 2]) == 1
    assert local_dim_bound(F, [0, 5]) == 1
    G = parse_system("vars x, y; x^2 + y^2 - 1; x - y;")
    assert local_dim_bound(G, [0.5, 0.25]) == 0
    with pytest.raises(ExactAlgebraError):
        local_dim_bound(parse_system("vars x, y; x*y;"), [0, 0])


polys_strategy = st.lists(
    st.dictionaries(
        st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 1)),
        st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda c: c != 0),
        min_size=1,
        max_size=4,
    ),
    min_size=1,
    max_size=3,
)


@settings(max_examples=30, deadline=None)
@given(polys_strategy, st.permutations(range(3)))
def test_reduced_basis_is_permutation_invariant(gens, perm):
    polys = [ExactPoly(t, 3) for t in gens]
    base = buchberger(polys)
    shuffled = buchberger([polys[i % len(polys)] for i in perm][: len(polys)] if len(polys) == 3 else polys[::-1])
    assert sorted(map(repr, base.generators)) == sorted(map(repr, shuffled.generators))
    assert ideal_dimension(base) == ideal_dimension(shuffled)


def test_circle_line_basis():
    gb = _gb("vars x, y; x^2 + y^2 - 5; x - 2*y - 3;")
    assert sorted(gb.leading_monomials) == [(0, 2), (1, 0)]
    assert ideal_dimension(gb) == 0


def test_local_dimension_vectors():
    dup = parse_system("vars x, y; x^2 - y; y - x^2;")
    assert local_dim_bound(dup, [1, 1]) == 1
    cusp = parse_system("vars x, y; x*(y^2 - x^3)*(x - 1); x*(y^2 - x^3)*(y - 2)*(3*x + y);")
    assert local_dim_bound(cusp, [4, 8]) == 1


def test_rounded_point_solves_shifted_polynomial():
    f = parse_system("vars x, y, z; (x^3 + z)*(x^2 - y);").polys[0]
    wr = [rationalize(c) for c in (1, -1.1428571429, -1)]
    terms = dict(f.terms)
    terms[(0, 0, 0)] = terms.get((0, 0, 0), 0) - f.evaluate_exact(wr)
    assert type(f)(terms, 3).evaluate_exact(wr) == 0
