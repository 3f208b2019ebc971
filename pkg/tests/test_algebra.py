from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from limitset.algebra import (Point2, Poly, PolySyntaxError, PositiveDimensionalError,
                              format_poly, is_square_free, parse_poly, poly_gcd,
                              poly_gcd_many, solve_system, square_free_part)

P = parse_poly
xs_, ys_ = sympy.symbols("x y")


def to_sympy(p: Poly):
    return sympy.sympify(format_poly(p).replace("^", "**"), locals={"x": xs_, "y": ys_})


# random small polynomials in x, y
coef = st.fractions(min_value=-5, max_value=5, max_denominator=4)
term = st.tuples(coef, st.integers(0, 3), st.integers(0, 3))


@st.composite
def polys(draw, min_terms=1, max_terms=4):
    p = Poly.const(0)
    for c, i, j in draw(st.lists(term, min_size=min_terms, max_size=max_terms)):
        p = p + Poly.const(c) * Poly.var("x") ** i * Poly.var("y") ** j
    return p


def test_eval_examples():
    p = P("y*(x^2+y^2-1)")
    assert p.eval({"x": 2, "y": 0}) == 0
    assert p.eval({"x": 0, "y": 2}) == 6
    assert P("0").eval({"x": 3, "y": 1}) == 0


def test_eval_missing_variable():
    with pytest.raises((KeyError, ValueError)):
        P("x*y").eval({"x": 1})


def test_partials():
    assert P("y*(x^2+y^2-1)").partial("y") == P("x^2 + 3*y^2 - 1")
    assert P("7").partial("x").is_zero()
    assert P("(x^2+y)^2 - l").partial("l") == P("-1")


def test_zero_is_empty():
    z = P("x - x")
    assert z.is_zero() and z == Poly.const(0)
    assert not P("x").is_zero()


def test_gcd_examples():
    assert poly_gcd(P("x^2-1"), P("x-1")) == P("x-1")
    assert poly_gcd(P("x*y"), P("x+y")) == P("1")
    c = P("x^2+y^2-1")
    assert poly_gcd(c * P("y^2"), c * P("x")) == c
    assert poly_gcd(P("-2*x^2+2"), P("0")) == P("x^2-1")
    with pytest.raises(ValueError):
        poly_gcd(P("0"), P("0"))


def test_square_free_examples():
    assert square_free_part(P("(x^2+y^2-1)^2")) == P("x^2+y^2-1")
    assert square_free_part(P("x^2*y^3")) == P("x*y")
    assert square_free_part(P("y^2*(x^2+y^2-1)")) == P("y*(x^2+y^2-1)")
    with pytest.raises(ValueError):
        square_free_part(P("3"))


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_gcd_matches_sympy(a, b, c):
    p, q = a * c, b * c
    if p.is_zero() and q.is_zero():
        return
    g = poly_gcd(p, q)
    ref = sympy.gcd(to_sympy(p), to_sympy(q))
    ratio = sympy.simplify(to_sympy(g) / ref)
    assert ratio.is_number and ratio != 0
    # both divide exactly
    assert p.divmod(g)[1].is_zero() and q.divmod(g)[1].is_zero()


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_square_free_properties(a, b):
    p = a * b * b
    if p.is_constant():
        return
    q = square_free_part(p)
    assert square_free_part(q) == q
    assert poly_gcd_many([q, q.partial("x"), q.partial("y")]).is_constant()
    assert is_square_free(q)
    assert p.divmod(q)[1].is_zero()
    # same sympy square-free part up to a constant
    ref = sympy.sqf_part(to_sympy(p), xs_, ys_)
    assert sympy.simplify(to_sympy(q) / ref).is_number


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), st.lists(st.tuples(coef, coef), min_size=5, max_size=5))
def test_eval_is_ring_homomorphism(p, q, points):
    for x, y in points:
        at = {"x": x, "y": y}
        assert (p * q).eval(at) == p.eval(at) * q.eval(at)
        assert (p + q).eval(at) == p.eval(at) + q.eval(at)


@settings(max_examples=60, deadline=None)
@given(polys())
def test_format_parse_round_trip(p):
    assert parse_poly(format_poly(p)) == p


def test_terms_invariants():
    p = P("x^2 - x^2 + 3*y - l")
    assert all(c != 0 for c in p.terms.values())
    assert all(len(e) == len(p.variables) for e in p.terms)


def test_syntax_error_position():
    with pytest.raises(PolySyntaxError) as e:
        P("x^2 + * y")
    assert e.value.pos == 6


def test_rational_literals():
    assert P("1/2*x + 3/4").eval({"x": F(1, 2)}) == 1


def pts(res):
    return sorted((round(float(p.x), 9), round(float(p.y), 9)) for p in res)


def test_solve_examples():
    assert pts(solve_system(P("x^2+y^2-1"), P("y"), (-2, 2, -2, 2))) == [(-1.0, 0.0), (1.0, 0.0)]
    assert pts(solve_system(P("x"), P("y"), (-1, 1, -1, 1))) == [(0.0, 0.0)]
    res = solve_system(P("y*(x^2+y^2-1)"), P("x^2+y^2-4"), (-3, 3, -3, 3))
    assert pts(res) == [(-2.0, 0.0), (2.0, 0.0)]


def test_solve_rejects_common_component():
    with pytest.raises(PositiveDimensionalError):
        solve_system(P("y*(x-1)"), P("y*(x+1)"), (-2, 2, -2, 2))


def _grid_oracle(p, q, box, n=2048):
    """Cells where both p and q change sign on the corners: coarse zero clusters."""
    xs = np.linspace(box[0], box[1], n + 1)
    ys = np.linspace(box[2], box[3], n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    fp = sympy.lambdify((xs_, ys_), to_sympy(p), "numpy")
    fq = sympy.lambdify((xs_, ys_), to_sympy(q), "numpy")
    a, b = np.sign(fp(X, Y) + 0 * X), np.sign(fq(X, Y) + 0 * X)

    def changes(s):
        c = np.stack([s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]])
        return (c.max(axis=0) > 0) & (c.min(axis=0) < 0) | (c == 0).any(axis=0)
    hit = np.argwhere(changes(a) & changes(b))
    cell = (box[1] - box[0]) / n
    return [(xs[i] + cell / 2, ys[j] + cell / 2) for i, j in hit], cell


@pytest.mark.parametrize("p,q", [
    ("x^2+y^2-1", "x-y"),
    ("y*(x^2+y^2-1)", "x^2+y^2-4"),
    ("x^3 - 3*x*y^2 - 1/2", "3*x^2*y - y^3 - 1/5"),
    ("x^2 - y^3", "x + y - 1/3"),
])
def test_solver_against_grid_oracle(p, q):
    p, q = P(p), P(q)
    box = (-2.5, 2.5, -2.5, 2.5)
    tol = 1e-9
    res = solve_system(p, q, box, tol)
    for r in res:
        x, y = float(r.x), float(r.y)
        scale = 1.0 + max(abs(float(c)) for c in p.terms.values())
        assert abs(float(p.eval({"x": x, "y": y}))) <= 10 * tol * scale + 1e-12
    cands, cell = _grid_oracle(p, q, box)
    for cx, cy in cands:
        d = min((np.hypot(cx - float(r.x), cy - float(r.y)) for r in res), default=np.inf)
        assert d < 4 * cell, (cx, cy)


def test_point2_exact_flag():
    assert Point2(F(1), F(2)).exact
    assert not Point2(0.5, 1.0).exact
