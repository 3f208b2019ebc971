import math
import random
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from limitset.algebra import Point2, Poly, parse_poly
from limitset.family import (INFINITY, PlanarField, RHO, alpha_assignment, bendixson_point_map,
                             build_family, build_family_ng, chart_image, compactified_field_eval,
                             compactify_set, format_field_text, hamiltonian_field,
                             lie_identity_check, lie_residual, parse_field_text, pullback_field,
                             snap_rational)
from limitset.semialg import member, parse_spec

from conftest import LINE

P = parse_poly
EX12_S = [(-2, 0), (2, 0), (0, 1), (0, -1)]


def same(a: Poly, b: Poly) -> bool:
    return (a - b).is_zero()


def plane_degree(p: Poly) -> int:
    idx = [i for i, v in enumerate(p.variables) if v in ("x", "y")]
    return max((sum(e[i] for i in idx) for e in p.terms), default=0)


def at_zero(p: Poly) -> Poly:
    return p.subs({"l": 0})


# ---------------------------------------------------------------------------
# construction


def test_example_family_matches_direct_expansion():
    f = P("y*(x^2+y^2-1)")
    fam = build_family(f, EX12_S)
    prod = P("1")
    for a, b in EX12_S:
        prod = prod * P(f"(x-({a}))^2+(y-({b}))^2-l^2")
    assert same(fam.h, f * f - P("l") * prod)
    assert same(at_zero(fam.h), f * f)


def test_point_family_and_its_level_circle():
    fam = build_family(P("x^2+y^2"), [])
    assert same(fam.h, P("(x^2+y^2)^2 - l"))
    t = 1e-2
    r = t ** 0.25
    m = fam.model(t)
    for k in range(12):
        a = 2 * math.pi * k / 12
        assert abs(m.point(r * math.cos(a), r * math.sin(a))[0]) < 1e-14


def test_non_rational_points_rejected():
    with pytest.raises(ValueError):
        build_family(P("x"), [(math.sqrt(2), 0.0)])


def test_triod_ng_family():
    f = P("x*y")
    S = [(1, 0), (0, 1), (0, -1)]
    fam = build_family_ng(f, S, [(F(-1, 4), 0)], alpha_limit=[(0, 0)])
    expect = f * f - P("l") * P("((x-1)^2+y^2-l^2)*(x^2+(y-1)^2-l^2)*(x^2+(y+1)^2-l^2)"
                                "*((x+1/4)^2+y^2-l^2)")
    assert same(fam.h, expect)
    assert same(at_zero(fam.h), f * f)
    assert fam.mode.value == "NON_GENERIC"
    # the symbolic form keeps the seed coordinates as parameters
    assert set(fam.symbolic_h.used_variables()) == {"a1", "a2", "l", "x", "y"}
    assert same(fam.symbolic_h.subs(alpha_assignment(fam.seeds)), fam.h)


def test_ng_without_seeds_is_generic():
    f = P("x*y")
    S = [(1, 0), (0, 1)]
    assert same(build_family_ng(f, S, []).h, build_family(f, S).h)


def test_seed_on_special_point_rejected():
    with pytest.raises(ValueError):
        build_family_ng(P("x*y"), [(1, 0)], [(1, 0)], delta=1e-6)


def test_seed_coefficients_converge_to_alpha_limit():
    f = P("x*y")
    S = [(1, 0), (0, 1), (0, -1)]
    limit = build_family_ng(f, S, [(0, 0)]).h
    gaps = []
    for i in (2, 4, 8, 16):
        h = build_family_ng(f, S, [(F(-1, i), 0)]).h
        gaps.append(max(abs(c) for c in (h - limit).terms.values()))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


# ---------------------------------------------------------------------------
# field and identity


def test_hamiltonian_field_examples():
    X = hamiltonian_field(P("x"))
    assert same(X.P, P("x")) and same(X.Q, P("-1"))
    X = hamiltonian_field(P("x^2+y^2"))
    assert same(X.P, P("2*y + (x^2+y^2)*2*x"))
    assert same(X.Q, P("-2*x + (x^2+y^2)*2*y"))


def test_lie_identity_examples():
    assert lie_identity_check(build_family(P("y*(x^2+y^2-1)"), EX12_S).h)
    assert lie_identity_check(P("x"))
    bad = PlanarField(P("x") + P("1"), P("-1"))
    assert not lie_identity_check(P("x"), bad)
    assert same(lie_residual(P("x"), bad), P("1"))


small = st.integers(-3, 3)
frac = st.builds(F, st.integers(-8, 8), st.integers(1, 4))


@st.composite
def curve(draw):
    terms = draw(st.lists(st.tuples(small, st.integers(0, 3), st.integers(0, 3)),
                          min_size=2, max_size=5))
    f = P("0")
    for c, i, j in terms:
        f = f + P(f"{c}*x^{i}*y^{j}")
    if f.is_constant():
        f = f + P("x")
    return f


@settings(max_examples=25, deadline=None)
@given(curve(), st.lists(st.tuples(frac, frac), max_size=3),
       st.lists(st.tuples(frac, frac), max_size=2))
def test_identity_degree_and_restriction(f, S, seeds):
    assume(not set(S) & set(seeds))
    fam = build_family_ng(f, S, seeds) if seeds else build_family(f, S)
    X = hamiltonian_field(fam.h)
    assert lie_identity_check(fam.h, X)
    assert same(at_zero(fam.h), f * f)
    assert X.degree <= 2 * plane_degree(fam.h) - 1


# ---------------------------------------------------------------------------
# Bendixson chart


def test_point_map_examples():
    assert bendixson_point_map((1, 0)) == Point2(1, 0)
    assert bendixson_point_map((2, 0)) == Point2(F(1, 2), 0)
    assert bendixson_point_map((0, 1)) == Point2(0, -1)
    with pytest.raises(ValueError):
        bendixson_point_map((0, 0))


def test_point_map_is_involution():
    rng = random.Random(3)
    for _ in range(50):
        p = (F(rng.randint(-40, 40), 7), F(rng.randint(-40, 40), 9))
        if p == (0, 0):
            continue
        q = bendixson_point_map(p)
        assert tuple(bendixson_point_map((q.x, q.y))) == p


def test_line_compactifies_to_circle():
    s = parse_spec(LINE)
    c = compactify_set(s)
    assert c.translation == (0, 0)
    g = c.spec.f_gamma
    assert same(g.normalized(), P("x^2+y^2+y").normalized())
    for k in range(-10, 10):
        q = bendixson_point_map((F(k, 3) + F(1, 7), 1))
        assert g.eval({"x": q.x, "y": q.y}) == 0
        assert member(c.spec, (q.x, q.y))
    assert member(c.spec, (0, 0))
    assert not c.spec.unbounded


def test_line_through_origin_is_translated_first():
    c = compactify_set(parse_spec("clauses:\n  - f: x\n"))
    assert c.translation == (1, 0)
    assert same(c.spec.f_gamma.normalized(), P("x^2+y^2-x").normalized())


def test_bounded_set_rejected():
    with pytest.raises(ValueError):
        compactify_set(parse_spec("clauses:\n  - f: x^2+y^2-1\n"))


def test_compactified_image_is_bounded():
    s = parse_spec("clauses:\n  - f: x*y - 1\n")
    c = compactify_set(s)
    tau = c.translation
    dist = min(math.hypot(x + float(tau[0]), 1 / x + float(tau[1]))
               for x in [k / 100 for k in range(-1000, 1000) if k])
    g = c.spec.f_gamma
    rng = random.Random(5)
    for _ in range(200):
        x = rng.choice([-1, 1]) * 10 ** rng.uniform(-2, 2)
        q = bendixson_point_map((x + float(tau[0]), 1 / x + float(tau[1])))
        assert math.hypot(q.x, q.y) <= 1 / dist + 1e-9
        assert abs(g.eval({"x": q.x, "y": q.y})) < 1e-9


def test_chart_image_of_circle():
    # |x| = 2 maps to |u| = 1/2
    assert same(chart_image(P("x^2+y^2-4")).normalized(), P("4*x^2+4*y^2-1").normalized())


# ---------------------------------------------------------------------------
# pullback


def _pushforward_oracle(Y: PlanarField, x0, y0):
    u, v = sympy.symbols("u v")
    r = u ** 2 + v ** 2
    phi = sympy.Matrix([u / r, -v / r])
    J = phi.jacobian([u, v])
    # the point of the chart mapping to (x0, y0)
    q = bendixson_point_map((x0, y0))
    Yu = Y(float(q.x), float(q.y))
    Jn = J.subs({u: float(q.x), v: float(q.y)})
    w = Jn * sympy.Matrix(Yu)
    return float(w[0]), float(w[1])


def test_pullback_of_unit_field():
    Y = PlanarField(P("1"), P("0"))
    X, d = pullback_field(Y)
    assert d >= 0
    rng = random.Random(1)
    for _ in range(10):
        x0, y0 = rng.uniform(-2, 2), rng.uniform(-2, 2)
        px, py = X(x0, y0)
        wx, wy = _pushforward_oracle(Y, x0, y0)
        r = (x0 * x0 + y0 * y0) ** d
        assert px == pytest.approx(r * wx, rel=1e-9, abs=1e-9)
        assert py == pytest.approx(r * wy, rel=1e-9, abs=1e-9)


def test_pullback_of_zero_field():
    X, d = pullback_field(PlanarField(P("0"), P("0")))
    assert d == 0 and X.P.is_zero() and X.Q.is_zero()


@settings(max_examples=15, deadline=None)
@given(curve(), curve())
def test_pullback_minimal_and_matches_oracle(p, q):
    Y = PlanarField(p, q)
    X, d = pullback_field(Y)
    # no common factor of x^2 + y^2 is left
    assert not (X.P.divmod(RHO)[1].is_zero() and X.Q.divmod(RHO)[1].is_zero())
    rng = random.Random(7)
    for _ in range(5):
        x0, y0 = rng.uniform(0.3, 2), rng.uniform(0.3, 2)
        px, py = X(x0, y0)
        wx, wy = _pushforward_oracle(Y, x0, y0)
        r = (x0 * x0 + y0 * y0) ** d
        scale = max(1.0, abs(r * wx), abs(r * wy))
        assert abs(px - r * wx) <= 1e-8 * scale
        assert abs(py - r * wy) <= 1e-8 * scale


def test_pullback_explicit_degree():
    Y = PlanarField(P("1"), P("0"))
    X0, d0 = pullback_field(Y)
    X2, d2 = pullback_field(Y, d0 + 2)
    assert d2 == d0 + 2
    assert same(X2.P, X0.P * RHO ** 2)
    with pytest.raises(ValueError):
        pullback_field(Y, d0 - 1)


def test_double_pullback_keeps_direction_field():
    Y = PlanarField(P("x - 2*y"), P("x*y + 1"))
    X, _ = pullback_field(Y)
    Z, _ = pullback_field(X)
    rng = random.Random(11)
    for _ in range(50):
        x0, y0 = rng.uniform(-2, 2), rng.uniform(-2, 2)
        a = Y(x0, y0)
        b = Z(x0, y0)
        na, nb = math.hypot(*a), math.hypot(*b)
        if na < 1e-6 or nb < 1e-12:
            continue
        # same direction: positive multiple
        assert a[0] / na == pytest.approx(b[0] / nb, abs=1e-8)
        assert a[1] / na == pytest.approx(b[1] / nb, abs=1e-8)


def test_compactified_field_eval():
    assert compactified_field_eval(PlanarField(P("1"), P("0")), INFINITY) == (0.0, 0.0)
    assert compactified_field_eval(PlanarField(P("1"), P("0")), (0, 0)) == (1, 0)
    p, q = compactified_field_eval(PlanarField(P("x"), P("-1")), (1, 1))
    assert (p, q) == (pytest.approx(1 / 3), pytest.approx(-1 / 3))


# ---------------------------------------------------------------------------
# snapping and field text


def test_snap_prefers_small_exact_zero():
    assert snap_rational(0.5 + 1e-13, 0.0, (P("2*x-1"),)) == Point2(F(1, 2), 0)
    p = snap_rational(math.sqrt(2), 0.0)
    assert abs(float(p.x) - math.sqrt(2)) < 1e-11 and p.x.denominator <= 2 ** 40


def test_field_text_round_trip():
    fam = build_family(P("y*(x^2+y^2-1)"), EX12_S)
    X = hamiltonian_field(fam.h)
    text = format_field_text(X, fam.h, {"lambda": "1/1000", "mode": "GENERIC"})
    back = parse_field_text(text)
    assert same(back.P, X.P) and same(back.Q, X.Q) and same(back.h, fam.h)
    assert back.params == {"lambda": "1/1000", "mode": "GENERIC"}
    assert text.splitlines()[1].startswith("P = ")
