import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from scipy import ndimage

from limitset.algebra import Point2
from limitset.errors import IsolatedPoint, TransitionError
from limitset.family import compactify_set
from limitset.semialg import parse_spec
from limitset.topology import (all_branch_seeds, alpha_limit, branch_seeds,
                               choose_transition_points, classify_special_points,
                               decompose_complement, validate_transition_set, working_box)

from conftest import CIRCLE, EX12, LINE, POINT, TRIOD

LEMNISCATE = "clauses:\n  - f: (x^2+y^2)^2 - 2*(x^2-y^2)\n"
TANGENT = "clauses:\n  - f: x^2+y^2-1\n  - f: (2*x-1)^2+4*y^2-1\n"
CHORDS = """clauses:
  - f: x^2+y^2-1
  - f: y
    constraints:
      - {g: 1-x^2-y^2, rel: ">="}
  - f: 2*y-1
    constraints:
      - {g: 1-x^2-y^2, rel: ">="}
"""


def _spec(text):
    s = parse_spec(text)
    return compactify_set(s).spec if s.unbounded else s


CORPUS = {
    "circle": (CIRCLE, 2),
    "segment+circle": (EX12, 3),
    "lemniscate": (LEMNISCATE, 3),
    "triod": (TRIOD, 1),
    "nested tangent circles": (TANGENT, 3),
    "point": (POINT, 1),
    "line (compactified)": (LINE, 2),
    "four regions": (CHORDS, 4),
}

X_, Y_ = sympy.symbols("x y")


def _lam(poly):
    expr = sympy.sympify(str(poly).replace("^", "**"), locals={"x": X_, "y": Y_})
    return sympy.lambdify((X_, Y_), expr, "numpy"), sympy.lambdify(
        (X_, Y_), [sympy.diff(expr, X_), sympy.diff(expr, Y_)], "numpy")


def oracle_components(spec, box, n=2048, min_cells=16):
    """Independent count: distance-band raster of Gamma, union-find labelling of the rest."""
    xs = np.linspace(box[0], box[1], n)
    ys = np.linspace(box[2], box[3], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    cell = xs[1] - xs[0]
    band = np.zeros_like(X, dtype=bool)
    for c in spec.clauses:
        f, g = _lam(c.f_sf)
        fx, fy = (np.broadcast_to(v, X.shape) for v in g(X, Y))
        on = np.abs(f(X, Y)) <= 1.5 * cell * np.maximum(np.hypot(fx, fy), 1e-300)
        for k in c.constraints:
            gk, gg = _lam(k.g)
            gx, gy = (np.broadcast_to(v, X.shape) for v in gg(X, Y))
            val = gk(X, Y) + 0 * X
            slack = 1.5 * cell * np.hypot(gx, gy)
            on &= val >= -slack if k.rel.value != "=" else np.abs(val) <= slack
        band |= on
    for c in spec.clauses:    # isolated zeros (point sets)
        f, _ = _lam(c.f_sf)
        band |= np.abs(f(X, Y) + 0 * X) <= 4 * cell * cell
    lab, count = ndimage.label(~band)
    sizes = ndimage.sum(np.ones_like(lab), lab, index=np.arange(1, count + 1))
    border = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))) - {0}
    inner = [i + 1 for i, s in enumerate(sizes) if s >= min_cells and i + 1 not in border]
    return len(inner) + 1


@pytest.mark.parametrize("name", list(CORPUS))
def test_components_match_oracle(name):
    text, expected = CORPUS[name]
    spec = _spec(text)
    box = working_box(spec)
    d = decompose_complement(spec, box, 256)
    assert d.k == expected
    assert oracle_components(spec, box) == expected
    sp = classify_special_points(spec, box)
    tr = choose_transition_points(spec, d, sp)
    assert len(tr) == d.k - 1
    assert validate_transition_set(spec, d, tr)


def test_example_decomposition_and_edges():
    s = parse_spec(EX12)
    d = decompose_complement(s, (-3, 3, -3, 3), 256)
    assert d.k == 3
    assert len(d.edges) == 3     # each lune touches the outside and the other lune
    assert all(a != b for a, b in d.edges)
    assert d.gamma_components == 1


def test_classify_example():
    s = parse_spec(EX12)
    sp = classify_special_points(s, working_box(s))
    assert sorted(sp.gen) == [(-2, 0), (2, 0)]
    assert sp.ng == ()


def test_classify_triod():
    s = parse_spec(TRIOD)
    sp = classify_special_points(s, working_box(s))
    assert sorted(sp.gen) == [(0, -1), (0, 1), (1, 0)]
    assert len(sp.ng) == 1 and sp.ng[0].point == (0, 0) and sp.ng[0].n == 1
    assert sp.ng[0].directions[0] == pytest.approx((-1.0, 0.0), abs=1e-6)
    assert sp.n_gamma == 1


def test_classify_circle_is_empty():
    s = parse_spec(CIRCLE)
    sp = classify_special_points(s, working_box(s))
    assert sp.gen == () and sp.ng == ()


def test_special_point_invariants():
    for text in (EX12, TRIOD, CHORDS):
        s = parse_spec(text)
        box = working_box(s)
        sp = classify_special_points(s, box)
        d = decompose_complement(s, box, 256)
        tr = choose_transition_points(s, d, sp)
        f = s.f_gamma
        fx, fy = f.partial("x"), f.partial("y")
        pts = list(sp.gen) + list(tr)
        for p in pts:
            at = {"x": p[0], "y": p[1]}
            assert abs(float(f.eval(at))) < 1e-8
            assert math.hypot(float(fx.eval(at)), float(fy.eval(at))) >= 1e-6
        for e in sp.ng:
            at = {"x": e.point[0], "y": e.point[1]}
            assert abs(float(fx.eval(at))) + abs(float(fy.eval(at))) <= 1e-6
        allp = [(float(a), float(b)) for a, b in pts] + [(float(e.point[0]), float(e.point[1]))
                                                         for e in sp.ng]
        delta = 1e-3 * math.hypot(box[1] - box[0], box[3] - box[2])
        for i in range(len(allp)):
            for j in range(i):
                assert math.dist(allp[i], allp[j]) > 2 * delta


def test_transition_examples():
    s = parse_spec(EX12)
    box = working_box(s)
    d = decompose_complement(s, box, 256)
    sp = classify_special_points(s, box)
    tr = choose_transition_points(s, d, sp)
    assert len(tr) == 2
    assert sorted(float(p[1]) > 0 for p in tr) == [False, True]
    assert validate_transition_set(s, d, [Point2(F(0), F(1)), Point2(F(0), F(-1))])
    assert not validate_transition_set(s, d, [Point2(F(0), F(1))])


def test_transition_override_is_used_and_checked():
    s = parse_spec(EX12 + "transition_points: [[0, 1], [0, -1]]\n")
    box = working_box(s)
    d = decompose_complement(s, box, 256)
    tr = choose_transition_points(s, d, classify_special_points(s, box))
    assert sorted(tr) == [(0, -1), (0, 1)]
    bad = parse_spec(EX12 + "transition_points: [[0, 1]]\n")
    with pytest.raises(TransitionError):
        choose_transition_points(bad, d, classify_special_points(bad, box))


def test_circle_and_triod_transitions():
    for text, n in ((CIRCLE, 1), (TRIOD, 0)):
        s = parse_spec(text)
        box = working_box(s)
        d = decompose_complement(s, box, 256)
        tr = choose_transition_points(s, d, classify_special_points(s, box))
        assert len(tr) == n
        assert validate_transition_set(s, d, tr)


def test_branch_seeds_triod():
    s = parse_spec(TRIOD)
    box = working_box(s)
    sp = classify_special_points(s, box)
    for i in (1, 2, 4, 8):
        (seed,) = branch_seeds(s, sp.ng[0], i, box)
        assert seed == pytest.approx((-1.0 / i, 0.0), abs=1e-9)
        assert math.hypot(*seed) <= 2.0 / i
    seeds, paths = all_branch_seeds(s, sp, 4, box)
    assert seeds == [(F(-1, 4), 0)]
    assert alpha_limit(sp) == [(0, 0)]


def test_no_ng_means_no_seeds():
    s = parse_spec(EX12)
    box = working_box(s)
    sp = classify_special_points(s, box)
    assert all_branch_seeds(s, sp, 4, box)[0] == []
    assert alpha_limit(sp) == []


def test_isolated_point_of_curve_clause_rejected():
    # x^2 (x-1)^2 ... the clause y^2 = x^2 (x - 1) has an isolated real point at the origin
    s = parse_spec("clauses:\n  - f: y^2 - x^2*(x-1)\n    constraints:\n"
                   "      - {g: 4 - x^2 - y^2, rel: \">=\"}\n")
    with pytest.raises(IsolatedPoint):
        classify_special_points(s, working_box(s))
