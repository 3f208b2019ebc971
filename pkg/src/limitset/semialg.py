"""Semialgebraic sets given as unions of clauses ``{f = 0, g_j rel 0}``.

The input document is YAML (JSON is accepted as a subset)::

    clauses:
      - f: "y*(x^2+y^2-1)"
        constraints:
          - {g: "4 - x^2 - y^2", rel: ">="}
    bbox: [-3, 3, -3, 3]            # optional
    transition_points: [[0, 1], ["0", "-1"]]   # optional override

Numbers may be integers, decimals or ``"p/q"`` strings.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import yaml

from .algebra import Point2, Poly, PolySyntaxError, format_poly, parse_poly, square_free_part
from .errors import SpecError
from .kernels import hmodel_eval


class Relation(str, enum.Enum):
    GT = ">"
    GE = ">="
    EQ = "="

    def holds(self, value) -> bool:
        if self is Relation.GT:
            return value > 0
        if self is Relation.GE:
            return value >= 0
        return value == 0


class Membership(enum.Enum):
    IN_GAMMA = "IN_GAMMA"
    ON_ALGEBRAIC_ONLY = "ON_ALGEBRAIC_ONLY"
    OUTSIDE = "OUTSIDE"


@dataclass(frozen=True)
class Constraint:
    g: Poly
    rel: Relation


@dataclass(frozen=True)
class Clause:
    f: Poly
    constraints: tuple[Constraint, ...] = ()

    @cached_property
    def f_sf(self) -> Poly:
        return square_free_part(self.f)


@dataclass(frozen=True)
class SemialgebraicSpec:
    clauses: tuple[Clause, ...]
    f_gamma: Poly
    bbox: tuple[float, float, float, float] | None = None
    transition_points: tuple[Point2, ...] | None = None
    unbounded: bool = False
    text: str = field(default="", compare=False)

    @property
    def is_algebraic(self) -> bool:
        return all(not c.constraints for c in self.clauses)

    def to_dict(self) -> dict:
        d: dict = {"clauses": [
            {"f": format_poly(c.f),
             "constraints": [{"g": format_poly(k.g), "rel": k.rel.value} for k in c.constraints]}
            for c in self.clauses]}
        if self.bbox is not None:
            d["bbox"] = [float(v) for v in self.bbox]
        if self.transition_points is not None:
            d["transition_points"] = [[_num_text(p.x), _num_text(p.y)]
                                      for p in self.transition_points]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _num_text(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# ---------------------------------------------------------------------------
# construction


def associated_polynomial(clauses) -> Poly:
    """Square-free part of the product of the clause polynomials."""
    clauses = list(clauses)
    if not clauses:
        raise ValueError("at least one clause is required")
    prod = Poly.const(1)
    for c in clauses:
        f = c.f if isinstance(c, Clause) else c
        prod = prod * square_free_part(f)
    return square_free_part(prod)


def make_spec(clauses, bbox=None, transition_points=None, text: str = "",
              check_unbounded: bool = True) -> SemialgebraicSpec:
    clauses = tuple(clauses)
    for c in clauses:
        if c.f.is_constant():
            raise SpecError(f"clause polynomial {c.f} is constant")
        extra = set(c.f.used_variables()) - {"x", "y"}
        for k in c.constraints:
            extra |= set(k.g.used_variables()) - {"x", "y"}
        if extra:
            raise SpecError(f"clause uses non-plane variables {sorted(extra)}")
    fg = associated_polynomial(clauses)
    spec = SemialgebraicSpec(clauses, fg, bbox, transition_points, False, text)
    if check_unbounded:
        spec = SemialgebraicSpec(clauses, fg, bbox, transition_points,
                                 escapes_to_infinity(spec), text)
    return spec


def _mark(node):
    return node.start_mark.line + 1, node.start_mark.column + 1


def _err(msg, node):
    line, col = _mark(node)
    return SpecError(msg, line=line, column=col)


def _mapping(node, what):
    if not isinstance(node, yaml.MappingNode):
        raise _err(f"{what} must be a mapping", node)
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise _err("mapping keys must be plain names", k)
        out[k.value] = v
    return out


def _sequence(node, what):
    if not isinstance(node, yaml.SequenceNode):
        raise _err(f"{what} must be a list", node)
    return node.value


def _number(node) -> Fraction:
    if not isinstance(node, yaml.ScalarNode):
        raise _err("expected a number", node)
    text = node.value.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise _err(f"invalid number {text!r}", node) from None


def _poly(node) -> Poly:
    if not isinstance(node, yaml.ScalarNode):
        raise _err("expected a polynomial string", node)
    try:
        return parse_poly(node.value)
    except PolySyntaxError as e:
        line, col = _mark(node)
        # the offset is exact for single-line plain or quoted scalars
        quote = 1 if node.style in ("'", '"') else 0
        raise SpecError(str(e).split(" at column")[0] + f" in {node.value!r}",
                        line=line, column=col + quote + e.pos) from None


def parse_spec(text: str, check_unbounded: bool = True) -> SemialgebraicSpec:
    """Parse a spec document; errors carry line and column."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise SpecError(e.problem or str(e), line=mark.line + 1 if mark else None,
                        column=mark.column + 1 if mark else None) from None
    if root is None:
        raise SpecError("empty spec document")
    top = _mapping(root, "spec document")
    unknown = [k for k, _ in root.value if k.value not in ("clauses", "bbox", "transition_points")]
    if unknown:
        raise _err(f"unknown field {unknown[0].value!r}", unknown[0])
    if "clauses" not in top:
        raise _err("missing field 'clauses'", root)
    clauses = []
    for cnode in _sequence(top["clauses"], "clauses"):
        cm = _mapping(cnode, "clause")
        if "f" not in cm:
            raise _err("clause lacks 'f'", cnode)
        f = _poly(cm["f"])
        if f.is_constant():
            raise _err(f"clause polynomial {f} is constant", cm["f"])
        cons = []
        if "constraints" in cm:
            for knode in _sequence(cm["constraints"], "constraints"):
                km = _mapping(knode, "constraint")
                if "g" not in km:
                    raise _err("constraint lacks 'g'", knode)
                relnode = km.get("rel")
                rel_text = relnode.value if relnode is not None else ">="
                try:
                    rel = Relation(rel_text)
                except ValueError:
                    raise _err(f"relation must be one of >, >=, = (got {rel_text!r})",
                               relnode) from None
                cons.append(Constraint(_poly(km["g"]), rel))
        clauses.append(Clause(f, tuple(cons)))
    if not clauses:
        raise _err("at least one clause is required", top["clauses"])
    bbox = None
    if "bbox" in top:
        vals = _sequence(top["bbox"], "bbox")
        if len(vals) != 4:
            raise _err("bbox needs four numbers xmin, xmax, ymin, ymax", top["bbox"])
        bbox = tuple(float(_number(v)) for v in vals)
        if not (bbox[0] < bbox[1] and bbox[2] < bbox[3]):
            raise _err("bbox must satisfy xmin < xmax and ymin < ymax", top["bbox"])
    tps = None
    if "transition_points" in top:
        tps = []
        for pnode in _sequence(top["transition_points"], "transition_points"):
            xy = _sequence(pnode, "transition point")
            if len(xy) != 2:
                raise _err("a point needs two coordinates", pnode)
            tps.append(Point2(_number(xy[0]), _number(xy[1])))
        tps = tuple(tps)
    try:
        return make_spec(clauses, bbox, tps, text, check_unbounded)
    except SpecError as e:
        raise _err(str(e), top["clauses"]) from None


def load_spec(path) -> SemialgebraicSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}", stage="io") from None
    return parse_spec(text)


# ---------------------------------------------------------------------------
# membership


def _exact_point(pt) -> tuple[Fraction, Fraction]:
    x, y = pt
    if isinstance(x, float) or isinstance(y, float):
        raise TypeError("exact membership needs rational coordinates")
    return Fraction(x), Fraction(y)


def clause_holds(clause: Clause, x: Fraction, y: Fraction) -> bool:
    if clause.f.eval({"x": x, "y": y}) != 0:
        return False
    return all(k.rel.holds(k.g.eval({"x": x, "y": y})) for k in clause.constraints)


def member(spec: SemialgebraicSpec, pt) -> Membership:
    """Exact classification of a rational point."""
    x, y = _exact_point(pt)
    if any(clause_holds(c, x, y) for c in spec.clauses):
        return Membership.IN_GAMMA
    if spec.f_gamma.eval({"x": x, "y": y}) == 0:
        return Membership.ON_ALGEBRAIC_ONLY
    return Membership.OUTSIDE


class DenseCache:
    """Float coefficient arrays of the spec polynomials, built once."""

    def __init__(self, spec: SemialgebraicSpec):
        self.f_gamma = spec.f_gamma.to_dense()
        self.clauses = [(c.f_sf.to_dense(),
                         [(k.g.to_dense(), k.rel) for k in c.constraints])
                        for c in spec.clauses]


_EMPTY = np.zeros((0, 2))


def poly_values(coef, xs, ys):
    return hmodel_eval(coef, _EMPTY, 0.0, False, xs, ys)


def constraints_hold(constraints, xs, ys, margin):
    """Float test of a constraint list with a distance-like margin.

    An inequality ``g >= 0`` (or ``> 0``) passes where ``g >= -margin*|grad g|``;
    an equality where ``|g| <= margin*|grad g|``.
    """
    xs = np.asarray(xs, dtype=float)
    ok = np.ones(xs.shape, dtype=bool)
    for coef, rel in constraints:
        g, gx, gy = poly_values(coef, xs, ys)
        tol = margin * np.hypot(gx, gy) + 1e-300
        if rel is Relation.EQ:
            ok &= np.abs(g) <= tol
        else:
            ok &= g >= -tol
    return ok


def member_float(spec: SemialgebraicSpec, xs, ys, margin: float, cache: DenseCache | None = None):
    """Vectorised approximate membership of points already on (or near) some ``f_i = 0``.

    A point counts as in Gamma if for some clause ``|f_i| <= margin*|grad f_i|``
    and its constraints hold with the same margin.
    """
    cache = cache or DenseCache(spec)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros(xs.shape, dtype=bool)
    for fc, cons in cache.clauses:
        f, fx, fy = poly_values(fc, xs, ys)
        near = np.abs(f) <= margin * np.hypot(fx, fy) + 1e-300
        near |= f == 0.0
        if cons:
            near &= constraints_hold(cons, xs, ys, margin)
        out |= near
    return out


# ---------------------------------------------------------------------------
# unboundedness


def _circle_crossings(coef, radius, n=4096):
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    x, y = radius * np.cos(th), radius * np.sin(th)
    v = poly_values(coef, x, y)[0]
    s = np.sign(v)
    idx = np.nonzero(s != np.roll(s, -1))[0]
    pts = []
    for i in idx:
        a, b = th[i], th[i] + 2.0 * math.pi / n
        va = v[i]
        for _ in range(50):
            m = 0.5 * (a + b)
            vm = poly_values(coef, radius * math.cos(m), radius * math.sin(m))[0]
            if (vm > 0) == (va > 0):
                a, va = m, vm
            else:
                b = m
        pts.append((radius * math.cos(a), radius * math.sin(a)))
    return pts


def escapes_to_infinity(spec: SemialgebraicSpec, radius: float | None = None) -> bool:
    """True if some clause of Gamma meets two large circles around the origin."""
    if radius is None:
        ext = 1.0
        if spec.bbox is not None:
            ext = max(1.0, *(abs(v) for v in spec.bbox))
        radius = 1e3 * ext
    for clause in spec.clauses:
        fc = clause.f_sf.to_dense()
        cons = [(k.g.to_dense(), k.rel) for k in clause.constraints]
        hits = []
        for r in (radius, 2.0 * radius):
            pts = _circle_crossings(fc, r)
            if cons and pts:
                arr = np.array(pts)
                pts = arr[constraints_hold(cons, arr[:, 0], arr[:, 1], 1e-9 * r)]
            hits.append(len(pts) > 0)
        if all(hits):
            return True
    return False
