"""The perturbed Hamiltonian family and its compactified/pulled-back variants.

``h = f**2 - l * prod_{p in S} (|x - p|**2 - l**2)`` (times the seed product in
the non-generic case) and

    X = (h_y + h h_x) d/dx + (-h_x + h h_y) d/dy,

which satisfies ``X(h) = h |grad h|**2`` identically.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import Point2, Poly, format_poly, parse_poly
from .errors import HypothesisViolation, SpecError
from .semialg import Clause, Constraint, Relation, SemialgebraicSpec, make_spec

X, Y, L = Poly.var("x"), Poly.var("y"), Poly.var("l")
INFINITY = "infinity"


class Mode(str, enum.Enum):
    GENERIC = "GENERIC"
    NON_GENERIC = "NON_GENERIC"


def _sq_dist_minus(px, py, radius2) -> Poly:
    return (X - px) ** 2 + (Y - py) ** 2 - radius2


def _require_rational(points):
    out = []
    for p in points:
        if not Point2(*p).exact:
            raise ValueError(f"point {tuple(p)} must have rational coordinates")
        out.append(Point2(Fraction(p[0]), Fraction(p[1])))
    return out


@dataclass(frozen=True)
class FamilyH:
    h: Poly
    f: Poly
    S: tuple[Point2, ...]
    mode: Mode = Mode.GENERIC
    seeds: tuple[Point2, ...] = ()
    symbolic_h: Poly | None = None
    alpha_limit: tuple[Point2, ...] = ()

    def model(self, t: float) -> "HModel":
        pts = [(float(p.x), float(p.y)) for p in self.S + self.seeds]
        return HModel(self.f.to_dense(), np.array(pts, dtype=float).reshape(-1, 2),
                      float(t), True, self.h)


def build_family(f: Poly, S) -> FamilyH:
    """Generic family ``f**2 - l * prod_{p in S}(|x-p|**2 - l**2)``."""
    S = tuple(_require_rational(S))
    prod = Poly.const(1)
    for p in S:
        prod = prod * _sq_dist_minus(p.x, p.y, L * L)
    return FamilyH(f * f - L * prod, f, S)


def build_family_ng(f: Poly, S, seeds, alpha_limit=(), delta: float = 0.0) -> FamilyH:
    """Non-generic family with seeds substituted; the symbolic form keeps ``a1..a2n``."""
    S = tuple(_require_rational(S))
    seeds = tuple(_require_rational(seeds))
    for a in seeds:
        for p in S:
            if math.hypot(float(a.x - p.x), float(a.y - p.y)) <= delta:
                raise ValueError(f"seed {tuple(a)} coincides with special point {tuple(p)}")
    base = build_family(f, S)
    if not seeds:
        return base
    prod_s = Poly.const(1)
    for p in S:
        prod_s = prod_s * _sq_dist_minus(p.x, p.y, L * L)
    prod_a = Poly.const(1)
    prod_sym = Poly.const(1)
    for k, a in enumerate(seeds):
        prod_a = prod_a * _sq_dist_minus(a.x, a.y, L * L)
        ax, ay = Poly.var(f"a{2 * k + 1}"), Poly.var(f"a{2 * k + 2}")
        prod_sym = prod_sym * ((X - ax) ** 2 + (Y - ay) ** 2 - L * L)
    h = f * f - L * prod_s * prod_a
    sym = f * f - L * prod_s * prod_sym
    return FamilyH(h, f, S, Mode.NON_GENERIC, seeds, sym, tuple(_require_rational(alpha_limit)))


def alpha_assignment(seeds) -> dict[str, Fraction]:
    out = {}
    for k, a in enumerate(seeds):
        out[f"a{2 * k + 1}"] = Fraction(a[0])
        out[f"a{2 * k + 2}"] = Fraction(a[1])
    return out


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class PlanarField:
    P: Poly
    Q: Poly

    @property
    def roster(self) -> tuple[str, ...]:
        from .algebra.poly import _merge_rosters
        return _merge_rosters(self.P.used_variables(), self.Q.used_variables())

    @property
    def degree(self) -> int:
        """Degree in the plane variables."""
        return max(_plane_degree(self.P), _plane_degree(self.Q))

    def at(self, params: dict) -> "PlanarField":
        return PlanarField(self.P.subs(params), self.Q.subs(params))

    def __call__(self, x, y, params=None):
        at = dict(params or {})
        at.update(x=x, y=y)
        p = self.P.eval({k: v for k, v in at.items() if k in self.P.variables})
        q = self.Q.eval({k: v for k, v in at.items() if k in self.Q.variables})
        return p, q


def _plane_degree(p: Poly) -> int:
    idx = [i for i, v in enumerate(p.variables) if v in ("x", "y")]
    return max((sum(e[i] for i in idx) for e in p.terms), default=0)


def hamiltonian_field(h: Poly) -> PlanarField:
    hx, hy = h.partial("x"), h.partial("y")
    return PlanarField(hy + h * hx, -hx + h * hy)


def lie_residual(h: Poly, field_: PlanarField | None = None) -> Poly:
    field_ = field_ or hamiltonian_field(h)
    hx, hy = h.partial("x"), h.partial("y")
    return field_.P * hx + field_.Q * hy - h * (hx * hx + hy * hy)


def lie_identity_check(h: Poly, field_: PlanarField | None = None) -> bool:
    """Exact test of ``X(h) = h |grad h|**2``."""
    return lie_residual(h, field_).is_zero()


# ---------------------------------------------------------------------------
# Bendixson chart


def bendixson_point_map(pt) -> Point2:
    x, y = pt
    r = x * x + y * y
    if r == 0:
        raise ValueError("the origin has no image in the finite chart")
    if isinstance(r, (int, Fraction)):
        r = Fraction(r)
    return Point2(x / r, -y / r)


def _homogeneous_parts(p: Poly) -> dict[int, Poly]:
    from .algebra.poly import _merge_rosters
    t = p.with_roster(_merge_rosters(p.variables, ("x", "y")))
    ix, iy = t.variables.index("x"), t.variables.index("y")
    parts: dict[int, dict] = {}
    for e, c in t.terms.items():
        parts.setdefault(e[ix] + e[iy], {})[e] = c
    return {k: Poly._raw(v, t.variables) for k, v in parts.items()}


RHO = X * X + Y * Y


def _strip_rho(p: Poly) -> tuple[Poly, int]:
    k = 0
    while not p.is_zero():
        q, r = p.divmod(RHO)
        if not r.is_zero():
            break
        p, k = q, k + 1
    return p, k


def chart_image(p: Poly) -> Poly:
    """Numerator of ``p(u/rho, -v/rho)`` cleared of every power of ``rho``."""
    parts = _homogeneous_parts(p)
    m = max(parts)
    flip = {"y": -Y}
    out = Poly.const(0)
    for k, pk in parts.items():
        out = out + RHO ** (m - k) * pk.compose(flip)
    return _strip_rho(out)[0]


def translate_poly(p: Poly, tau) -> Poly:
    """``p(x - tau)``: the polynomial of the set shifted by ``tau``."""
    return p.compose({"x": X - tau[0], "y": Y - tau[1]})


def translate_spec(spec: SemialgebraicSpec, tau) -> SemialgebraicSpec:
    clauses = [Clause(translate_poly(c.f, tau),
                      tuple(Constraint(translate_poly(k.g, tau), k.rel) for k in c.constraints))
               for c in spec.clauses]
    return make_spec(clauses, check_unbounded=False)


def _translation_candidates(seed: int = 0):
    yield (Fraction(0), Fraction(0))
    for t in ((1, 0), (0, 1), (-1, 0), (0, -1)):
        yield (Fraction(t[0]), Fraction(t[1]))
    rng = random.Random(seed)
    for _ in range(95):
        yield (Fraction(rng.randint(-64, 64), 64), Fraction(rng.randint(-64, 64), 64))


@dataclass(frozen=True)
class CompactifiedSpec:
    spec: SemialgebraicSpec
    translation: tuple[Fraction, Fraction]
    source: SemialgebraicSpec


def compactify_set(spec: SemialgebraicSpec) -> CompactifiedSpec:
    """Image of the (translated) set under the Bendixson chart, origin adjoined."""
    if not spec.unbounded:
        raise ValueError("compactify_set needs an unbounded set")
    for tau in _translation_candidates():
        moved = translate_spec(spec, tau) if any(tau) else spec
        f0 = moved.f_gamma.eval({"x": 0, "y": 0})
        if f0 == 0:
            continue
        g = [moved.f_gamma.partial(v).eval({"x": 0, "y": 0}) for v in ("x", "y")]
        if abs(float(f0)) < 1e-2 * max(1.0, math.hypot(float(g[0]), float(g[1]))):
            continue
        break
    else:
        raise HypothesisViolation("no translation moves the origin off the algebraic set",
                                  stage="compactify")
    clauses = []
    for c in moved.clauses:
        cons = tuple(Constraint(chart_image(k.g), k.rel) for k in c.constraints)
        clauses.append(Clause(chart_image(c.f).normalized(), cons))
    at0 = {"x": 0, "y": 0}
    if not any(c.f.eval(at0) == 0 and all(k.rel.holds(k.g.eval(at0)) for k in c.constraints)
               for c in clauses):
        host = next((c.f for c in clauses if c.f.eval(at0) == 0), RHO)
        clauses.append(Clause(host, (Constraint(RHO, Relation.EQ),) if host is not RHO else ()))
    image = make_spec(clauses, check_unbounded=False)
    return CompactifiedSpec(image, tau, spec)


_M = ((Y * Y - X * X, 2 * X * Y), (-2 * X * Y, Y * Y - X * X))


def pullback_field(Yf: PlanarField, d="auto") -> tuple[PlanarField, int]:
    """Field on the x-plane pushed forward from the chart field ``Yf``.

    Returns ``(r**d * Phi_* Y, d)`` with ``r = x**2 + y**2``.  With ``d="auto"``
    the smallest ``d`` giving polynomial components is used.
    """
    if Yf.P.is_zero() and Yf.Q.is_zero():
        return PlanarField(Poly.const(0), Poly.const(0)), 0
    m = Yf.degree
    comps = []
    for c in (Yf.P, Yf.Q):
        parts = _homogeneous_parts(c) if not c.is_zero() else {}
        num = Poly.const(0)
        for k, ck in parts.items():
            num = num + RHO ** (m - k) * ck.compose({"y": -Y})
        comps.append(num)
    # Phi_* Y = M * comps / r**m
    P = _M[0][0] * comps[0] + _M[0][1] * comps[1]
    Q = _M[1][0] * comps[0] + _M[1][1] * comps[1]
    k = 0
    while True:
        qp, rp = P.divmod(RHO)
        qq, rq = Q.divmod(RHO)
        if not (rp.is_zero() and rq.is_zero()) or (P.is_zero() and Q.is_zero()):
            break
        P, Q, k = qp, qq, k + 1
    d_min = m - k
    if d == "auto":
        return PlanarField(P, Q), d_min
    d = int(d)
    if d < d_min:
        raise ValueError(f"clearing degree {d} is below the minimal {d_min}")
    extra = RHO ** (d - d_min)
    return PlanarField(P * extra, Q * extra), d


def translate_field(Xf: PlanarField, tau) -> PlanarField:
    """Field for the set shifted back by ``-tau``: ``X(x) -> X(x + tau)``."""
    sub = {"x": X + tau[0], "y": Y + tau[1]}
    return PlanarField(Xf.P.compose(sub), Xf.Q.compose(sub))


def compactified_field_eval(Xf: PlanarField, pt, params=None):
    """``(P, Q) / (1 + (x**2 + y**2)**d)``; zero at infinity."""
    if isinstance(pt, str) and pt == INFINITY:
        return (0.0, 0.0)
    x, y = pt
    p, q = Xf(x, y, params)
    d = max(Xf.degree, 1)   # a constant field still decays at infinity
    den = 1 + (x * x + y * y) ** d
    return (p / den, q / den)


# ---------------------------------------------------------------------------
# rational snapping


def snap_rational(x: float, y: float, polys=(), max_den: int = 2 ** 40,
                  radius: float | None = None) -> Point2:
    """Rational point near ``(x, y)``; small denominators win when they are exact zeros.

    ``radius`` bounds how far an exact small-denominator zero may be from
    the input (default: float round-off).
    """
    fx, fy = Fraction(x), Fraction(y)
    if radius is None:
        radius = 1e-9 * max(1.0, abs(x), abs(y))
    for den in (1, 2, 4, 8, 10, 16, 100, 1000, 10 ** 4, 10 ** 6):
        cand = (fx.limit_denominator(den), fy.limit_denominator(den))
        if math.hypot(float(cand[0]) - x, float(cand[1]) - y) > radius:
            continue
        if polys and all(p.eval({"x": cand[0], "y": cand[1]}) == 0 for p in polys):
            return Point2(*cand)
    return Point2(fx.limit_denominator(max_den), fy.limit_denominator(max_den))


# ---------------------------------------------------------------------------
# float model used by tracing and integration


class HModel:
    """Float evaluation of ``h(., t)``.

    Either structured (``coef`` is ``f`` and ``square`` is true, with the
    special points in ``pts``) or plain (``coef`` is ``h(., t)`` expanded).
    """

    def __init__(self, coef, pts, t, square, h_poly: Poly | None = None):
        self.coef = np.ascontiguousarray(np.atleast_2d(np.asarray(coef, dtype=float)))
        self.pts = np.ascontiguousarray(np.asarray(pts, dtype=float).reshape(-1, 2))
        self.t = float(t)
        self.square = bool(square)
        self.h_poly = h_poly
        self._scale = None

    @classmethod
    def from_poly(cls, h: Poly, t: float) -> "HModel":
        return cls(dense_at(h, t), np.zeros((0, 2)), 0.0, False, h)

    def eval(self, xs, ys):
        from .kernels import hmodel_eval
        return hmodel_eval(self.coef, self.pts, self.t, self.square, xs, ys)

    def point(self, x, y):
        from .kernels import hmodel_point
        return hmodel_point(self.coef, self.pts, self.t, self.square, float(x), float(y))

    def field_tuple(self, sign: float = 1.0):
        z = np.zeros((1, 1))
        return (0, self.coef, self.pts, self.t, self.square, z, z, sign)

    @property
    def scale(self) -> float:
        """Largest coefficient magnitude of ``h(., t)`` expanded in ``x, y``."""
        if self._scale is None:
            if self.h_poly is not None and "l" in self.h_poly.used_variables():
                self._scale = float(np.abs(dense_at(self.h_poly, self.t)).max())
            elif self.h_poly is not None:
                self._scale = float(np.abs(self.h_poly.to_dense()).max())
            else:
                self._scale = float(np.abs(self.coef).max())
        return self._scale


def dense_at(h: Poly, t: float) -> np.ndarray:
    """Dense ``x, y`` coefficients of ``h`` with ``l = t`` (float)."""
    extra = [v for v in h.used_variables() if v not in ("x", "y", "l")]
    if extra:
        raise ValueError(f"substitute {extra} before numeric evaluation")
    if "l" not in h.used_variables():
        return h.to_dense()
    from .algebra.poly import _merge_rosters
    p = h.with_roster(_merge_rosters(h.variables, ("x", "y", "l")))
    ix, iy, il = (p.variables.index(v) for v in ("x", "y", "l"))
    dx = max(e[ix] for e in p.terms)
    dy = max(e[iy] for e in p.terms)
    out = np.zeros((dx + 1, dy + 1))
    for e, c in p.terms.items():
        out[e[ix], e[iy]] += float(c) * t ** e[il]
    return out


def dense_field(Xf: PlanarField, params) -> tuple[np.ndarray, np.ndarray]:
    fx = Xf.at(params)
    return fx.P.to_dense(), fx.Q.to_dense()


# ---------------------------------------------------------------------------
# field.txt


def format_field_text(Xf: PlanarField, h: Poly, params: dict[str, str]) -> str:
    lines = ["# polynomial family; grammar: + - * ^ with rational literals",
             f"P = {format_poly(Xf.P)}", f"Q = {format_poly(Xf.Q)}", f"h = {format_poly(h)}"]
    for k in sorted(params):
        lines.append(f"{k} = {params[k]}")
    return "\n".join(lines) + "\n"


def write_field_text(path, Xf: PlanarField, h: Poly, params: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_field_text(Xf, h, params))


@dataclass
class FieldFile:
    P: Poly
    Q: Poly
    h: Poly
    params: dict = field(default_factory=dict)

    @property
    def field(self) -> PlanarField:
        return PlanarField(self.P, self.Q)


def read_field_text(path) -> FieldFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}", stage="io") from None
    return parse_field_text(text)


def parse_field_text(text: str) -> FieldFile:
    polys: dict[str, Poly] = {}
    params: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise SpecError("expected 'name = value'", stage="field", line=n, column=1)
        key, val = (part.strip() for part in s.split("=", 1))
        if key in ("P", "Q", "h"):
            try:
                polys[key] = parse_poly(val)
            except Exception as e:
                raise SpecError(str(e), stage="field", line=n,
                                column=line.index("=") + 3 + getattr(e, "pos", 0)) from None
        else:
            params[key] = val
    missing = [k for k in ("P", "Q", "h") if k not in polys]
    if missing:
        raise SpecError(f"field file lacks {', '.join(missing)}", stage="field")
    return FieldFile(polys["P"], polys["Q"], polys["h"], params)
