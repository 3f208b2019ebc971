"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

import re
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Mapping, NamedTuple, Union

import numpy as np

Number = Union[int, Fraction]

_ALIASES = {"x1": "x", "x2": "y", "lambda": "l"}
_BASE_ORDER = {"x": 0, "y": 1, "l": 2}
_ALPHA = re.compile(r"a([1-9][0-9]*)")

# bits per exponent when packing exponent vectors into one int
_PACK = 20
_MASK = (1 << _PACK) - 1


class Point2(NamedTuple):
    x: Number | float
    y: Number | float

    @property
    def exact(self) -> bool:
        return isinstance(self.x, (int, Fraction)) and isinstance(self.y, (int, Fraction))


def canonical_var(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name in _BASE_ORDER or _ALPHA.fullmatch(name):
        return name
    raise ValueError(f"unknown variable {name!r}")


def var_sort_key(name: str) -> tuple[int, int]:
    if name in _BASE_ORDER:
        return (_BASE_ORDER[name], 0)
    m = _ALPHA.fullmatch(name)
    if m is None:
        raise ValueError(f"unknown variable {name!r}")
    return (3, int(m.group(1)))


def _merge_rosters(*rosters: Iterable[str]) -> tuple[str, ...]:
    names = set()
    for r in rosters:
        names.update(r)
    return tuple(sorted(names, key=var_sort_key))


def _to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"exact coefficient required, got {type(c).__name__}")


class Poly:
    """Immutable sparse polynomial.

    ``terms`` maps exponent tuples (aligned with ``variables``) to nonzero
    :class:`~fractions.Fraction` coefficients.  The zero polynomial has no
    terms.  Binary operations widen both operands to the union roster.
    """

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, ...], Number] | None = None,
                 variables: Iterable[str] = ()):
        variables = tuple(canonical_var(v) for v in variables)
        if list(variables) != sorted(set(variables), key=var_sort_key):
            raise ValueError(f"roster must be sorted and unique: {variables}")
        clean = {}
        n = len(variables)
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != n or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for roster {variables}")
            c = _to_fraction(c)
            if c:
                clean[exps] = clean.get(exps, 0) + c
                if not clean[exps]:
                    del clean[exps]
        self.variables = variables
        self.terms = clean
        self._hash = None

    # ---- construction -------------------------------------------------------------

    @classmethod
    def _raw(cls, terms: dict, variables: tuple[str, ...]) -> "Poly":
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c: Number, variables: Iterable[str] = ()) -> "Poly":
        variables = tuple(variables)
        return cls({(0,) * len(variables): c} if c else {}, variables)

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({(1,): 1}, (canonical_var(name),))

    @classmethod
    def parse(cls, text: str) -> "Poly":
        from .parse import parse_poly
        return parse_poly(text)

    # ---- roster handling ------------------------------------------------------------

    def with_roster(self, roster: tuple[str, ...]) -> "Poly":
        if roster == self.variables:
            return self
        idx = []
        for v in self.variables:
            if v not in roster:
                raise ValueError(f"roster {roster} lacks variable {v}")
            idx.append(roster.index(v))
        terms = {}
        for exps, c in self.terms.items():
            new = [0] * len(roster)
            for i, e in zip(idx, exps):
                new[i] = e
            terms[tuple(new)] = c
        return Poly._raw(terms, roster)

    def trimmed(self) -> "Poly":
        """Drop variables that do not occur."""
        used = [i for i, _ in enumerate(self.variables)
                if any(e[i] for e in self.terms)]
        if len(used) == len(self.variables):
            return self
        roster = tuple(self.variables[i] for i in used)
        return Poly._raw({tuple(e[i] for i in used): c for e, c in self.terms.items()}, roster)

    def _align(self, other) -> tuple["Poly", "Poly"]:
        if not isinstance(other, Poly):
            other = Poly.const(_to_fraction(other))
        if other.variables == self.variables:
            return self, other
        roster = _merge_rosters(self.variables, other.variables)
        return self.with_roster(roster), other.with_roster(roster)

    # ---- predicates ---------------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * len(self.variables), Fraction(0))

    def used_variables(self) -> tuple[str, ...]:
        return self.trimmed().variables

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        a, b = self._align(other)
        return a.terms == b.terms

    def __hash__(self) -> int:
        if self._hash is None:
            t = self.trimmed()
            self._hash = hash((t.variables, frozenset(t.terms.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    # ---- arithmetic ------------------------------------------------------------------------

    def __neg__(self) -> "Poly":
        return Poly._raw({e: -c for e, c in self.terms.items()}, self.variables)

    def __add__(self, other) -> "Poly":
        a, b = self._align(other)
        terms = dict(a.terms)
        for e, c in b.terms.items():
            s = terms.get(e, 0) + c
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
        return Poly._raw(terms, a.variables)

    __radd__ = __add__

    def __sub__(self, other) -> "Poly":
        a, b = self._align(other)
        return a + (-b)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Poly._raw({}, self.variables)
            return Poly._raw({e: c * other for e, c in self.terms.items()}, self.variables)
        a, b = self._align(other)
        return Poly._raw(_mul_terms(a.terms, b.terms, len(a.variables)), a.variables)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result = Poly.const(1, self.variables)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, c: Number) -> "Poly":
        return self * _to_fraction(c)

    # ---- degrees and leading data ---------------------------------------------------------------

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, var: str) -> int:
        var = canonical_var(var)
        if var not in self.variables:
            return 0 if self.terms else -1
        i = self.variables.index(var)
        return max((e[i] for e in self.terms), default=-1)

    def leading_exponent(self) -> tuple[int, ...]:
        """Leading exponent in graded-lexicographic order."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms, key=lambda e: (sum(e), e))

    def leading_coefficient(self) -> Fraction:
        return self.terms[self.leading_exponent()]

    def coeff_in(self, var: str, d: int) -> "Poly":
        """Coefficient of ``var**d``, as a polynomial with ``var`` exponent zeroed."""
        var = canonical_var(var)
        if var not in self.variables:
            return self if d == 0 else Poly._raw({}, self.variables)
        i = self.variables.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i] == d:
                out[e[:i] + (0,) + e[i + 1:]] = c
        return Poly._raw(out, self.variables)

    # ---- normalization ----------------------------------------------------------------------------

    def integer_content(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        den = reduce(lcm, (c.denominator for c in self.terms.values()), 1)
        num = reduce(gcd, (abs(c.numerator * (den // c.denominator)) for c in self.terms.values()), 0)
        return Fraction(num, den)

    def normalized(self) -> "Poly":
        """Primitive integer form with positive graded-lex leading coefficient."""
        if not self.terms:
            return self
        c = self.integer_content()
        if self.leading_coefficient() < 0:
            c = -c
        return Poly._raw({e: v / c for e, v in self.terms.items()}, self.variables)

    # ---- calculus and evaluation ------------------------------------------------------------------

    def partial(self, var: str) -> "Poly":
        var = canonical_var(var)
        if var not in self.variables:
            return Poly._raw({}, self.variables)
        i = self.variables.index(var)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
        return Poly._raw(out, self.variables)

    def eval(self, at: Mapping[str, object]):
        """Evaluate at a full assignment; exact when all values are exact."""
        at = {canonical_var(k): v for k, v in at.items()}
        missing = [v for v in self.variables if v not in at]
        if missing:
            raise KeyError(f"assignment lacks variables {missing}")
        vals = [at[v] for v in self.variables]
        powers: list[dict[int, object]] = [{0: 1} for _ in vals]
        total = 0
        for e, c in self.terms.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    p = powers[i].get(k)
                    if p is None:
                        p = vals[i] ** k
                        powers[i][k] = p
                    term = term * p
            total = total + term
        return total

    def __call__(self, *args, **kwargs):
        if args:
            return self.eval(dict(zip(("x", "y"), args), **kwargs))
        return self.eval(kwargs)

    def subs(self, values: Mapping[str, Number]) -> "Poly":
        """Substitute exact numbers for some variables; those leave the roster."""
        values = {canonical_var(k): _to_fraction(v) for k, v in values.items()}
        keep = [i for i, v in enumerate(self.variables) if v not in values]
        drop = [(i, values[v]) for i, v in enumerate(self.variables) if v in values]
        roster = tuple(self.variables[i] for i in keep)
        out: dict = {}
        for e, c in self.terms.items():
            for i, val in drop:
                if e[i]:
                    c = c * val ** e[i]
            if not c:
                continue
            key = tuple(e[i] for i in keep)
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Poly._raw(out, roster)

    def compose(self, images: Mapping[str, "Poly"]) -> "Poly":
        """Substitute polynomials for variables (others stay as they are)."""
        images = {canonical_var(k): v for k, v in images.items()}
        result = Poly._raw({}, ())
        cache: dict[tuple[str, int], Poly] = {}
        for e, c in self.terms.items():
            term = Poly.const(c)
            for v, k in zip(self.variables, e):
                if not k:
                    continue
                key = (v, k)
                if key not in cache:
                    base = images.get(v, Poly.var(v))
                    cache[key] = base ** k
                term = term * cache[key]
            result = result + term
        return result

    def divexact(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError("division is not exact")
        return q

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        """Multivariate division by the graded-lex leading term of ``other``."""
        a, b = self._align(other)
        if not b.terms:
            raise ZeroDivisionError("polynomial division by zero")
        lead_b = b.leading_exponent()
        lc_b = b.terms[lead_b]
        rem = dict(a.terms)
        quot: dict = {}
        kept: dict = {}
        key = lambda e: (sum(e), e)
        while rem:
            lead = max(rem, key=key)
            c = rem[lead]
            if all(x >= y for x, y in zip(lead, lead_b)):
                shift = tuple(x - y for x, y in zip(lead, lead_b))
                f = c / lc_b
                quot[shift] = quot.get(shift, 0) + f
                for e, cb in b.terms.items():
                    k = tuple(x + y for x, y in zip(e, shift))
                    s = rem.get(k, 0) - f * cb
                    if s:
                        rem[k] = s
                    else:
                        rem.pop(k, None)
            else:
                kept[lead] = c
                del rem[lead]
        return Poly._raw(quot, a.variables), Poly._raw(kept, a.variables)

    # ---- numeric export -------------------------------------------------------------------------------

    def to_dense(self, variables: tuple[str, str] = ("x", "y")) -> np.ndarray:
        """Dense float64 coefficient array ``C[i, j]`` of ``x**i * y**j``."""
        t = self.trimmed()
        extra = [v for v in t.variables if v not in variables]
        if extra:
            raise ValueError(f"polynomial still depends on {extra}; substitute first")
        p = t.with_roster(_merge_rosters(t.variables, variables))
        ix, iy = p.variables.index(variables[0]), p.variables.index(variables[1])
        dx = max((e[ix] for e in p.terms), default=0)
        dy = max((e[iy] for e in p.terms), default=0)
        out = np.zeros((dx + 1, dy + 1))
        for e, c in p.terms.items():
            out[e[ix], e[iy]] += float(c)
        return out

    # ---- text --------------------------------------------------------------------------------------------

    def __str__(self) -> str:
        from .parse import format_poly
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"


def _mul_terms(a: dict, b: dict, nvars: int) -> dict:
    """Product of two term maps using packed exponents and integer arithmetic."""
    if not a or not b:
        return {}
    da = reduce(lcm, (c.denominator for c in a.values()), 1)
    db = reduce(lcm, (c.denominator for c in b.values()), 1)
    shifts = [_PACK * i for i in range(nvars)]

    def pack(e):
        k = 0
        for s, x in zip(shifts, e):
            k |= x << s
        return k

    A = [(pack(e), c.numerator * (da // c.denominator)) for e, c in a.items()]
    B = [(pack(e), c.numerator * (db // c.denominator)) for e, c in b.items()]
    acc: dict[int, int] = {}
    get = acc.get
    for ka, ca in A:
        for kb, cb in B:
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb
    den = da * db
    out = {}
    for k, v in acc.items():
        if v:
            out[tuple((k >> s) & _MASK for s in shifts)] = Fraction(v, den)
    return out


def var(name: str) -> Poly:
    return Poly.var(name)


def const(c: Number) -> Poly:
    return Poly.const(_to_fraction(c))
