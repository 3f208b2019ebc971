"""Multivariate gcd over the rationals by recursive primitive remainder sequences."""

from __future__ import annotations

from .poly import Poly, _merge_rosters, var_sort_key

ONE = Poly.const(1)


def _main_var(p: Poly, q: Poly) -> str | None:
    used = set(p.used_variables()) | set(q.used_variables())
    if not used:
        return None
    return max(used, key=var_sort_key)


def _content(p: Poly, v: str) -> Poly:
    """gcd of the coefficients of ``p`` viewed as a polynomial in ``v``."""
    g = Poly.const(0)
    for d in range(p.degree_in(v), -1, -1):
        c = p.coeff_in(v, d)
        if c.is_zero():
            continue
        g = _gcd(g, c)
        if g.is_constant():
            return ONE
    return g.normalized()


def _prem(a: Poly, b: Poly, v: str) -> Poly:
    db = b.degree_in(v)
    lb = b.coeff_in(v, db)
    xv = Poly.var(v)
    r = a
    while not r.is_zero():
        dr = r.degree_in(v)
        if dr < db:
            break
        lr = r.coeff_in(v, dr)
        r = lb * r - lr * xv ** (dr - db) * b
    return r


def _primitive(p: Poly, v: str) -> Poly:
    c = _content(p, v)
    return p if c.is_constant() else p.divexact(c)


def _gcd(p: Poly, q: Poly) -> Poly:
    if p.is_zero():
        return q.normalized()
    if q.is_zero():
        return p.normalized()
    if p.is_constant() or q.is_constant():
        return ONE
    v = _main_var(p, q)
    dp, dq = p.degree_in(v), q.degree_in(v)
    if dp <= 0:
        return _gcd(p, _content(q, v))
    if dq <= 0:
        return _gcd(_content(p, v), q)
    cp, cq = _content(p, v), _content(q, v)
    c = _gcd(cp, cq)
    a = p if cp.is_constant() else p.divexact(cp)
    b = q if cq.is_constant() else q.divexact(cq)
    if a.degree_in(v) < b.degree_in(v):
        a, b = b, a
    a, b = a.normalized(), b.normalized()
    while True:
        r = _prem(a, b, v)
        if r.is_zero():
            break
        if r.degree_in(v) <= 0:
            return c
        a, b = b, _primitive(r, v).normalized()
    return (c * b).normalized()


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Normalized gcd (primitive, positive graded-lex leading coefficient).

    ``gcd(p, 0)`` is ``p`` normalized; both zero raises :class:`ValueError`.
    """
    if p.is_zero() and q.is_zero():
        raise ValueError("gcd of two zero polynomials is undefined")
    roster = _merge_rosters(p.variables, q.variables)
    return _gcd(p.with_roster(roster), q.with_roster(roster)).trimmed()


def poly_gcd_many(polys) -> Poly:
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        raise ValueError("gcd of zero polynomials is undefined")
    g = polys[0].normalized()
    for p in polys[1:]:
        if g.is_constant():
            return ONE
        g = poly_gcd(g, p)
    return g


def square_free_part(p: Poly) -> Poly:
    """``p / gcd(p, dp/dv ...)`` over every occurring variable, normalized."""
    p = p.trimmed()
    if p.is_constant():
        raise ValueError("square-free part of a constant is undefined")
    g = poly_gcd_many([p] + [p.partial(v) for v in p.variables])
    q = p if g.is_constant() else p.divexact(g)
    return q.normalized()


def is_square_free(p: Poly) -> bool:
    p = p.trimmed()
    return poly_gcd_many([p] + [p.partial(v) for v in p.variables]).is_constant()
