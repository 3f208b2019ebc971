"""Real common zeros of two bivariate polynomials in a box.

Bernstein-basis exclusion with bisection of the longer box side, then damped
Newton refinement from the centre of every surviving leaf box.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .gcd import poly_gcd
from .poly import Point2, Poly


class SolverError(RuntimeError):
    """Subdivision budget exhausted."""


class PositiveDimensionalError(ValueError):
    """The two polynomials share a curve component."""

    def __init__(self, common: Poly):
        self.common = common
        super().__init__(f"common factor {common} gives a positive-dimensional zero set")


@lru_cache(maxsize=64)
def _to_bernstein(n: int) -> np.ndarray:
    m = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for i in range(k + 1):
            m[k, i] = math.comb(k, i) / math.comb(n, i)
    return m


@lru_cache(maxsize=64)
def _binomials(n: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.array([[math.comb(i, k) for k in range(n + 1)] for i in range(n + 1)], dtype=float)
    i, k = np.indices((n + 1, n + 1))
    return c, np.where(i >= k, i - k, 0)


def _shift(n: int, a: float, w: float) -> np.ndarray:
    # t[i, k]: coefficient of s**k in (a + w*s)**i
    c, d = _binomials(n)
    return c * (a ** d) * (w ** np.arange(n + 1))[None, :]


def bernstein_coefficients(coeffs: np.ndarray, box) -> tuple[np.ndarray, float]:
    """Bernstein coefficients of a dense bivariate polynomial on ``box``.

    Returns the coefficient matrix and a rounding-error margin.
    """
    x0, x1, y0, y1 = box
    nx, ny = coeffs.shape[0] - 1, coeffs.shape[1] - 1
    tx, ty = _shift(nx, x0, x1 - x0), _shift(ny, y0, y1 - y0)
    local = tx.T @ coeffs @ ty
    b = _to_bernstein(nx) @ local @ _to_bernstein(ny).T
    mag = np.abs(tx).T @ np.abs(coeffs) @ np.abs(ty)
    return b, 1e-13 * float(mag.sum())


def _eval_grad(c: np.ndarray, x: float, y: float) -> tuple[float, float, float]:
    nx, ny = c.shape
    v = vx = vy = 0.0
    for i in range(nx - 1, -1, -1):
        row = c[i]
        r = ry = 0.0
        for j in range(ny - 1, -1, -1):
            ry = ry * y + r
            r = r * y + row[j]
        vx = vx * x + v
        v = v * x + r
        vy = vy * x + ry
    return v, vx, vy


def _scale(c: np.ndarray, x: float, y: float) -> float:
    i = np.arange(c.shape[0])[:, None]
    j = np.arange(c.shape[1])[None, :]
    return float((np.abs(c) * max(1.0, abs(x)) ** i * max(1.0, abs(y)) ** j).sum())


def _newton(cp, cq, x, y, tol, max_steps=50):
    for _ in range(max_steps):
        fp, px, py = _eval_grad(cp, x, y)
        fq, qx, qy = _eval_grad(cq, x, y)
        det = px * qy - py * qx
        if det == 0.0 or not math.isfinite(det):
            return x, y, fp == 0.0 and fq == 0.0
        dx = (fp * qy - fq * py) / det
        dy = (px * fq - qx * fp) / det
        r0 = math.hypot(fp, fq)
        lam = 1.0
        for _ in range(30):
            xn, yn = x - lam * dx, y - lam * dy
            r1 = math.hypot(_eval_grad(cp, xn, yn)[0], _eval_grad(cq, xn, yn)[0])
            if r1 <= r0:
                break
            lam *= 0.5
        else:
            # rounding floor: no descent left
            return x, y, False
        step = lam * math.hypot(dx, dy)
        x, y = xn, yn
        if step <= 1e-3 * tol or r1 == 0.0:
            return x, y, True
    return x, y, False


def _merge(points, radius):
    out: list[tuple[float, float]] = []
    for p in sorted(points):
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) > radius for q in out):
            out.append(p)
    return out


def _dense_pair(p: Poly, q: Poly):
    return p.to_dense(), q.to_dense()


def _residual(cp, cq, x, y):
    return (abs(_eval_grad(cp, x, y)[0]) / _scale(cp, x, y)
            + abs(_eval_grad(cq, x, y)[0]) / _scale(cq, x, y))


def _singular_roots(cp, cq, stalled, found, reach, tol):
    """One root per cluster of leaf boxes where Newton stalled.

    Near a root with a singular Jacobian the exclusion test fails on a whole
    chain of small boxes; chains are joined by adjacency and the point of
    smallest relative residual among the Newton end points stands for the
    chain if it is a true zero.
    """
    if not stalled:
        return []
    pts = np.asarray(stalled)
    ends = pts[:, 2:]
    pts = pts[:, :2]
    parent = list(range(len(pts)))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(pts[:, 0])
    for a in range(len(order)):
        i = order[a]
        for b in range(a + 1, len(order)):
            j = order[b]
            if pts[j, 0] - pts[i, 0] > reach:
                break
            if abs(pts[j, 1] - pts[i, 1]) <= reach:
                parent[root(i)] = root(j)
    groups: dict = {}
    for i in range(len(pts)):
        groups.setdefault(root(i), []).append(i)
    out = []
    for members in groups.values():
        lo, hi = pts[members].min(axis=0) - reach, pts[members].max(axis=0) + reach
        near = [i for i in members if np.all(ends[i] >= lo) and np.all(ends[i] <= hi)]
        if not near:
            continue
        best = min(near, key=lambda i: _residual(cp, cq, *ends[i]))
        x, y = float(ends[best, 0]), float(ends[best, 1])
        if any(math.hypot(x - fx, y - fy) <= reach for fx, fy in found):
            continue
        # a root of multiplicity m is only resolved to about tol ** (1 / m)
        if _residual(cp, cq, x, y) <= math.sqrt(tol):
            out.append((x, y))
    return out


def solve_system(p: Poly, q: Poly, box, tol: float | None = None,
                 max_boxes: int = 400_000) -> list[Point2]:
    """All real common zeros of ``p`` and ``q`` inside ``box = (xmin, xmax, ymin, ymax)``.

    Raises :class:`PositiveDimensionalError` if ``gcd(p, q)`` is not constant and
    :class:`SolverError` if the subdivision budget runs out.
    """
    if p.is_zero() or q.is_zero():
        raise PositiveDimensionalError(p if q.is_zero() else q)
    g = poly_gcd(p, q)
    if not g.is_constant():
        raise PositiveDimensionalError(g)
    if p.is_constant() or q.is_constant():
        return []
    cp, cq = _dense_pair(p, q)
    x0, x1, y0, y1 = map(float, box)
    diag = math.hypot(x1 - x0, y1 - y0)
    if tol is None:
        tol = 1e-10 * diag
    w_stop = max(diag * 2.0 ** -16, 50.0 * tol)

    found = []
    stalled = []
    anchors = []
    stack = [(x0, x1, y0, y1)]
    visited = 0
    while stack:
        b = stack.pop()
        visited += 1
        if visited > max_boxes:
            raise SolverError(f"subdivision budget of {max_boxes} boxes exhausted")
        excluded = False
        for c in (cp, cq):
            bc, margin = bernstein_coefficients(c, b)
            if bc.min() > margin or bc.max() < -margin:
                excluded = True
                break
        if excluded:
            continue
        wx, wy = b[1] - b[0], b[3] - b[2]
        if max(wx, wy) <= w_stop:
            cx, cy = 0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3])
            if any(math.hypot(cx - fx, cy - fy) <= 2.0 * max(wx, wy) for fx, fy in found):
                continue
            if any(math.hypot(cx - sx, cy - sy) <= 64 * w_stop for sx, sy in anchors):
                # a neighbour already ran Newton for this stall chain
                stalled.append((cx, cy, cx, cy))
                continue
            x, y, ok = _newton(cp, cq, cx, cy, tol)
            if ok and math.hypot(x - cx, y - cy) <= 2.0 * max(wx, wy) + tol:
                if x0 - tol <= x <= x1 + tol and y0 - tol <= y <= y1 + tol:
                    found.append((float(x), float(y)))
            else:
                stalled.append((cx, cy, x, y))
                anchors.append((cx, cy))
            continue
        if wx >= wy:
            m = 0.5 * (b[0] + b[1])
            stack.append((m, b[1], b[2], b[3]))
            stack.append((b[0], m, b[2], b[3]))
        else:
            m = 0.5 * (b[2] + b[3])
            stack.append((b[0], b[1], m, b[3]))
            stack.append((b[0], b[1], b[2], m))

    roots = []
    for x, y in _merge(found, 2.0 * tol):
        if (abs(_eval_grad(cp, x, y)[0]) <= 10 * tol * _scale(cp, x, y)
                and abs(_eval_grad(cq, x, y)[0]) <= 10 * tol * _scale(cq, x, y)):
            roots.append(Point2(x, y))
    for x, y in _singular_roots(cp, cq, stalled, roots, 64 * w_stop, tol):
        roots.append(Point2(x, y))
    return sorted(roots)


def solve_safe(p: Poly, q: Poly, box, tol: float | None = None) -> list[Point2]:
    """Like :func:`solve_system`, but splits off a common factor first.

    Returns the isolated common zeros of the cofactors plus the points where
    the shared component meets either cofactor; points on the shared curve
    itself are not enumerated.
    """
    if p.is_zero() or q.is_zero():
        raise PositiveDimensionalError(p if q.is_zero() else q)
    g = poly_gcd(p, q)
    if g.is_constant():
        return solve_system(p, q, box, tol)
    a, b = p.divexact(g), q.divexact(g)
    pts: list = []
    if not a.is_constant() and not b.is_constant():
        pts += solve_safe(a, b, box, tol)
    if not a.is_constant():
        pts += solve_safe(g, a, box, tol)
    if not b.is_constant():
        pts += solve_safe(g, b, box, tol)
    x0, x1, y0, y1 = map(float, box)
    radius = 2.0 * (tol if tol is not None else 1e-10 * math.hypot(x1 - x0, y1 - y0))
    return [Point2(*pt) for pt in _merge([tuple(p_) for p_ in pts], radius)]
