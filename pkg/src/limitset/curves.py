"""Predictor-corrector continuation along the zero set of a planar function.

The function is any object with ``point(x, y) -> (value, d/dx, d/dy)``
(``family.HModel`` in practice).  Steps are capped by a fraction of the
distance to a set of feature points, which keeps the walker from jumping
between nearby sheets of the curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

COS_MAX_TURN = math.cos(math.radians(20.0))


def project(model, x, y, tol=0.0, max_iter=16):
    """Newton projection along the gradient onto ``value = 0``.

    Returns ``(x, y, ok)``; ``ok`` means the iteration settled.
    """
    for _ in range(max_iter):
        v, gx, gy = model.point(x, y)
        g2 = gx * gx + gy * gy
        if not math.isfinite(v) or g2 == 0.0:
            return x, y, False
        dx, dy = v * gx / g2, v * gy / g2
        x, y = x - dx, y - dy
        if abs(v) <= tol or math.hypot(dx, dy) <= 4e-16 * (1.0 + abs(x) + abs(y)):
            return x, y, True
    v = model.point(x, y)[0]
    return x, y, abs(v) <= tol


def tangent(model, x, y):
    v, gx, gy = model.point(x, y)
    n = math.hypot(gx, gy)
    if n == 0.0:
        return 0.0, 0.0, 0.0
    return gy / n, -gx / n, n


class FeatureDistance:
    """Distance from a point to the nearest feature point (inf if none)."""

    def __init__(self, points):
        self.pts = np.asarray(points, dtype=float).reshape(-1, 2)

    def __call__(self, x, y):
        if not len(self.pts):
            return math.inf
        d = self.pts - (x, y)
        return float(np.sqrt((d * d).sum(axis=1).min()))


@dataclass
class Walk:
    points: list
    steps: list
    status: str          # "closed", "exit", "stopped", "underflow", "budget"


def walk(model, start, sign, step_max, features: FeatureDistance, box, *,
         tol=0.0, feature_frac=0.1, step_min=None, max_steps=400_000,
         stop=None, closure=True) -> Walk:
    """Follow the curve from ``start`` in the direction ``sign * (h_y, -h_x)``.

    ``stop(x, y, arclength)`` may end the walk early (status "stopped").
    """
    x0, y0 = start
    tx0, ty0, _ = tangent(model, x0, y0)
    tx0, ty0 = sign * tx0, sign * ty0
    bx0, bx1, by0, by1 = box
    diag = math.hypot(bx1 - bx0, by1 - by0)
    if step_min is None:
        step_min = 1e-13 * diag
    pts = [(x0, y0)]
    steps = []
    x, y, tx, ty = x0, y0, tx0, ty0
    s = min(step_max, max(step_min, feature_frac * features(x, y)))
    arc = 0.0
    for _ in range(max_steps):
        cap = min(step_max, max(step_min, feature_frac * features(x, y)))
        s = min(s, cap)
        while True:
            if s < step_min:
                return Walk(pts, steps, "underflow")
            qx, qy = x + s * tx, y + s * ty
            cx, cy, ok = project(model, qx, qy, tol)
            if ok and math.hypot(cx - qx, cy - qy) <= 0.25 * s:
                ntx, nty, gn = tangent(model, cx, cy)
                ntx, nty = sign * ntx, sign * nty
                if gn > 0.0 and ntx * tx + nty * ty >= COS_MAX_TURN:
                    break
            s *= 0.5
        seg = math.hypot(cx - x, cy - y)
        if closure and len(pts) > 3 and arc > 2.0 * seg:
            # does the chord pass through the start point?
            ux, uy = cx - x, cy - y
            w = ((x0 - x) * ux + (y0 - y) * uy) / (seg * seg)
            if 0.0 <= w <= 1.0 and ntx * tx0 + nty * ty0 > 0.5:
                d = math.hypot(x + w * ux - x0, y + w * uy - y0)
                if d <= 0.1 * seg + 1e-12 * diag:
                    pts.append((x0, y0))
                    steps.append(seg)
                    return Walk(pts, steps, "closed")
        arc += seg
        pts.append((cx, cy))
        steps.append(seg)
        x, y, tx, ty = cx, cy, ntx, nty
        if not (bx0 <= x <= bx1 and by0 <= y <= by1):
            return Walk(pts, steps, "exit")
        if stop is not None and stop(x, y, arc):
            return Walk(pts, steps, "stopped")
        s = min(1.5 * s, step_max)
    return Walk(pts, steps, "budget")


def trace_component(model, seed, step_max, features, box, **kw):
    """Whole component through ``seed``: closed loop or open arc exiting the box.

    Returns ``(points (n, 2) array, closed, status)``.
    """
    fwd = walk(model, seed, 1.0, step_max, features, box, **kw)
    if fwd.status == "closed":
        return np.array(fwd.points), True, "closed"
    back = walk(model, seed, -1.0, step_max, features, box, closure=False,
                **{k: v for k, v in kw.items() if k != "closure"})
    pts = back.points[::-1][:-1] + fwd.points
    status = fwd.status if fwd.status != "exit" else back.status
    return np.array(pts), False, status
