"""Reference implementations of the numeric kernels (numpy + plain Python).

The compiled module ``_ckernels`` exposes the same functions with the same
signatures; ``limitset.kernels`` picks one at import time.

An *h-model* is the tuple ``(coef, pts, t, square)`` describing

    H(x, y) = F(x, y)**s - t * prod_k (|(x, y) - p_k|**2 - t**2)

with ``F`` given by the dense coefficient array ``coef[i, j]`` of ``x**i y**j``,
``s = 2`` if ``square`` else ``1`` and ``pts`` an ``(m, 2)`` array.  A plain
polynomial is the model ``(coef, empty, 0.0, False)``.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

BACKEND = "python"


# ---------------------------------------------------------------------------
# h-model evaluation


def _poly_grad(coef, x, y):
    nx, ny = coef.shape
    v = np.zeros_like(x)
    vx = np.zeros_like(x)
    vy = np.zeros_like(x)
    for i in range(nx - 1, -1, -1):
        r = np.zeros_like(x)
        ry = np.zeros_like(x)
        for j in range(ny - 1, -1, -1):
            ry = ry * y + r
            r = r * y + coef[i, j]
        vx = vx * x + v
        v = v * x + r
        vy = vy * x + ry
    return v, vx, vy


def hmodel_eval(coef, pts, t, square, xs, ys):
    """Vectorised value and gradient of an h-model on arrays ``xs``, ``ys``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    f, fx, fy = _poly_grad(np.asarray(coef, dtype=float), x, y)
    if square:
        h, hx, hy = f * f, 2.0 * f * fx, 2.0 * f * fy
    else:
        h, hx, hy = f, fx, fy
    if t != 0.0:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        prod = np.ones_like(x)
        gx = np.zeros_like(x)
        gy = np.zeros_like(x)
        t2 = t * t
        for px, py in pts:
            dx, dy = x - px, y - py
            q = dx * dx + dy * dy - t2
            gx = gx * q + prod * 2.0 * dx
            gy = gy * q + prod * 2.0 * dy
            prod = prod * q
        h = h - t * prod
        hx = hx - t * gx
        hy = hy - t * gy
    return h, hx, hy


def hmodel_point(coef, pts, t, square, x, y):
    """Scalar fast path of :func:`hmodel_eval`."""
    nx, ny = coef.shape
    v = vx = vy = 0.0
    for i in range(nx - 1, -1, -1):
        row = coef[i]
        r = ry = 0.0
        for j in range(ny - 1, -1, -1):
            ry = ry * y + r
            r = r * y + row[j]
        vx = vx * x + v
        v = v * x + r
        vy = vy * x + ry
    if square:
        h, hx, hy = v * v, 2.0 * v * vx, 2.0 * v * vy
    else:
        h, hx, hy = v, vx, vy
    if t != 0.0:
        prod, gx, gy = 1.0, 0.0, 0.0
        t2 = t * t
        for k in range(pts.shape[0]):
            dx, dy = x - pts[k, 0], y - pts[k, 1]
            q = dx * dx + dy * dy - t2
            gx = gx * q + prod * 2.0 * dx
            gy = gy * q + prod * 2.0 * dy
            prod *= q
        h -= t * prod
        hx -= t * gx
        hy -= t * gy
    return h, hx, hy


# ---------------------------------------------------------------------------
# marching squares

# edges: 0 bottom (i,j)-(i+1,j), 1 right (i+1,j)-(i+1,j+1),
#        2 top (i,j+1)-(i+1,j+1), 3 left (i,j)-(i,j+1)
# corner bits: 1 (i,j), 2 (i+1,j), 4 (i+1,j+1), 8 (i,j+1)
_CASES = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    8: ((2, 3),), 7: ((2, 3),),
    3: ((3, 1),), 12: ((3, 1),),
    6: ((0, 2),), 9: ((0, 2),),
}


def _edge_point(e, i, j, v00, v10, v11, v01):
    if e == 0:
        return i + v00 / (v00 - v10), float(j)
    if e == 1:
        return float(i + 1), j + v10 / (v10 - v11)
    if e == 2:
        return i + v01 / (v01 - v11), float(j + 1)
    return float(i), j + v00 / (v00 - v01)


def marching_squares(vals, center):
    """Zero-level segments of the grid function ``vals[i, j]`` (index coordinates).

    ``center[i, j]`` holds the value at the centre of cell ``(i, j)``; it is
    only read for the two saddle configurations.  Returns an ``(n, 4)`` array
    of segments ``(i0, j0, i1, j1)`` in fractional index units.
    """
    vals = np.asarray(vals, dtype=float)
    n0, n1 = vals.shape
    out = []
    for i in range(n0 - 1):
        for j in range(n1 - 1):
            v00, v10 = vals[i, j], vals[i + 1, j]
            v11, v01 = vals[i + 1, j + 1], vals[i, j + 1]
            k = (v00 > 0) | ((v10 > 0) << 1) | ((v11 > 0) << 2) | ((v01 > 0) << 3)
            if k == 5 or k == 10:
                c_pos = center[i, j] > 0
                if (k == 5) == c_pos:
                    pairs = ((3, 2), (0, 1))
                else:
                    pairs = ((3, 0), (1, 2))
            else:
                pairs = _CASES[k]
            for a, b in pairs:
                pa = _edge_point(a, i, j, v00, v10, v11, v01)
                pb = _edge_point(b, i, j, v00, v10, v11, v01)
                out.append((pa[0], pa[1], pb[0], pb[1]))
    return np.array(out, dtype=float).reshape(-1, 4)


# ---------------------------------------------------------------------------
# connected components


_N4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_N8 = _N4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def label(mask, eight=False):
    """Connected-component labelling of the True cells of ``mask``.

    4-connected unless ``eight`` is set.
    Labels are 1..count in raster (row-major) order of first cell; 0 marks
    background.
    """
    mask = np.asarray(mask, dtype=bool)
    n0, n1 = mask.shape
    labels = np.zeros((n0, n1), dtype=np.int32)
    count = 0
    for i0 in range(n0):
        for j0 in range(n1):
            if not mask[i0, j0] or labels[i0, j0]:
                continue
            count += 1
            labels[i0, j0] = count
            queue = deque([(i0, j0)])
            while queue:
                i, j = queue.popleft()
                for da, db in (_N8 if eight else _N4):
                    a, b = i + da, j + db
                    if 0 <= a < n0 and 0 <= b < n1 and mask[a, b] and not labels[a, b]:
                        labels[a, b] = count
                        queue.append((a, b))
    return labels, count


# ---------------------------------------------------------------------------
# Hausdorff distance


def directed_hausdorff(a, p0, p1):
    """``max_{q in a} min_k dist(q, [p0[k], p1[k]])``; ``p0 == p1`` gives points."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    p0 = np.asarray(p0, dtype=float).reshape(-1, 2)
    p1 = np.asarray(p1, dtype=float).reshape(-1, 2)
    d = p1 - p0
    dd = (d * d).sum(axis=1)
    safe = np.where(dd > 0.0, dd, 1.0)
    best = 0.0
    for start in range(0, len(a), 256):
        q = a[start:start + 256]
        rx = q[:, None, 0] - p0[None, :, 0]
        ry = q[:, None, 1] - p0[None, :, 1]
        s = np.clip((rx * d[None, :, 0] + ry * d[None, :, 1]) / safe[None, :], 0.0, 1.0)
        s = np.where(dd[None, :] > 0.0, s, 0.0)
        ex = rx - s * d[None, :, 0]
        ey = ry - s * d[None, :, 1]
        m = np.sqrt((ex * ex + ey * ey).min(axis=1)).max()
        best = max(best, float(m))
    return best


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class _Field:
    """Planar field from an h-model (mode 0) or dense components (mode 1)."""

    def __init__(self, field):
        mode, coef, pts, t, square, pc, qc, sign = field
        self.mode = int(mode)
        self.coef = np.asarray(coef, dtype=float)
        self.pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        self.t = float(t)
        self.square = bool(square)
        self.pc = np.asarray(pc, dtype=float)
        self.qc = np.asarray(qc, dtype=float)
        self.sign = float(sign)

    def __call__(self, x, y):
        if self.mode == 0:
            h, hx, hy = hmodel_point(self.coef, self.pts, self.t, self.square, x, y)
            return self.sign * (hy + h * hx), self.sign * (-hx + h * hy)
        p = hmodel_point(self.pc, self.pts, 0.0, False, x, y)[0]
        q = hmodel_point(self.qc, self.pts, 0.0, False, x, y)[0]
        return self.sign * p, self.sign * q


def _hermite(y0, f0, y1, f1, h, th):
    th2 = th * th
    th3 = th2 * th
    h00 = 2 * th3 - 3 * th2 + 1
    h10 = th3 - 2 * th2 + th
    h01 = -2 * th3 + 3 * th2
    h11 = th3 - th2
    return (h00 * y0[0] + h10 * h * f0[0] + h01 * y1[0] + h11 * h * f1[0],
            h00 * y0[1] + h10 * h * f0[1] + h01 * y1[1] + h11 * h * f1[1])


def dopri5(field, x0, y0, t_end, rtol, atol, section, max_events, max_steps, box):
    """Adaptive Dormand-Prince integration of a planar field.

    ``field`` is ``(mode, coef, pts, t, square, pcoef, qcoef, sign)``.
    ``section`` is ``None`` or ``(sx, sy, tx, ty, nx, ny, half_width)``: an
    event is a crossing of ``tx*(x-sx) + ty*(y-sy)`` from negative to
    positive with ``|nx*(x-sx) + ny*(y-sy)| <= half_width``.  Integration stops
    after ``max_events`` events, at ``t_end``, on leaving ``box`` or after
    ``max_steps`` accepted steps.

    Returns ``(status, times, xs, ys, events)`` where ``events`` is an
    ``(k, 3)`` array of ``(time, x, y)`` and ``status`` is 0 (horizon), 1
    (events), 2 (left box), 3 (step underflow) or 4 (step budget).
    """
    f = _Field(field)
    bx0, bx1, by0, by1 = box
    t = 0.0
    y = (float(x0), float(y0))
    k1 = f(*y)
    times, xs, ys, events = [0.0], [y[0]], [y[1]], []
    scale0 = max(abs(k1[0]), abs(k1[1]))
    sc = atol + rtol * max(abs(y[0]), abs(y[1]))
    h = 0.01 * sc / scale0 if scale0 > 0 else 1e-6
    h = min(max(h, 1e-12), t_end if t_end > 0 else 1.0)
    if section is not None:
        sx, sy, tx, ty, nx, ny, half = section
        sig = tx * (y[0] - sx) + ty * (y[1] - sy)
    status = 0
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            status = 4
            break
        h = min(h, t_end - t)
        if h < 1e-14 * max(1.0, abs(t)):
            status = 3
            break
        ks = [k1]
        for s in range(1, 7):
            a = _A[s]
            px = y[0] + h * sum(a[m] * ks[m][0] for m in range(s))
            py = y[1] + h * sum(a[m] * ks[m][1] for m in range(s))
            ks.append(f(px, py))
        yn = (px, py)
        ex = h * sum(_E[m] * ks[m][0] for m in range(7))
        ey = h * sum(_E[m] * ks[m][1] for m in range(7))
        s0 = atol + rtol * max(abs(y[0]), abs(yn[0]))
        s1 = atol + rtol * max(abs(y[1]), abs(yn[1]))
        err = math.sqrt(0.5 * ((ex / s0) ** 2 + (ey / s1) ** 2))
        if not math.isfinite(err):
            h *= 0.1
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        steps += 1
        k7 = ks[6]
        tn = t + h
        stop = False
        if section is not None:
            sign = tx * (yn[0] - sx) + ty * (yn[1] - sy)
            if sig < 0.0 <= sign:
                lo, hi = 0.0, 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    pm = _hermite(y, k1, yn, k7, h, mid)
                    if tx * (pm[0] - sx) + ty * (pm[1] - sy) < 0.0:
                        lo = mid
                    else:
                        hi = mid
                pm = _hermite(y, k1, yn, k7, h, hi)
                if abs(nx * (pm[0] - sx) + ny * (pm[1] - sy)) <= half:
                    events.append((t + hi * h, pm[0], pm[1]))
                    if len(events) >= max_events:
                        stop = True
            sig = sign
        t, y, k1 = tn, yn, k7
        times.append(t)
        xs.append(y[0])
        ys.append(y[1])
        if stop:
            status = 1
            break
        if not (bx0 <= y[0] <= bx1 and by0 <= y[1] <= by1):
            status = 2
            break
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fac
    return (status, np.array(times), np.array(xs), np.array(ys),
            np.array(events, dtype=float).reshape(-1, 3))
