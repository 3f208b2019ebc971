"""Level curves of h(., t), the reference sample of Gamma, and cycle selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import FeatureDistance, project, trace_component
from .errors import NGViolation, NoCycle, ScheduleExhausted, TracingError
from .family import HModel
from .kernels import directed_hausdorff, marching_squares
from .semialg import DenseCache, SemialgebraicSpec, member_float

RESIDUAL_TOL = 1e-12
REGULARITY_TOL = 1e-8
WELD_FACTOR = 3.0
SPACING_FACTOR = 2.0


@dataclass(frozen=True, eq=False)
class LevelCurve:
    t: float | None
    points: np.ndarray                 # closed curves do not repeat the first vertex
    closed: bool
    regularity_margin: float
    refinement_residual: float
    spacing: float = 0.0
    scale: float = 1.0

    def __len__(self):
        return len(self.points)

    def polyline(self) -> np.ndarray:
        """Vertices with the first one repeated at the end when closed."""
        if self.closed and len(self.points):
            return np.vstack([self.points, self.points[:1]])
        return self.points

    def segments(self):
        p = self.polyline()
        if len(p) == 1:
            return p, p
        return p[:-1], p[1:]

    def invariant_errors(self) -> list[str]:
        errs = []
        p = self.points
        if self.closed and len(p) > 1:
            if np.hypot(*(p[0] - p[-1])) > WELD_FACTOR * self.spacing:
                errs.append("weld")
        if self.refinement_residual > RESIDUAL_TOL * self.scale:
            errs.append("residual")
        if len(p) > 1:
            gaps = np.hypot(*np.diff(self.polyline(), axis=0).T)
            if gaps.max() > SPACING_FACTOR * self.spacing:
                errs.append("spacing")
        return errs

    @property
    def bbox(self):
        p = self.points
        return float(p[:, 0].min()), float(p[:, 0].max()), float(p[:, 1].min()), float(p[:, 1].max())


# ---------------------------------------------------------------------------
# marching squares plus linking


def _grid(box, resolution):
    w, h = box[1] - box[0], box[3] - box[2]
    cell = max(w, h) / resolution
    nx, ny = max(1, math.ceil(w / cell - 1e-9)), max(1, math.ceil(h / cell - 1e-9))
    xs = box[0] + cell * np.arange(nx + 1)
    ys = box[2] + cell * np.arange(ny + 1)
    return xs, ys, cell


def _link(segs):
    """Chain segments sharing exact endpoints into polylines (closed flag each)."""
    ends: dict = {}
    for k, (a0, a1, b0, b1) in enumerate(segs):
        ends.setdefault((a0, a1), []).append(k)
        ends.setdefault((b0, b1), []).append(k)
    used = np.zeros(len(segs), dtype=bool)

    def other(k, key):
        s = segs[k]
        return (s[2], s[3]) if (s[0], s[1]) == key else (s[0], s[1])

    def extend(chain, key, k):
        while True:
            nxt = [m for m in ends[key] if not used[m]]
            if not nxt:
                return key
            k = nxt[0]
            used[k] = True
            key = other(k, key)
            chain.append(key)

    out = []
    # open chains first, starting from degree-one endpoints
    for key in sorted(ends):
        if len(ends[key]) == 1 and not used[ends[key][0]]:
            chain = [key]
            extend(chain, key, None)
            out.append((chain, False))
    for k in range(len(segs)):
        if used[k]:
            continue
        used[k] = True
        a, b = (segs[k][0], segs[k][1]), (segs[k][2], segs[k][3])
        chain = [a, b]
        last = extend(chain, b, k)
        closed = last == a
        if closed:
            chain.pop()
        out.append((chain, closed))
    return out


def _lift_zeros(vals):
    """Exact zeros on grid nodes count as positive, nudged so edge crossings stay distinct."""
    zero = vals == 0
    if zero.any():
        nz = np.abs(vals[~zero])
        vals[zero] = 1e-9 * (nz.min() if len(nz) else 1.0)


def marching_polylines(model, box, resolution):
    """Raw marching-squares polylines of ``model = 0`` in world coordinates."""
    xs, ys, cell = _grid(box, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = model.eval(X, Y)[0]
    cx, cy = np.meshgrid(xs[:-1] + 0.5 * cell, ys[:-1] + 0.5 * cell, indexing="ij")
    center = model.eval(cx, cy)[0]
    _lift_zeros(vals)
    segs = marching_squares(np.ascontiguousarray(vals), np.ascontiguousarray(center))
    out = []
    for chain, closed in _link([tuple(s) for s in segs.tolist()]):
        p = np.array(chain, dtype=float)
        p = np.column_stack([xs[0] + cell * p[:, 0], ys[0] + cell * p[:, 1]])
        out.append((p, closed))
    return out, cell


def refine_points(model, pts, tol=0.0, iters=12):
    """Vectorised gradient Newton; points that blow up are left where they were."""
    x, y = pts[:, 0].copy(), pts[:, 1].copy()
    for _ in range(iters):
        v, gx, gy = model.eval(x, y)
        if not np.any(np.abs(v) > tol):
            break
        g2 = gx * gx + gy * gy
        ok = (g2 > 0) & np.isfinite(v)
        step = np.where(ok, v / np.where(ok, g2, 1.0), 0.0)
        x, y = x - step * gx, y - step * gy
    out = np.column_stack([x, y])
    bad = ~np.isfinite(out).all(axis=1)
    out[bad] = pts[bad]
    return out


def _measure(model, pts):
    v, gx, gy = model.eval(pts[:, 0], pts[:, 1])
    return float(np.hypot(gx, gy).min()), float(np.abs(v).max())


def _make_curve(model, t, pts, closed, spacing):
    margin, resid = _measure(model, pts)
    return LevelCurve(t, pts, closed, margin, resid, spacing, model.scale)


def _as_model(h, t) -> HModel:
    if isinstance(h, HModel):
        return h
    return HModel.from_poly(h, 0.0 if t is None else t)


def _pick_seed(poly, feats, spacing):
    d = np.array([feats(x, y) for x, y in poly])
    far = np.nonzero(d >= 5.0 * spacing)[0]
    k = int(far[0]) if len(far) else int(np.argmax(d))
    return poly[k]


def _on_existing(p, curves, tol):
    for c in curves:
        a, b = c.segments()
        if directed_hausdorff(np.asarray(p).reshape(1, 2), a, b) <= tol:
            return True
    return False


def trace_level(h, t, box, resolution: int = 512, features=None) -> list[LevelCurve]:
    """Components of ``h(., t) = 0`` in ``box``.

    Without ``features`` the marching-squares polylines are Newton refined
    and returned as they are.  With ``features`` (points where the level
    set pinches) each polyline only supplies a seed and the component is
    followed by continuation with steps capped near the features.
    """
    if resolution < 128:
        raise ValueError("resolution must be at least 128")
    model = _as_model(h, t)
    for res in (resolution, 2 * resolution):
        curves = _trace_once(model, t, box, res, features)
        if all(not c.invariant_errors() for c in curves):
            return curves
    return curves


def _trace_once(model, t, box, resolution, features):
    raw, cell = marching_polylines(model, box, resolution)
    spacing = cell
    tol = RESIDUAL_TOL * model.scale
    curves: list[LevelCurve] = []
    if features is None:
        for poly, closed in raw:
            pts = refine_points(model, poly, tol)
            curves.append(_make_curve(model, t, pts, closed, spacing))
        return curves
    feats = features if isinstance(features, FeatureDistance) else FeatureDistance(features)
    pad = 2.0 * cell
    tbox = (box[0] - pad, box[1] + pad, box[2] - pad, box[3] + pad)
    for poly, closed in sorted(raw, key=lambda r: -len(r[0])):
        seed = _pick_seed(poly, feats, spacing)
        x, y, ok = project(model, float(seed[0]), float(seed[1]))
        if not ok or _on_existing((x, y), curves, 0.05 * spacing):
            continue
        pts, cl, status = trace_component(model, (x, y), spacing, feats, tbox)
        if status in ("underflow", "budget"):
            pts, cl = refine_points(model, poly, tol), closed
        elif cl:
            pts = pts[:-1]
        curves.append(_make_curve(model, t, pts, cl, spacing))
    return curves


def write_curve_csv(path, curve: LevelCurve) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("x,y\n")
        for x, y in curve.polyline():
            fh.write(f"{float(x):.17g},{float(y):.17g}\n")


def read_curve_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


# ---------------------------------------------------------------------------
# distances


def _segments_of(obj):
    if isinstance(obj, LevelCurve):
        return obj.points, obj.segments()
    pts = np.asarray(obj, dtype=float).reshape(-1, 2)
    return pts, (pts, pts)


def hausdorff_distance(A, B) -> float:
    """Symmetric Hausdorff distance; curves count as polylines, arrays as point sets."""
    pa, (a0, a1) = _segments_of(A)
    pb, (b0, b1) = _segments_of(B)
    if not len(pa) or not len(pb):
        raise ValueError("Hausdorff distance of an empty set")
    return max(float(directed_hausdorff(pa, b0, b1)), float(directed_hausdorff(pb, a0, a1)))


def min_distance(curve, point) -> float:
    a, b = _segments_of(curve)[1]
    p = np.asarray(point, dtype=float).reshape(1, 2)
    return float(directed_hausdorff(p, a, b))


# ---------------------------------------------------------------------------
# reference sample of Gamma


def sample_gamma(spec: SemialgebraicSpec, box, resolution: int = 512, extra_points=()) -> np.ndarray:
    """Points of Gamma with spacing at most ``diag(box) / resolution``."""
    from .topology import isolated_points
    diag = math.hypot(box[1] - box[0], box[3] - box[2])
    spacing = diag / resolution
    model = HModel(spec.f_gamma.to_dense(), np.zeros((0, 2)), 0.0, False, spec.f_gamma)
    curves = trace_level(model, None, box, max(128, 2 * resolution))
    cache = DenseCache(spec)
    chunks = []
    for c in curves:
        p = c.polyline()
        if len(p) > 1:
            p = _densify(p, spacing)
        keep = member_float(spec, p[:, 0], p[:, 1], 1e-6 * spacing, cache)
        chunks.append(p[keep])
    pts = [np.asarray(extra_points, dtype=float).reshape(-1, 2)]
    pts.append(np.array(isolated_points(spec, box), dtype=float).reshape(-1, 2))
    out = np.vstack(chunks + pts) if chunks else np.vstack(pts)
    if not len(out):
        raise TracingError("Gamma sample is empty", stage="levelset")
    return out


def _densify(p, spacing):
    d = np.hypot(*np.diff(p, axis=0).T)
    n = np.maximum(1, np.ceil(d / spacing).astype(int))
    if n.max() == 1:
        return p
    out = [p[:1]]
    for k in range(len(d)):
        s = np.arange(1, n[k] + 1)[:, None] / n[k]
        out.append(p[k] + s * (p[k + 1] - p[k]))
    return np.vstack(out)


# ---------------------------------------------------------------------------
# selection and schedule


def select_cycle(curves, gamma_ref, ng=(), closeness: float = math.inf,
                 t: float | None = None) -> tuple[LevelCurve, float]:
    """Closed regular curve nearest to ``gamma_ref``; returns ``(curve, distance)``."""
    best, best_d = None, math.inf
    for c in curves:
        if not c.closed or len(c.points) < 3:
            continue
        if not c.regularity_margin > REGULARITY_TOL * c.scale:
            continue
        d = hausdorff_distance(c, gamma_ref)
        if d < best_d:
            best, best_d = c, d
    if best is None or best_d > closeness:
        raise NoCycle("no closed regular level curve near Gamma", stage="levelset")
    lam = best.t if t is None else t
    for p in ng:
        dist = min_distance(best, (float(p[0]), float(p[1])))
        if lam is not None and dist <= lam:
            raise NGViolation(f"selected cycle passes within {dist:.3g} of a "
                              f"non-generic point", stage="levelset")
    return best, best_d


def is_simple(curve: LevelCurve) -> bool:
    """No two non-adjacent edges of the polyline intersect."""
    p = curve.polyline()
    a, b = p[:-1], p[1:]
    n = len(a)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    order = np.argsort(lo[:, 0])
    lo_s, hi_s = lo[order], hi[order]
    for ii in range(n):
        i = order[ii]
        jj = ii + 1
        while jj < n and lo_s[jj, 0] <= hi_s[ii, 0]:
            j = order[jj]
            jj += 1
            if abs(int(i) - int(j)) <= 1 or (curve.closed and {int(i), int(j)} == {0, n - 1}):
                continue
            if lo_s[jj - 1, 1] > hi_s[ii, 1] or hi_s[jj - 1, 1] < lo_s[ii, 1]:
                continue
            if _cross(a[i], b[i], a[j], b[j]):
                return False
    return True


def _cross(p, q, r, s):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True, eq=False)
class ScheduleEntry:
    t: float
    curve: LevelCurve | None
    distance: float                       # the stopping metric (default: to the Gamma sample)
    certified: bool = True
    certificate: object = None
    error: str = ""
    extra: dict = field(default_factory=dict)


def geometric_schedule(t0: float = 0.1, max_j: int = 40) -> list[float]:
    return [t0 * 2.0 ** -j for j in range(max_j + 1)]


def lambda_schedule(spec, family, box, *, gamma_ref, target: float = 0.15,
                    features=None, ts=None, t0: float = 0.1, max_j: int = 40,
                    resolution: int = 512, closeness: float | None = None,
                    ng=(), index: int | None = None, gamma_i_ref=None,
                    min_certified: int = 2, measure=None, certify=None,
                    log=None) -> list[ScheduleEntry]:
    """Geometric schedule ``t0 * 2**-j`` (or the given ``ts``) with certified cycles.

    ``measure(curve)`` gives the distance used for stopping (Hausdorff to
    ``gamma_ref`` by default) and ``certify(t, curve, model)`` returns a
    ``(passed, certificate)`` pair; only passing entries count.  Generic runs
    stop once ``min_certified`` entries are certified, the last one is below
    ``target`` and closer than the first.  With ``index`` set (non-generic
    mode) a run stops at the first certified cycle with ``t < 1/i`` lying
    within ``1/i`` of the branch-extended set and outside every NG ball of
    radius ``t``.  With explicit ``ts`` every value is tried and failures are
    kept as uncertified entries.
    """
    closeness = 4.0 * target if closeness is None else closeness
    explicit = ts is not None
    ts = list(ts) if explicit else geometric_schedule(t0, max_j)
    out: list[ScheduleEntry] = []
    certified: list[ScheduleEntry] = []
    for t in ts:
        model = family.model(t)
        curves = trace_level(model, t, box, resolution, features)
        ref = gamma_ref if index is None else gamma_i_ref
        try:
            cyc, d_sel = select_cycle(curves, ref, ng,
                                      closeness if index is None else 1.0 / index, t)
        except (NoCycle, NGViolation) as exc:
            if log:
                log(f"t={t:.6g}: {exc}")
            if explicit:
                out.append(ScheduleEntry(t, None, math.inf, False, None,
                                         type(exc).__name__ + ": " + str(exc)))
            continue
        dist = measure(cyc) if measure is not None else (
            d_sel if index is None else hausdorff_distance(cyc, gamma_ref))
        extra = {}
        if index is not None:
            extra = {"distance_gamma_i": d_sel,
                     "ng_clearance": min((min_distance(cyc, p) for p in ng), default=math.inf)}
        ok, cert = certify(t, cyc, model) if certify is not None else (True, None)
        entry = ScheduleEntry(t, cyc, dist, bool(ok), cert, "", extra)
        if log:
            log(f"t={t:.6g}: cycle with {len(cyc.points)} vertices, distance {dist:.4g}, "
                f"{'certified' if ok else 'not certified'}")
        out.append(entry)
        if not ok:
            continue
        certified.append(entry)
        if explicit:
            continue
        if index is not None:
            if t < 1.0 / index and d_sel < 1.0 / index:
                return out
        elif (len(certified) >= min_certified and dist < target
              and dist < certified[0].distance):
            return out
    if explicit and out:
        return out
    raise ScheduleExhausted("lambda schedule ended without certification", stage="levelset")
