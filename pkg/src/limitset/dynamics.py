"""Numerical certification that a traced oval is a limit cycle of X_t."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NumericalFailure
from .family import HModel, PlanarField, dense_field
from .kernels import dopri5

STATUS = {0: "horizon", 1: "events", 2: "exit", 3: "underflow", 4: "budget"}


class Verdict(str, enum.Enum):
    LIMIT_CYCLE = "LIMIT_CYCLE"
    INCONCLUSIVE = "INCONCLUSIVE"


class NoReturn(NumericalFailure):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    status: str
    times: np.ndarray
    points: np.ndarray
    events: np.ndarray            # (k, 3): time, x, y

    @property
    def end(self):
        return self.points[-1]


def kernel_field(X, params=None, sign: float = 1.0):
    """Kernel field tuple for an h-model (Hamiltonian form) or a planar field."""
    if isinstance(X, HModel):
        return X.field_tuple(sign)
    if isinstance(X, PlanarField):
        pc, qc = dense_field(X, params or {})
    else:
        pc, qc = X
    pc = np.ascontiguousarray(np.atleast_2d(np.asarray(pc, dtype=float)))
    qc = np.ascontiguousarray(np.atleast_2d(np.asarray(qc, dtype=float)))
    return (1, np.zeros((1, 1)), np.zeros((0, 2)), 0.0, False, pc, qc, sign)


def field_at(X, params, x, y):
    """Field vector at one point (used for tangency and section directions)."""
    if isinstance(X, HModel):
        h, hx, hy = X.point(x, y)
        return hy + h * hx, -hx + h * hy
    fld = kernel_field(X, params)
    from .kernels import hmodel_point
    return (hmodel_point(fld[5], fld[2], 0.0, False, float(x), float(y))[0],
            hmodel_point(fld[6], fld[2], 0.0, False, float(x), float(y))[0])


_UNBOUNDED = (-math.inf, math.inf, -math.inf, math.inf)


def integrate(X, params, x0, horizon: float, tol: float = 1e-10, box=None,
              section=None, max_events: int = 0, max_steps: int = 5_000_000,
              sign: float = 1.0) -> Trajectory:
    """Dormand-Prince 5(4) trajectory from ``x0`` (absolute and relative tol)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    fld = kernel_field(X, params, sign)
    st, times, xs, ys, ev = dopri5(fld, float(x0[0]), float(x0[1]), float(horizon), tol, tol,
                                   section, int(max_events), int(max_steps),
                                   tuple(box) if box is not None else _UNBOUNDED)
    return Trajectory(STATUS[int(st)], np.asarray(times), np.column_stack([xs, ys]),
                      np.asarray(ev, dtype=float).reshape(-1, 3))


# ---------------------------------------------------------------------------
# section and return map


@dataclass(frozen=True)
class Section:
    point: tuple[float, float]
    normal: tuple[float, float]       # grad h direction (h > 0 side)
    tangent: tuple[float, float]      # flow direction
    half_width: float

    def kernel(self, sign: float = 1.0):
        tx, ty = self.tangent
        return (*self.point, sign * tx, sign * ty, *self.normal, self.half_width)


def _speeds(X, params, pts):
    v = np.array([field_at(X, params, x, y) for x, y in pts])
    return np.hypot(v[:, 0], v[:, 1])


def period_estimate(X, params, curve) -> float:
    """Sum of segment length over field speed at the segment midpoints."""
    p = curve.polyline()
    mid = 0.5 * (p[1:] + p[:-1])
    ds = np.hypot(*np.diff(p, axis=0).T)
    sp = _speeds(X, params, mid)
    return float(np.sum(ds / np.maximum(sp, 1e-300)))


def _diameter(pts) -> float:
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return float(np.hypot(*(hi - lo)))


def section_at(model, X, params, curve, k: int) -> Section:
    """Transversal through vertex ``k``; its window avoids other parts of the curve."""
    pts = curve.points
    sx, sy = map(float, pts[k])
    _, gx, gy = model.point(sx, sy)
    g = math.hypot(gx, gy)
    fx, fy = field_at(X, params, sx, sy)
    fn = math.hypot(fx, fy)
    seg = np.hypot(*np.diff(curve.polyline(), axis=0).T)
    arc = np.concatenate([[0.0], np.cumsum(seg)])[:len(pts)]
    total = float(seg.sum())
    da = np.abs(arc - arc[k])
    da = np.minimum(da, total - da)
    diam = _diameter(pts)
    far = da > 0.05 * diam
    other = float(np.hypot(*(pts[far] - (sx, sy)).T).min()) if far.any() else diam
    return Section((sx, sy), (gx / g, gy / g), (fx / fn, fy / fn), min(0.05 * diam, 0.5 * other))


def choose_section(model, X, params, curve) -> Section:
    """Section at the vertex of largest gradient."""
    pts = curve.points
    _, gx, gy = model.eval(pts[:, 0], pts[:, 1])
    return section_at(model, X, params, curve, int(np.argmax(np.hypot(gx, gy))))


def section_candidates(model, X, params, curve, bounded=None, count: int = 6) -> list[Section]:
    """Sections ranked by whether the ``h > 0`` side is a bounded region, then by gradient.

    ``bounded(x, y)`` reports whether a point lies in a bounded component of
    the complement of Gamma.  Vertices near the pinches of the curve (small
    gradient) are skipped.
    """
    pts = curve.points
    idx = np.unique(np.linspace(0, len(pts) - 1, min(64, len(pts))).round().astype(int))
    _, gx, gy = model.eval(pts[idx, 0], pts[idx, 1])
    g = np.hypot(gx, gy)
    keep = g >= 0.25 * g.max()
    diam = _diameter(pts)
    ranked = []
    for k, gk, ok, ux, uy in zip(idx, g, keep, gx, gy):
        if not ok:
            continue
        inside = False
        if bounded is not None:
            q = pts[k] + 0.02 * diam * np.array([ux, uy]) / gk
            inside = bool(bounded(float(q[0]), float(q[1])))
        ranked.append((not inside, -gk, int(k)))
    ranked.sort()
    out, used = [], []
    for _, _, k in ranked:
        if any(np.hypot(*(pts[k] - pts[j])) < 0.1 * diam for j in used):
            continue
        used.append(k)
        out.append(section_at(model, X, params, curve, k))
        if len(out) >= count:
            break
    return out


@dataclass(frozen=True)
class Displacement:
    eps: float
    value: float
    return_time: float
    return_point: tuple[float, float]


def first_return(X, params, start, section: Section, period: float, tol: float, box,
                 sign: float = 1.0):
    """First crossing of the section after leaving it (time, point).

    ``sign = -1`` integrates the reversed field; crossings are then counted
    against the flow direction.
    """
    # the start point lies on the section line, so arm the event only after
    # a short initial arc
    lead = 0.05 * period
    pre = integrate(X, params, start, lead, tol, box, sign=sign)
    if pre.status != "horizon":
        raise NoReturn(f"trajectory stopped early ({pre.status})", stage="dynamics")
    traj = integrate(X, params, pre.end, 10.0 * period - lead, tol, box, section.kernel(sign), 1,
                     sign=sign)
    if traj.status != "events" or not len(traj.events):
        raise NoReturn(f"no return to the section within 10 periods ({traj.status})",
                       stage="dynamics")
    t, x, y = traj.events[0]
    return float(t) + lead, (float(x), float(y))


def poincare_displacement(X, params, section: Section, eps: float, period: float,
                          tol: float = 1e-10, box=None) -> Displacement:
    """Displacement over one revolution of the orbit through ``s + eps*n``.

    The revolution is the one ending at ``s + eps*n``: the orbit is followed
    backwards to its previous crossing at offset ``e0`` and the value is
    ``eps - e0``.  This has the sign of the forward return-map displacement
    (the map is increasing), while the integration runs in the contracting
    direction of a repelling cycle.
    """
    sx, sy = section.point
    nx, ny = section.normal
    start = (sx + eps * nx, sy + eps * ny)
    t, (x, y) = first_return(X, params, start, section, period, tol, box, sign=-1.0)
    prev = (x - sx) * nx + (y - sy) * ny
    return Displacement(float(eps), float(eps - prev), t, (x, y))


@dataclass(frozen=True)
class CycleCertificate:
    t: float
    period: float
    closure: float
    diameter: float
    section_point: tuple[float, float]
    section_normal: tuple[float, float]
    inside_sign: int
    outside_sign: int
    inside_displacement: float
    outside_displacement: float
    eps: float
    tol: float
    verdict: Verdict
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["section_point"] = [float(v) for v in self.section_point]
        d["section_normal"] = [float(v) for v in self.section_normal]
        return d

    @classmethod
    def from_dict(cls, d) -> "CycleCertificate":
        d = dict(d)
        d["verdict"] = Verdict(d["verdict"])
        d["section_point"] = tuple(d["section_point"])
        d["section_normal"] = tuple(d["section_normal"])
        return cls(**d)


def _sgn(v: float) -> int:
    return int(v > 0) - int(v < 0)


def closure_deviation(X, params, section, period, tol, box):
    """Distance between the section point and its forward return, and the return time."""
    t, (x, y) = first_return(X, params, section.point, section, period, tol, box)
    return math.hypot(x - section.point[0], y - section.point[1]), t


def _probe_box(curve, box):
    lo, hi = curve.points.min(axis=0), curve.points.max(axis=0)
    pad = 2.0 * float(np.hypot(*(hi - lo)))
    own = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
    if box is None:
        return own
    return (min(own[0], box[0]), max(own[1], box[1]), min(own[2], box[2]), max(own[3], box[3]))


def verify_limit_cycle(X, t: float, curve, params=None, model: HModel | None = None,
                       tol: float = 1e-10, box=None, eps: float | None = None,
                       bounded=None, min_eps_factor: float = 1e-6) -> CycleCertificate:
    """Closure over one period plus repelling displacements on both sides.

    The offset starts at ``eps`` (default ``1e-3`` of the diameter) and is
    reduced tenfold, down to ``min_eps_factor * eps``, while some side has
    no return on any candidate section.
    """
    model = model if model is not None else (X if isinstance(X, HModel) else None)
    if model is None:
        raise ValueError("an h-model is needed to orient the sections")
    diam = _diameter(curve.points)
    eps0 = 1e-3 * diam if eps is None else eps
    period = period_estimate(X, params, curve)
    pbox = _probe_box(curve, box)
    sections = section_candidates(model, X, params, curve, bounded)

    def fail(section, note, closure=math.inf, e=eps0):
        return CycleCertificate(t, period, closure, diam, section.point, section.normal, 0, 0,
                                math.nan, math.nan, e, tol, Verdict.INCONCLUSIVE, note)

    first = sections[0]
    try:
        closure, period = closure_deviation(X, params, first, period, tol, pbox)
    except NumericalFailure as exc:
        return fail(first, str(exc))
    e = eps0
    last_note = ""
    while e >= min_eps_factor * eps0:
        for sec in sections:
            try:
                out = poincare_displacement(X, params, sec, e, period, tol, pbox)
                inn = poincare_displacement(X, params, sec, -e, period, tol, pbox)
            except NumericalFailure as exc:
                last_note = str(exc)
                continue
            ok = closure < 1e-4 * diam and _sgn(out.value) == 1 and _sgn(inn.value) == -1
            note = "" if ok else "closure or displacement check failed"
            return CycleCertificate(t, period, closure, diam, sec.point, sec.normal,
                                    _sgn(inn.value), _sgn(out.value), inn.value, out.value,
                                    e, tol, Verdict.LIMIT_CYCLE if ok else Verdict.INCONCLUSIVE,
                                    note)
        e *= 0.1
    return fail(first, last_note or "no section with returns on both sides", closure, e * 10)


def tangency_residual(X, params, model: HModel, curve, n: int = 100) -> float:
    """Largest ``|X . grad h| / (|X| |grad h|)`` over ``n`` vertices of the curve."""
    pts = curve.points
    idx = np.linspace(0, len(pts) - 1, min(n, len(pts))).round().astype(int)
    worst = 0.0
    for x, y in pts[idx]:
        _, hx, hy = model.point(x, y)
        fx, fy = field_at(X, params, x, y)
        den = math.hypot(fx, fy) * math.hypot(hx, hy)
        worst = max(worst, abs(fx * hx + fy * hy) / den if den > 0 else math.inf)
    return worst
