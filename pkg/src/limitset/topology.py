"""Special points of Gamma and the topology of its complement.

Complement components come from a raster: a cell is a Gamma cell when some
clause curve crosses it at a point satisfying (up to one cell of slack) the
clause constraints.  The free cells are flood filled, and the answer is
accepted only when a finer raster agrees.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .algebra import Point2, Poly, PositiveDimensionalError, solve_safe
from .curves import FeatureDistance, project, walk
from .errors import IsolatedPoint, TracingError, TransitionError, Unresolved
from .family import HModel, snap_rational
from .kernels import label
from .semialg import (DenseCache, SemialgebraicSpec, constraints_hold, member_float,
                      poly_values)

MIN_COMPONENT_CELLS = 4
JUNCTION_CELLS = 8
SEARCH_BOX = (-1e3, 1e3, -1e3, 1e3)


class PointKind(str, enum.Enum):
    ALGEBRAIC = "ALGEBRAIC"
    GEN = "GEN"
    NG = "NG"


# ---------------------------------------------------------------------------
# candidate points


@dataclass(frozen=True)
class Candidate:
    x: float
    y: float
    polys: tuple[Poly, ...]      # polynomials vanishing at the point
    singular: bool


def _solve(p, q, box, tol):
    try:
        return solve_safe(p, q, box, tol)
    except PositiveDimensionalError:
        return []


def _merge_candidates(cands, radius):
    out: list[Candidate] = []
    for c in sorted(cands, key=lambda c: (c.x, c.y)):
        for k, o in enumerate(out):
            if math.hypot(c.x - o.x, c.y - o.y) <= radius:
                if c.singular and not o.singular:
                    out[k] = c
                break
        else:
            out.append(c)
    return out


def _local_scale(coef, x, y):
    i = np.arange(coef.shape[0])[:, None]
    j = np.arange(coef.shape[1])[None, :]
    return float((np.abs(coef) * max(1.0, abs(x)) ** i * max(1.0, abs(y)) ** j).sum())


def is_singular(f: Poly, x: float, y: float, coef=None, tol: float = 1e-6) -> bool:
    coef = f.to_dense() if coef is None else coef
    _, fx, fy = poly_values(coef, x, y)
    return abs(fx) + abs(fy) <= tol * _local_scale(coef, x, y)


def singular_points(f: Poly, box, tol=None) -> list[tuple[float, float]]:
    """Points with ``f = f_x = f_y = 0`` inside ``box``."""
    fx, fy = f.partial("x"), f.partial("y")
    coef = f.to_dense()
    pts = []
    if fx.is_zero() and fy.is_zero():
        return []
    first = fx if not fx.is_zero() else fy
    other = fy if not fx.is_zero() else fx
    for p in _solve(f, first, box, tol):
        if other.is_zero() or is_singular(f, float(p.x), float(p.y), coef):
            pts.append((float(p.x), float(p.y)))
    return pts


def special_candidates(spec: SemialgebraicSpec, box, tol=None) -> list[Candidate]:
    """Constraint/curve intersections and singular points of ``f_gamma`` in ``box``."""
    diag = math.hypot(box[1] - box[0], box[3] - box[2])
    tol = tol if tol is not None else 1e-10 * diag
    fg = spec.f_gamma
    dfg = (fg.partial("x"), fg.partial("y"))
    cands = [Candidate(x, y, (fg,) + dfg, True) for x, y in singular_points(fg, box, tol)]
    for clause in spec.clauses:
        for k in clause.constraints:
            for p in _solve(clause.f_sf, k.g, box, tol):
                x, y = float(p.x), float(p.y)
                cands.append(Candidate(x, y, (clause.f_sf, k.g), is_singular(fg, x, y)))
    return _merge_candidates(cands, 1e-8 * diag)


def _in_gamma(spec, cache, x, y, margin):
    return bool(member_float(spec, np.array([x]), np.array([y]), margin, cache)[0])


def gamma_bounds(spec: SemialgebraicSpec, search=None):
    """Bounding box of Gamma from its extremal and special points (``None`` if empty)."""
    search = search or spec.bbox or SEARCH_BOX
    diag = math.hypot(search[1] - search[0], search[3] - search[2])
    tol = 1e-10 * diag
    cache = DenseCache(spec)
    pts = [(c.x, c.y) for c in special_candidates(spec, search, tol)]
    for clause in spec.clauses:
        f = clause.f_sf
        for v in ("x", "y"):
            d = f.partial(v)
            if not d.is_zero():
                pts += [(float(p.x), float(p.y)) for p in _solve(f, d, search, tol)]
    pts = [p for p in pts if _in_gamma(spec, cache, p[0], p[1], 1e-9 * diag)]
    if not pts:
        return None
    arr = np.array(pts)
    return (float(arr[:, 0].min()), float(arr[:, 0].max()),
            float(arr[:, 1].min()), float(arr[:, 1].max()))


def working_box(spec: SemialgebraicSpec, margin: float = 0.1, floor: float = 0.5):
    """Gamma bounds inflated by ``margin`` of the larger side (bbox hint wins)."""
    if spec.bbox is not None:
        return tuple(float(v) for v in spec.bbox)
    b = gamma_bounds(spec)
    if b is None:
        raise TracingError("Gamma has no points in the search window", stage="topology")
    w = max(b[1] - b[0], b[3] - b[2])
    pad = max(margin * w, floor if w < floor else 0.0)
    return (b[0] - pad, b[1] + pad, b[2] - pad, b[3] + pad)


# ---------------------------------------------------------------------------
# raster


@dataclass(frozen=True)
class Grid:
    x0: float
    y0: float
    cell: float
    nx: int
    ny: int

    @classmethod
    def over(cls, box, resolution: int) -> "Grid":
        w, h = box[1] - box[0], box[3] - box[2]
        cell = max(w, h) / resolution
        nx, ny = max(1, math.ceil(w / cell - 1e-9)), max(1, math.ceil(h / cell - 1e-9))
        return cls(box[0], box[2], cell, nx, ny)

    @property
    def box(self):
        return (self.x0, self.x0 + self.nx * self.cell, self.y0, self.y0 + self.ny * self.cell)

    def nodes(self):
        xs = self.x0 + self.cell * np.arange(self.nx + 1)
        ys = self.y0 + self.cell * np.arange(self.ny + 1)
        return np.meshgrid(xs, ys, indexing="ij")

    def centers(self):
        xs = self.x0 + self.cell * (np.arange(self.nx) + 0.5)
        ys = self.y0 + self.cell * (np.arange(self.ny) + 0.5)
        return np.meshgrid(xs, ys, indexing="ij")

    def cell_of(self, x, y):
        i = int(math.floor((x - self.x0) / self.cell))
        j = int(math.floor((y - self.y0) / self.cell))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def center(self, i, j):
        return self.x0 + (i + 0.5) * self.cell, self.y0 + (j + 0.5) * self.cell


def gamma_mask(spec: SemialgebraicSpec, grid: Grid, point_pieces=(), cache=None) -> np.ndarray:
    """Cells met by Gamma (conservative, one cell of constraint slack)."""
    cache = cache or DenseCache(spec)
    X, Y = grid.nodes()
    mask = np.zeros((grid.nx, grid.ny), dtype=bool)
    for fc, cons in cache.clauses:
        v = poly_values(fc, X, Y)[0]
        c00, c10, c11, c01 = v[:-1, :-1], v[1:, :-1], v[1:, 1:], v[:-1, 1:]
        lo = np.minimum(np.minimum(c00, c10), np.minimum(c11, c01))
        hi = np.maximum(np.maximum(c00, c10), np.maximum(c11, c01))
        hit = (lo <= 0.0) & (hi >= 0.0)
        if not cons:
            mask |= hit
            continue
        ii, jj = np.nonzero(hit)
        if not len(ii):
            continue
        ok = np.zeros(len(ii), dtype=bool)
        corners = ((0, 0), (1, 0), (1, 1), (0, 1))
        for e in range(4):
            (a0, b0), (a1, b1) = corners[e], corners[(e + 1) % 4]
            va = v[ii + a0, jj + b0]
            vb = v[ii + a1, jj + b1]
            cross = (va <= 0.0) != (vb <= 0.0)
            cross |= va == 0.0
            den = np.where(va != vb, va - vb, 1.0)
            s = np.clip(np.where(va != vb, va / den, 0.0), 0.0, 1.0)
            px = grid.x0 + grid.cell * (ii + a0 + s * (a1 - a0))
            py = grid.y0 + grid.cell * (jj + b0 + s * (b1 - b0))
            good = constraints_hold(cons, px, py, grid.cell)
            ok |= cross & good
        mask[ii[ok], jj[ok]] = True
    for x, y in point_pieces:
        bx = grid.box
        if bx[0] <= x <= bx[1] and bx[2] <= y <= bx[3]:
            mask[grid.cell_of(x, y)] = True
    return mask


def _near_junction(lab, n, grid, junctions, radius_cells=JUNCTION_CELLS):
    """Components lying inside a small disk around a singular point of A_Gamma."""
    out = np.zeros(n + 1, dtype=bool)
    if not junctions or grid is None:
        return out
    ii, jj = np.nonzero(lab)
    ids = lab[ii, jj]
    x = grid.x0 + (ii + 0.5) * grid.cell
    y = grid.y0 + (jj + 0.5) * grid.cell
    r = radius_cells * grid.cell
    for jx, jy in junctions:
        far = np.zeros(n + 1, dtype=bool)
        np.logical_or.at(far, ids, np.hypot(x - jx, y - jy) > r)
        out |= ~far
    out[0] = False
    return out


def _slivers(free, lab, n):
    """Components without a single cell whose 3x3 neighbourhood is free."""
    core = free.copy()
    core[0, :] = core[-1, :] = core[:, 0] = core[:, -1] = False
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            core[1:-1, 1:-1] &= free[1 + dx:free.shape[0] - 1 + dx, 1 + dy:free.shape[1] - 1 + dy]
    thick = np.zeros(n + 1, dtype=bool)
    thick[np.unique(lab[core])] = True
    return ~thick


def _components(free: np.ndarray, grid=None, junctions=()):
    """Labels of free cells: frame-touching ones merged into 0, specks dropped.

    Specks are components under ``MIN_COMPONENT_CELLS`` cells, slivers with no
    interior cell, or pieces lying within a few cells of a junction of A_Gamma.
    Thin horns at tangencies and cusps break up into such pieces on the raster.
    """
    lab, n = label(free)
    out = np.full(free.shape, -1, dtype=np.int32)
    if n == 0:
        return out, 0
    sizes = np.bincount(lab.ravel(), minlength=n + 1)
    sizes[_near_junction(lab, n, grid, junctions)] = 0
    sizes[_slivers(free, lab, n)] = 0
    frame = np.zeros(n + 1, dtype=bool)
    for edge in (lab[0, :], lab[-1, :], lab[:, 0], lab[:, -1]):
        frame[edge] = True
    frame[0] = False
    new_id = np.full(n + 1, -1, dtype=np.int32)
    k = 1
    has_frame = bool(frame.any())
    for old in range(1, n + 1):
        if frame[old]:
            new_id[old] = 0
        elif sizes[old] >= MIN_COMPONENT_CELLS:
            new_id[old] = k
            k += 1
    if not has_frame:  # the box is walled off by Gamma; keep the numbering dense
        new_id[new_id > 0] -= 1
        k -= 1
    out = new_id[lab]
    out[~free] = -1
    return out, k if has_frame else k


@dataclass
class RegionDecomposition:
    grid: Grid
    resolution: int
    labels: np.ndarray            # -1 on Gamma cells and dropped specks
    k: int
    unbounded: int
    adjacency: dict               # (a, b) -> (m, 2) array of witness cell centres
    gamma: np.ndarray             # Gamma cells
    gamma_components: int
    point_pieces: tuple = ()
    counts: tuple = ()            # component counts at the checked resolutions
    junctions: tuple = ()         # singular points of A_Gamma in the box

    @property
    def edges(self):
        return sorted(self.adjacency)

    @property
    def box(self):
        return self.grid.box


def _raster(spec, box, resolution, point_pieces, cache, junctions=()):
    grid = Grid.over(box, resolution)
    gm = gamma_mask(spec, grid, point_pieces, cache)
    labels, k = _components(~gm, grid, junctions)
    return grid, gm, labels, k


def _adjacency(labels: np.ndarray, grid: Grid, radius: int = 2) -> dict:
    n0, n1 = labels.shape
    big = np.iinfo(np.int32).max
    pad = np.pad(labels, radius, constant_values=-1)
    lo = np.full(labels.shape, big, dtype=np.int64)
    hi = np.full(labels.shape, -1, dtype=np.int64)
    for da in range(2 * radius + 1):
        for db in range(2 * radius + 1):
            nb = pad[da:da + n0, db:db + n1]
            valid = nb >= 0
            lo = np.where(valid, np.minimum(lo, nb), lo)
            hi = np.where(valid, np.maximum(hi, nb), hi)
    wit = (labels < 0) & (hi >= 0) & (lo < hi)
    out: dict = {}
    ii, jj = np.nonzero(wit)
    for i, j in zip(ii, jj):
        out.setdefault((int(lo[i, j]), int(hi[i, j])), []).append(grid.center(i, j))
    return {key: np.array(v) for key, v in out.items()}


def decompose_complement(spec: SemialgebraicSpec, box, resolution: int = 512,
                         point_pieces=None) -> RegionDecomposition:
    """Components of the complement of Gamma on a raster, checked under refinement."""
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    cache = DenseCache(spec)
    if point_pieces is None:
        point_pieces = isolated_points(spec, box)
    junctions = tuple(singular_points(spec.f_gamma, box))
    grid, gm, labels, k = _raster(spec, box, resolution, point_pieces, cache, junctions)
    counts = [k]
    k2 = _raster(spec, box, 2 * resolution, point_pieces, cache, junctions)[3]
    counts.append(k2)
    if k2 != k:
        k4 = _raster(spec, box, 4 * resolution, point_pieces, cache, junctions)[3]
        counts.append(k4)
        if k4 != k2:
            raise Unresolved(f"component counts {counts} disagree under refinement",
                             stage="topology")
        grid, gm, labels, k = _raster(spec, box, 2 * resolution, point_pieces, cache, junctions)
        resolution *= 2
    gl, gcount = label(gm, True)
    return RegionDecomposition(grid, resolution, labels, k, 0, _adjacency(labels, grid), gm,
                               gcount, tuple(point_pieces), tuple(counts), junctions)


def isolated_points(spec: SemialgebraicSpec, box) -> list[tuple[float, float]]:
    """Singular points of Gamma; they get their own raster cell."""
    cache = DenseCache(spec)
    diag = math.hypot(box[1] - box[0], box[3] - box[2])
    return [(c.x, c.y) for c in special_candidates(spec, box)
            if c.singular and _in_gamma(spec, cache, c.x, c.y, 1e-8 * diag)]


# ---------------------------------------------------------------------------
# special points


@dataclass(frozen=True)
class NGPoint:
    point: Point2
    n: int
    directions: tuple[tuple[float, float], ...]
    radius: float
    probes: tuple[tuple[float, float], ...]    # branch points on the probe circle


@dataclass(frozen=True)
class SpecialPointSet:
    gen: tuple[Point2, ...] = ()
    ng: tuple[NGPoint, ...] = ()
    tr: tuple[Point2, ...] = ()
    singular: tuple[tuple[float, float], ...] = ()   # junctions of A_Gamma (any class)

    @property
    def S(self) -> tuple[Point2, ...]:
        return self.gen + self.tr

    @property
    def n_gamma(self) -> int:
        return sum(e.n for e in self.ng)

    def with_tr(self, tr) -> "SpecialPointSet":
        return SpecialPointSet(self.gen, self.ng, tuple(tr), self.singular)


def circle_branches(coef, x, y, radius, samples=2048):
    """Points where the zero set of ``coef`` crosses the circle around ``(x, y)``."""
    th = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    px, py = x + radius * np.cos(th), y + radius * np.sin(th)
    v = poly_values(coef, px, py)[0]
    sv = v > 0
    idx = np.nonzero(sv != np.roll(sv, -1))[0]
    out = []
    step = 2.0 * math.pi / samples
    for i in idx:
        a, b = th[i], th[i] + step
        pa = sv[i]
        for _ in range(60):
            m = 0.5 * (a + b)
            vm = poly_values(coef, x + radius * math.cos(m), y + radius * math.sin(m))[0]
            if (vm > 0) == pa:
                a = m
            else:
                b = m
        m = 0.5 * (a + b)
        out.append((x + radius * math.cos(m), y + radius * math.sin(m)))
    return out


@dataclass(frozen=True)
class Classified:
    point: Candidate
    kind: PointKind
    inside: int
    outside: tuple[tuple[float, float], ...]
    radius: float


def classify_candidates(spec: SemialgebraicSpec, box, cands=None, delta=None):
    diag = math.hypot(box[1] - box[0], box[3] - box[2])
    delta = 1e-3 * diag if delta is None else delta
    cands = special_candidates(spec, box) if cands is None else cands
    cache = DenseCache(spec)
    fcoef = cache.f_gamma
    out = []
    for c in cands:
        if not _in_gamma(spec, cache, c.x, c.y, 1e-8 * diag):
            continue
        others = [math.hypot(c.x - o.x, c.y - o.y) for o in cands if o is not c]
        rho = min([delta] + [0.5 * d for d in others])
        branches = circle_branches(fcoef, c.x, c.y, rho)
        inside, outside = 0, []
        for bx, by in branches:
            if _in_gamma(spec, cache, bx, by, 1e-6 * rho):
                inside += 1
            else:
                outside.append((bx, by))
        if not outside:
            kind = PointKind.ALGEBRAIC
        elif inside == 0:
            raise IsolatedPoint(f"Gamma has an isolated non-algebraic point near "
                                f"({c.x:.6g}, {c.y:.6g})", stage="classify")
        elif c.singular:
            kind = PointKind.NG
        else:
            kind = PointKind.GEN
        out.append(Classified(c, kind, inside, tuple(outside), rho))
    lone = [o for o in out if o.inside == 0 and not o.outside]
    if lone and any(o.kind != PointKind.ALGEBRAIC for o in out):
        c = lone[0].point
        raise IsolatedPoint(f"Gamma has an isolated point near ({c.x:.6g}, {c.y:.6g})",
                            stage="classify")
    return out


def _snap(c: Candidate) -> Point2:
    return snap_rational(c.x, c.y, c.polys)


def classify_special_points(spec: SemialgebraicSpec, box, delta=None) -> SpecialPointSet:
    """Generic and non-generic non-algebraic points of Gamma (by circle probes)."""
    cands = special_candidates(spec, box)
    classified = classify_candidates(spec, box, cands, delta)
    gen, ng = [], []
    for cl in classified:
        if cl.kind is PointKind.GEN:
            gen.append(_snap(cl.point))
        elif cl.kind is PointKind.NG:
            dirs = []
            for bx, by in cl.outside:
                d = math.hypot(bx - cl.point.x, by - cl.point.y)
                dirs.append(((bx - cl.point.x) / d, (by - cl.point.y) / d))
            ng.append(NGPoint(_snap(cl.point), len(cl.outside), tuple(dirs), cl.radius,
                              cl.outside))
    singular = tuple((c.x, c.y) for c in cands if c.singular)
    return SpecialPointSet(tuple(gen), tuple(ng), (), singular)


# ---------------------------------------------------------------------------
# transition points


def _spanning_tree(k: int, edges, root: int = 0):
    nbrs: dict[int, list[int]] = {i: [] for i in range(k)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    seen = {root}
    tree = []
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in sorted(nbrs[a]):
            if b not in seen:
                seen.add(b)
                tree.append((min(a, b), max(a, b)))
                queue.append(b)
    if len(seen) != k:
        raise TransitionError("complement adjacency graph is disconnected", stage="transition")
    return tree


def _labels_across(decomp, x, y, nx, ny, dist, fmodel=None):
    """Labels on both sides of Gamma along the normal; empty if the normal
    segment crosses A_Gamma an even number of times (thin horns on the raster)."""
    g = decomp.grid
    out = set()
    signs = []
    for s in (-1.0, 1.0):
        px, py = x + s * dist * nx, y + s * dist * ny
        i, j = g.cell_of(px, py)
        out.add(int(decomp.labels[i, j]))
        if fmodel is not None:
            signs.append(fmodel.point(px, py)[0])
    if signs and signs[0] * signs[1] >= 0:
        return set()
    return out


def transition_candidates(spec, decomp, a, b, fmodel, cache, max_tries=256):
    """Snapped, regular points of Gamma separating components ``a`` and ``b``."""
    wit = decomp.adjacency.get((a, b))
    if wit is None or not len(wit):
        return []
    order = np.lexsort((wit[:, 1], wit[:, 0]))
    wit = wit[order]
    if len(wit) > max_tries:
        wit = wit[np.linspace(0, len(wit) - 1, max_tries).round().astype(int)]
    cell = decomp.grid.cell
    out = []
    for wx, wy in wit:
        x, y, ok = project(fmodel, float(wx), float(wy))
        if not ok or math.hypot(x - wx, y - wy) > 3.0 * cell:
            continue
        _, gx, gy = fmodel.point(x, y)
        gn = math.hypot(gx, gy)
        if gn <= 1e-6 * _local_scale(fmodel.coef, x, y):
            continue
        if not _in_gamma(spec, cache, x, y, 1e-6 * cell):
            continue
        if _labels_across(decomp, x, y, gx / gn, gy / gn, 2.5 * cell, fmodel) != {a, b}:
            continue
        out.append((x, y))
    return out


def _separates(spec, decomp, fmodel, cache, p, a, b):
    x, y = float(p[0]), float(p[1])
    v, gx, gy = fmodel.point(x, y)
    scale = _local_scale(fmodel.coef, x, y)
    gn = math.hypot(gx, gy)
    if abs(v) > 1e-12 * scale or gn <= 1e-6 * scale:
        return False
    if not _in_gamma(spec, cache, x, y, 1e-6 * decomp.grid.cell):
        return False
    return _labels_across(decomp, x, y, gx / gn, gy / gn, 2.5 * decomp.grid.cell,
                          fmodel) == {a, b}


def choose_transition_points(spec: SemialgebraicSpec, decomp: RegionDecomposition,
                             special: SpecialPointSet, avoid=(), delta=None,
                             preferred=()) -> list[Point2]:
    """One regular point of Gamma per spanning-tree edge of the complement graph.

    Exact points in ``preferred`` are used first for any edge they separate.
    """
    if spec.transition_points is not None:
        tr = list(spec.transition_points)
        check_transition_points(spec, decomp, tr)
        return tr
    diag = math.hypot(decomp.box[1] - decomp.box[0], decomp.box[3] - decomp.box[2])
    delta = 1e-3 * diag if delta is None else delta
    cache = DenseCache(spec)
    fmodel = HModel(cache.f_gamma, np.zeros((0, 2)), 0.0, False)
    # raster adjacency can jump across a thin horn; keep edges with a real crossing
    pool = {e: transition_candidates(spec, decomp, *e, fmodel, cache) for e in decomp.edges}
    usable = [e for e in decomp.edges if pool[e] or any(
        _separates(spec, decomp, fmodel, cache, p, *e) for p in preferred)]
    tree = _spanning_tree(decomp.k, usable, decomp.unbounded)
    junctions = [(float(p.x), float(p.y)) for p in special.gen]
    junctions += [(float(e.point.x), float(e.point.y)) for e in special.ng]
    junctions += list(special.singular) + [tuple(map(float, p)) for p in avoid]
    chosen: list[tuple[float, float]] = []
    exact: dict = {}
    for a, b in tree:
        pick = next((p for p in preferred if p not in exact.values()
                     and _separates(spec, decomp, fmodel, cache, p, a, b)), None)
        if pick is not None:
            exact[len(chosen)] = Point2(*pick)
            chosen.append((float(pick[0]), float(pick[1])))
            continue
        cands = pool[(a, b)]
        best, best_key = None, None
        for x, y in cands:
            near = FeatureDistance(junctions + chosen)(x, y)
            if near < delta:
                continue
            key = (-round(near / diag, 9), x, y)
            if best_key is None or key < best_key:
                best, best_key = (x, y), key
        if best is None:
            raise TransitionError(f"no regular point of Gamma separates components {a} and {b}",
                                  stage="transition")
        chosen.append(best)
    tr = [exact[k] if k in exact else
          snap_rational(x, y, (spec.f_gamma,), radius=decomp.grid.cell)
          for k, (x, y) in enumerate(chosen)]
    if not validate_transition_set(spec, decomp, tr):
        raise TransitionError("chosen transition points fail the validity check",
                              stage="transition")
    return tr


def check_transition_points(spec, decomp, tr):
    cache = DenseCache(spec)
    fmodel = HModel(cache.f_gamma, np.zeros((0, 2)), 0.0, False)
    cell = decomp.grid.cell
    for p in tr:
        x, y = float(p[0]), float(p[1])
        v, gx, gy = fmodel.point(x, y)
        if abs(v) > 1e-9 * _local_scale(fmodel.coef, x, y):
            raise TransitionError(f"transition point ({x:g}, {y:g}) is not on A_Gamma",
                                  stage="transition")
        if math.hypot(gx, gy) <= 1e-6 * _local_scale(fmodel.coef, x, y):
            raise TransitionError(f"transition point ({x:g}, {y:g}) is singular",
                                  stage="transition")
        if not _in_gamma(spec, cache, x, y, 1e-6 * cell):
            raise TransitionError(f"transition point ({x:g}, {y:g}) is not in Gamma",
                                  stage="transition")
    if not validate_transition_set(spec, decomp, tr):
        raise TransitionError("supplied transition points fail the validity check",
                              stage="transition")


def _disk_mask(grid: Grid, pts, radius_cells: float):
    X, Y = grid.centers()
    m = np.zeros((grid.nx, grid.ny), dtype=bool)
    r = radius_cells * grid.cell
    for p in pts:
        m |= np.hypot(X - float(p[0]), Y - float(p[1])) <= r
    return m


def _valid_on(spec, box, resolution, pieces, tr, cache, junctions=()):
    grid, gm, _, _ = _raster(spec, box, resolution, pieces, cache, junctions)
    disks = _disk_mask(grid, tr, 3.0)
    _, n_gamma = label(gm & ~disks, True)
    _, k = _components(~gm | disks, grid, junctions)
    return n_gamma <= 1 and k == 1


def validate_transition_set(spec: SemialgebraicSpec, decomp: RegionDecomposition, tr) -> bool:
    """Gamma minus small disks stays connected and opening the disks joins the complement."""
    cache = DenseCache(spec)
    a = _valid_on(spec, decomp.box, decomp.resolution, decomp.point_pieces, tr, cache,
                  decomp.junctions)
    b = _valid_on(spec, decomp.box, 2 * decomp.resolution, decomp.point_pieces, tr, cache,
                  decomp.junctions)
    if a != b:
        raise Unresolved("transition validity differs between resolutions", stage="transition")
    return a


# ---------------------------------------------------------------------------
# branch seeds


def branch_path(spec: SemialgebraicSpec, entry: NGPoint, branch: int, i: int, box,
                cache=None) -> np.ndarray:
    """Polyline along the ``branch``-th missing branch from the NG point to arclength ``1/i``."""
    if i < 1:
        raise ValueError("branch index i must be positive")
    cache = cache or DenseCache(spec)
    fmodel = HModel(cache.f_gamma, np.zeros((0, 2)), 0.0, False)
    px, py = float(entry.point.x), float(entry.point.y)
    target = 1.0 / i
    r0 = min(entry.radius, 0.25 * target)
    dx, dy = entry.directions[branch]
    probes = circle_branches(cache.f_gamma, px, py, r0)
    if not probes:
        raise TracingError("branch lost on the probe circle", stage="seeds")
    sx, sy = max(probes, key=lambda q: (q[0] - px) * dx + (q[1] - py) * dy)
    # orient the walk away from the NG point
    tx, ty, _ = _tangent_at(fmodel, sx, sy)
    sign = 1.0 if tx * (sx - px) + ty * (sy - py) >= 0 else -1.0
    step = min(0.01 * target, 0.1 * r0)
    box = (min(box[0], px - 2 * target), max(box[1], px + 2 * target),
           min(box[2], py - 2 * target), max(box[3], py + 2 * target))
    feats = FeatureDistance([(px, py)])

    def stop(x, y, arc):
        return r0 + arc >= target

    w = walk(fmodel, (sx, sy), sign, step, feats, box, stop=stop, closure=False,
             feature_frac=0.5, max_steps=200_000)
    if w.status != "stopped":
        raise TracingError(f"branch continuation ended with status {w.status}", stage="seeds")
    pts = np.array([(px, py)] + w.points)
    # trim the last chord to land exactly at arclength 1/i
    arc = r0 + np.sum(w.steps[:-1]) if len(w.steps) > 1 else r0
    last = w.steps[-1] if w.steps else 0.0
    if last > 0:
        u = (target - arc) / last
        x = pts[-2, 0] + u * (pts[-1, 0] - pts[-2, 0])
        y = pts[-2, 1] + u * (pts[-1, 1] - pts[-2, 1])
        x, y, _ = project(fmodel, x, y)
        pts[-1] = (x, y)
    if _in_gamma(spec, cache, pts[-1, 0], pts[-1, 1], 1e-9):
        raise TracingError("branch seed fell back onto Gamma", stage="seeds")
    return pts


def _tangent_at(model, x, y):
    from .curves import tangent
    return tangent(model, x, y)


def branch_seeds(spec: SemialgebraicSpec, entry: NGPoint, i: int, box) -> list[tuple[float, float]]:
    """Points at arclength ``1/i`` along each missing branch at an NG point."""
    cache = DenseCache(spec)
    return [tuple(map(float, branch_path(spec, entry, b, i, box, cache)[-1]))
            for b in range(entry.n)]


def all_branch_seeds(spec, special: SpecialPointSet, i: int, box):
    """Seeds concatenated over NG points (the vector alpha_i) plus the branch polylines."""
    cache = DenseCache(spec)
    seeds, paths = [], []
    for e in special.ng:
        for b in range(e.n):
            path = branch_path(spec, e, b, i, box, cache)
            paths.append(path)
            seeds.append(snap_rational(path[-1, 0], path[-1, 1], (spec.f_gamma,)))
    return seeds, paths


def alpha_limit(special: SpecialPointSet) -> list[Point2]:
    return [e.point for e in special.ng for _ in range(e.n)]
