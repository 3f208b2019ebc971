"""End-to-end realization and re-verification runs."""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .algebra import Point2, format_poly
from .dynamics import Verdict, verify_limit_cycle
from .errors import DisconnectedGamma, NumericalFailure, SpecError
from .family import (HModel, Mode, alpha_assignment, bendixson_point_map,
                     build_family, build_family_ng, compactify_set, hamiltonian_field,
                     format_field_text, lie_identity_check, pullback_field, translate_field)
from .levelset import (LevelCurve, ScheduleEntry, _densify, hausdorff_distance, lambda_schedule,
                       write_curve_csv,
                       sample_gamma, select_cycle, trace_level)
from .semialg import SemialgebraicSpec
from .topology import (SpecialPointSet, all_branch_seeds, alpha_limit, choose_transition_points,
                       classify_special_points, decompose_complement, working_box)

DEFAULT_VIEW = (-10.0, 10.0, -10.0, 10.0)
NOTE = ("Cycles are certified numerically at finitely many parameter values; the "
        "construction yields a limit cycle for every sufficiently small t.")


@dataclass
class Options:
    lambdas: list[float] | None = None
    bbox: tuple | None = None
    resolution: int = 512
    target: float = 0.15
    ng_indices: tuple[int, ...] = (2, 4, 8)
    tol: float = 1e-10
    log: object = None


@dataclass
class Run:
    report: dict
    curves: dict = field(default_factory=dict)      # csv name -> LevelCurve
    field_text: str = ""


# ---------------------------------------------------------------------------
# helpers


def num(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def pt(p) -> list[str]:
    return [num(p[0]), num(p[1])]


def fl(v):
    """JSON-safe float (non-finite values become strings)."""
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def t_label(t: float) -> str:
    return f"{t:.6g}"


def csv_name(t: float, index: int | None = None) -> str:
    return f"gamma_{t_label(t)}.csv" if index is None else f"gamma_{t_label(t)}_i{index}.csv"


def spec_digest(spec: SemialgebraicSpec) -> str:
    return hashlib.sha256(spec.dumps().encode()).hexdigest()


def _bounded_lookup(decomp):
    bx = decomp.box

    def bounded(x, y):
        if not (bx[0] <= x <= bx[1] and bx[2] <= y <= bx[3]):
            return False
        lab = decomp.labels[decomp.grid.cell_of(x, y)]
        return bool(lab >= 0 and lab != decomp.unbounded)
    return bounded


def _certifier(opts, box, bounded):
    def certify(t, curve, model):
        cert = verify_limit_cycle(model, t, curve, model=model, tol=opts.tol, box=box,
                                  bounded=bounded)
        return cert.verdict is Verdict.LIMIT_CYCLE, cert
    return certify


def chart_to_plane(pts, tau):
    """Points of the Bendixson chart mapped back to the (untranslated) plane."""
    pts = np.asarray(pts, dtype=float)
    r = (pts * pts).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = pts[:, 0] / r - float(tau[0])
        y = -pts[:, 1] / r - float(tau[1])
    return np.column_stack([x, y])


def _chart_densify(poly, tau, view, spacing, cap=20000):
    """Subdivide chart segments so their images in ``view`` are at most ``spacing`` apart."""
    out = [poly[:1]]
    img = chart_to_plane(poly, tau)
    big = (view[0] - (view[1] - view[0]), view[1] + (view[1] - view[0]),
           view[2] - (view[3] - view[2]), view[3] + (view[3] - view[2]))
    near = ((img[:, 0] >= big[0]) & (img[:, 0] <= big[1])
            & (img[:, 1] >= big[2]) & (img[:, 1] <= big[3]))
    for k in range(len(poly) - 1):
        a, b = poly[k], poly[k + 1]
        n = 1
        if near[k] or near[k + 1]:
            rho2 = min((a * a).sum(), (b * b).sum())
            seg = math.hypot(*(b - a))
            n = int(min(cap, max(1, math.ceil(seg / max(rho2, 1e-300) / spacing))))
        s = np.arange(1, n + 1)[:, None] / n
        out.append(a + s * (b - a))
    return np.vstack(out)


def view_points(curve: LevelCurve, tau, view, spacing):
    p = _chart_densify(curve.polyline(), tau, view, spacing)
    img = chart_to_plane(p, tau)
    keep = ((img[:, 0] >= view[0]) & (img[:, 0] <= view[1])
            & (img[:, 1] >= view[2]) & (img[:, 1] <= view[3]))
    return img[keep]


def view_metric(spec, tau, view, resolution):
    """Clipped Hausdorff distance, measured in the original plane, for chart curves."""
    spacing = math.hypot(view[1] - view[0], view[3] - view[2]) / resolution
    gamma_view = sample_gamma(spec, view, resolution)

    def measure(curve):
        pts = view_points(curve, tau, view, spacing)
        return hausdorff_distance(pts, gamma_view) if len(pts) else math.inf
    return measure


def _merge_box(box, pts, pad_frac=0.1):
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    b = (min(box[0], lo[0]), max(box[1], hi[0]), min(box[2], lo[1]), max(box[3], hi[1]))
    pad = pad_frac * max(b[1] - b[0], b[3] - b[2])
    return (b[0] - pad, b[1] + pad, b[2] - pad, b[3] + pad)


def _entry_json(e: ScheduleEntry, name: str | None) -> dict:
    d = {"t": fl(e.t), "certified": bool(e.certified), "distance": fl(e.distance)}
    if e.curve is not None:
        d.update(regularity_margin=fl(e.curve.regularity_margin),
                 residual=fl(e.curve.refinement_residual), vertices=len(e.curve.points),
                 csv=name)
    if e.certificate is not None:
        c = e.certificate.to_dict()
        d["certificate"] = {k: (fl(v) if isinstance(v, float) else v) for k, v in c.items()}
        d["verdict"] = c["verdict"]
    else:
        d["verdict"] = "NO_CYCLE" if e.curve is None else "UNCERTIFIED"
    if e.error:
        d["error"] = e.error
    for k, v in e.extra.items():
        d[k] = fl(v)
    return d


def realized(distances, target) -> bool:
    return len(distances) >= 2 and distances[-1] < target and distances[-1] < distances[0]


# ---------------------------------------------------------------------------
# realize


def realize(spec: SemialgebraicSpec, opts: Options | None = None) -> Run:
    opts = opts or Options()
    log = opts.log or (lambda m: None)
    unbounded = spec.unbounded
    meta: dict = {}
    if unbounded:
        comp = compactify_set(spec)
        work, tau = comp.spec, comp.translation
        view = tuple(opts.bbox or spec.bbox or DEFAULT_VIEW)
        if spec.transition_points is not None:
            mapped = tuple(bendixson_point_map((Fraction(p.x) + tau[0], Fraction(p.y) + tau[1]))
                           for p in spec.transition_points)
            work = dataclasses.replace(work, transition_points=mapped)
        box = working_box(work)
        meta = {"translation": pt(tau), "view_box": [fl(v) for v in view],
                "chart_f_gamma": format_poly(work.f_gamma),
                "chart_clauses": work.to_dict()["clauses"]}
        log(f"compactified: f = {format_poly(work.f_gamma)}, translation {pt(tau)}")
    else:
        work, tau, view = spec, None, None
        box = tuple(opts.bbox) if opts.bbox else working_box(spec)
    box = tuple(float(v) for v in box)
    log(f"working box {box}")

    decomp = decompose_complement(work, box, opts.resolution)
    if decomp.gamma_components > 1:
        raise DisconnectedGamma(f"Gamma has {decomp.gamma_components} connected pieces",
                                stage="topology")
    special = classify_special_points(work, box)
    preferred = [Point2(Fraction(0), Fraction(0))] if unbounded else []
    tr = choose_transition_points(work, decomp, special, preferred=preferred)
    special = special.with_tr(tr)
    S = special.S
    log(f"k = {decomp.k}; S = {[pt(p) for p in S]}; NG = {[pt(e.point) for e in special.ng]}")

    gamma_ref = sample_gamma(work, box, opts.resolution)
    features = ([(float(p.x), float(p.y)) for p in S]
                + [(float(e.point.x), float(e.point.y)) for e in special.ng]
                + list(special.singular))
    certify = _certifier(opts, box, _bounded_lookup(decomp))
    measure = view_metric(spec, tau, view, opts.resolution) if unbounded else None

    report = {
        "format": "limitset-report/1",
        "version": __version__,
        "spec": {"digest": spec_digest(spec), "document": spec.to_dict()},
        "f_gamma": format_poly(spec.f_gamma),
        "box": [fl(v) for v in box],
        "resolution": opts.resolution,
        "target": fl(opts.target),
        "tol": fl(opts.tol),
        "topology": {"k": decomp.k, "counts": list(decomp.counts),
                     "edges": [list(e) for e in decomp.edges]},
        "special_points": _special_json(special),
        "note": NOTE,
    }
    run = Run(report)
    ng_points = [(float(e.point.x), float(e.point.y)) for e in special.ng]

    if not special.ng:
        fam = build_family(work.f_gamma, S)
        entries = lambda_schedule(work, fam, box, gamma_ref=gamma_ref, target=opts.target,
                                  features=features, ts=opts.lambdas,
                                  resolution=opts.resolution, measure=measure,
                                  certify=certify, log=log)
        sched = []
        for e in entries:
            name = csv_name(e.t) if e.curve is not None else None
            if name:
                run.curves[name] = e.curve
            sched.append(_entry_json(e, name))
        dists = [e.distance for e in entries if e.certified]
        report["mode"] = Mode.GENERIC.value
        report["family"] = {"h": format_poly(fam.h), "S": [pt(p) for p in S]}
        report["schedule"] = sched
        verdict = realized(dists, opts.target)
        h_out = fam.h
        params = {"mode": Mode.GENERIC.value, "S": _pts_text(S),
                  "lambda": ",".join(t_label(e.t) for e in entries if e.certified)}
    else:
        report["mode"] = Mode.NON_GENERIC.value
        runs, dists, verdict_i = [], [], True
        fam_sym = None
        params = {"mode": Mode.NON_GENERIC.value, "S": _pts_text(S),
                  "alpha0": _pts_text(alpha_limit(special))}
        for i in opts.ng_indices:
            seeds, paths = all_branch_seeds(work, special, i, box)
            allp = np.vstack(paths)
            box_i = _merge_box(box, allp)
            delta = 1e-3 * math.hypot(box[1] - box[0], box[3] - box[2])
            fam = build_family_ng(work.f_gamma, S, seeds, alpha_limit(special), delta)
            fam_sym = fam
            spacing = math.hypot(box_i[1] - box_i[0], box_i[3] - box_i[2]) / opts.resolution
            gamma_i = np.vstack([gamma_ref] + [_densify(p, spacing) for p in paths])
            feats_i = features + [(float(a.x), float(a.y)) for a in seeds]
            try:
                entries = lambda_schedule(work, fam, box_i, gamma_ref=gamma_ref,
                                          target=opts.target, features=feats_i,
                                          ts=opts.lambdas, resolution=opts.resolution,
                                          ng=ng_points, index=i, gamma_i_ref=gamma_i,
                                          certify=certify, log=log)
            except NumericalFailure as exc:
                log(f"i={i}: {exc}")
                entries = []
            good = [e for e in entries if e.certified and e.t < 1.0 / i
                    and e.extra.get("distance_gamma_i", math.inf) < 1.0 / i
                    and e.extra.get("ng_clearance", 0.0) > e.t]
            sched = []
            for e in entries:
                name = csv_name(e.t, i) if e.curve is not None else None
                if name:
                    run.curves[name] = e.curve
                sched.append(_entry_json(e, name))
            item = {"i": i, "alpha": [pt(a) for a in seeds], "h": format_poly(fam.h),
                    "schedule": sched, "certified": bool(good)}
            if good:
                e = good[0]
                item.update(lambda_i=fl(e.t), distance_gamma_i=fl(e.extra["distance_gamma_i"]),
                            distance_gamma=fl(e.distance), ng_clearance=fl(e.extra["ng_clearance"]))
                dists.append(e.distance)
                params[f"alpha_i{i}"] = ";".join(
                    f"{k}={num(v)}" for k, v in alpha_assignment(seeds).items())
                params[f"lambda_i{i}"] = t_label(e.t)
            else:
                verdict_i = False
            runs.append(item)
        report["family"] = {"h": format_poly(fam_sym.symbolic_h), "S": [pt(p) for p in S],
                            "alpha0": [pt(p) for p in alpha_limit(special)]}
        report["ng_runs"] = runs
        verdict = verdict_i and realized(dists, opts.target)
        h_out = fam_sym.symbolic_h

    X = hamiltonian_field(h_out)
    if unbounded:
        pulled, d = pullback_field(X)
        X = translate_field(pulled, tau)
        meta["d"] = d
        report["unbounded"] = meta
        params.update(chart="bendixson", translation=_pts_text([tau]), d=str(d),
                      view_box=":".join(t_label(v) for v in view))
    run.field_text = format_field_text(X, h_out, params)
    report["field"] = {"degree": X.degree, "identity": lie_identity_check(h_out)}
    report["verdict"] = "REALIZED" if verdict else "NOT_REALIZED"
    return run


def _pts_text(points) -> str:
    return ";".join(f"({num(p[0])},{num(p[1])})" for p in points)


def parse_pts_text(text: str) -> list[Point2]:
    out = []
    for part in filter(None, (s.strip() for s in text.split(";"))):
        a, b = part.strip("()").split(",")
        out.append(Point2(Fraction(a), Fraction(b)))
    return out


def _special_json(sp: SpecialPointSet) -> dict:
    return {"gen": [pt(p) for p in sp.gen], "tr": [pt(p) for p in sp.tr],
            "ng": [{"point": pt(e.point), "n": e.n,
                    "directions": [[fl(a), fl(b)] for a, b in e.directions]} for e in sp.ng]}


# ---------------------------------------------------------------------------
# verify


def verify(spec: SemialgebraicSpec, fieldfile, lambdas, opts: Options | None = None) -> dict:
    """Re-check an emitted family: identity, tracing, selection, certification."""
    opts = opts or Options()
    log = opts.log or (lambda m: None)
    h = fieldfile.h
    X = fieldfile.field
    chart = fieldfile.params.get("chart")
    report = {"format": "limitset-verify/1", "spec": {"digest": spec_digest(spec)},
              "lambda": [fl(t) for t in lambdas]}
    # identity: the file's field must be the one built from its h
    expected = hamiltonian_field(h)
    if chart == "bendixson":
        tau = parse_pts_text(fieldfile.params.get("translation", "(0,0)"))[0]
        pulled, _ = pullback_field(expected)
        expected = translate_field(pulled, tau)
        identity = (lie_identity_check(h) and (X.P - expected.P).is_zero()
                    and (X.Q - expected.Q).is_zero())
    else:
        tau = None
        identity = lie_identity_check(h, X)
    report["identity"] = bool(identity)
    if not identity:
        report["verdict"] = "IDENTITY_FAILURE"
        return report

    if chart == "bendixson":
        work = compactify_set(spec).spec
        box = working_box(work)
    else:
        work = spec
        box = tuple(opts.bbox) if opts.bbox else working_box(spec)
    box = tuple(float(v) for v in box)
    decomp = decompose_complement(work, box, opts.resolution)
    bounded = _bounded_lookup(decomp)
    S = parse_pts_text(fieldfile.params.get("S", ""))
    cands = [(float(p.x), float(p.y)) for p in S]
    sp = classify_special_points(work, box)
    cands += [(float(e.point.x), float(e.point.y)) for e in sp.ng] + list(sp.singular)
    gamma_ref = sample_gamma(work, box, opts.resolution)

    variants = [(None, {})]
    alphas = sorted(k for k in fieldfile.params if k.startswith("alpha_i"))
    if any(v.startswith("a") for v in h.used_variables()):
        variants = []
        for k in alphas:
            assign = dict(item.split("=") for item in fieldfile.params[k].split(";"))
            variants.append((int(k[len("alpha_i"):]), {a: Fraction(v) for a, v in assign.items()}))
    results = []
    for index, assign in variants:
        hi = h.subs(assign) if assign else h
        feats = cands + [(float(assign[f"a{2 * j + 1}"]), float(assign[f"a{2 * j + 2}"]))
                         for j in range(len(assign) // 2)]
        box_i = _merge_box(box, np.array(feats)) if assign else box
        for t in lambdas:
            model = HModel.from_poly(hi, t)
            item = {"t": fl(t)}
            if index is not None:
                item["i"] = index
            curves = trace_level(model, t, box_i, opts.resolution, feats)
            try:
                cyc, d = select_cycle(curves, gamma_ref, [], 4.0 * opts.target, t)
            except NumericalFailure as exc:
                item.update(verdict="NO_CYCLE", error=str(exc))
                results.append(item)
                log(f"t={t:.6g}: {exc}")
                continue
            cert = verify_limit_cycle(model, t, cyc, model=model, tol=opts.tol, box=box_i,
                                      bounded=bounded)
            c = cert.to_dict()
            item.update(distance=fl(d), regularity_margin=fl(cyc.regularity_margin),
                        verdict=c["verdict"],
                        certificate={k: (fl(v) if isinstance(v, float) else v)
                                     for k, v in c.items()})
            log(f"t={t:.6g}: {c['verdict']} distance {d:.4g}")
            results.append(item)
    report["results"] = results
    report["verdict"] = ("VERIFIED" if results and all(r["verdict"] == "LIMIT_CYCLE"
                                                       for r in results) else "PARTIAL")
    return report


# ---------------------------------------------------------------------------
# files


def write_outputs(run: Run, spec: SemialgebraicSpec, out) -> Path:
    """spec.yaml, field.txt, gamma_<t>.csv and report.json inside ``out``."""
    from .report import write_report
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        text = spec.text or yaml.safe_dump(spec.to_dict(), sort_keys=False)
        (out / "spec.yaml").write_text(text, encoding="utf-8", newline="\n")
        (out / "field.txt").write_text(run.field_text, encoding="utf-8", newline="\n")
        for name in sorted(run.curves):
            write_curve_csv(out / name, run.curves[name])
        write_report(out / "report.json", run.report)
    except OSError as e:
        raise SpecError(f"cannot write to {out}: {e.strerror}", stage="io") from None
    return out / "report.json"
