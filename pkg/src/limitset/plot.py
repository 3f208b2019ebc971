"""SVG rendering of a realization report."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
import yaml

from .errors import SpecError
from .family import HModel
from .levelset import marching_polylines, read_curve_csv
from .pipeline import chart_to_plane
from .report import read_report
from .semialg import member_float, parse_spec

PANEL = 440
PAD = 24


def ramp(k: int, n: int) -> str:
    """Blue to red colour ramp over the schedule."""
    u = k / max(n - 1, 1)
    r, g, b = (int(round(a + u * (c - a))) for a, c in ((31, 214), (119, 39), (180, 40)))
    return f"#{r:02x}{g:02x}{b:02x}"


class Panel:
    def __init__(self, box, left, title):
        self.box = box
        w, h = box[1] - box[0], box[3] - box[2]
        self.s = (PANEL - 2 * PAD) / max(w, h)
        self.ox = left + PAD + 0.5 * ((PANEL - 2 * PAD) - self.s * w)
        self.oy = PAD + 0.5 * ((PANEL - 2 * PAD) - self.s * h)
        self.left = left
        self.title = title
        self.items: list[str] = []

    def xy(self, p):
        x = self.ox + self.s * (p[:, 0] - self.box[0])
        y = self.oy + self.s * (self.box[3] - p[:, 1])
        return x, y

    def polyline(self, p, style):
        p = np.asarray(p, dtype=float)
        if len(p) < 2:
            return
        step = max(1, len(p) // 1500)
        p = np.vstack([p[::step], p[-1:]])
        x, y = self.xy(p)
        # split where the path leaves the panel or jumps (charts map lines through infinity)
        ok = np.isfinite(x) & np.isfinite(y) & inside(p, self.box, 0.02)
        runs, cur = [], []
        for k in range(len(p)):
            if ok[k] and (not cur or math.hypot(x[k] - cur[-1][0], y[k] - cur[-1][1]) < 60):
                cur.append((x[k], y[k]))
            else:
                if len(cur) > 1:
                    runs.append(cur)
                cur = [(x[k], y[k])] if ok[k] else []
        if len(cur) > 1:
            runs.append(cur)
        for r in runs:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in r)
            self.items.append(f'<polyline points="{pts}" fill="none" {style}/>')

    def marker(self, p, shape, style, r=4.0):
        x, y = self.xy(np.asarray([p], dtype=float))
        if not inside(np.asarray([p], dtype=float), self.box, 0.0)[0]:
            return
        x, y = x[0], y[0]
        if shape == "circle":
            self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" {style}/>')
        elif shape == "square":
            self.items.append(f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r}" '
                              f'height="{2 * r}" {style}/>')
        else:
            pts = f"{x:.2f},{y - r - 1:.2f} {x + r + 1:.2f},{y:.2f} {x:.2f},{y + r + 1:.2f} {x - r - 1:.2f},{y:.2f}"
            self.items.append(f'<polygon points="{pts}" {style}/>')

    def svg(self):
        frame = (f'<rect x="{self.left + PAD / 2}" y="{PAD / 2}" width="{PANEL - PAD}" '
                 f'height="{PANEL - PAD}" fill="none" stroke="#bbb"/>')
        title = (f'<text x="{self.left + PANEL / 2}" y="{PANEL + 4}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{escape(self.title)}</text>')
        return "\n".join([frame] + self.items + [title])


def inside(p, box, slack):
    w, h = box[1] - box[0], box[3] - box[2]
    return ((p[:, 0] >= box[0] - slack * w) & (p[:, 0] <= box[1] + slack * w)
            & (p[:, 1] >= box[2] - slack * h) & (p[:, 1] <= box[3] + slack * h))


def _algebraic_pieces(spec, box, resolution=400):
    """Polylines of the zero set of f_gamma split into in-Gamma and outside runs."""
    model = HModel.from_poly(spec.f_gamma, 0.0)
    polys, cell = marching_polylines(model, box, resolution)
    inner, outer = [], []
    for p, closed in polys:
        if closed:
            p = np.vstack([p, p[:1]])
        m = np.asarray(member_float(spec, p[:, 0], p[:, 1], cell), dtype=bool)
        start = 0
        for k in range(1, len(p) + 1):
            if k == len(p) or m[k] != m[start]:
                seg = p[max(start - 1, 0):k + 1] if k < len(p) else p[max(start - 1, 0):]
                (inner if m[start] else outer).append(seg)
                start = k
    return inner, outer


def _curves(report, base: Path):
    out = []
    entries = report.get("schedule", [])
    for run in report.get("ng_runs", []):
        entries = entries + [dict(e, i=run["i"]) for e in run["schedule"]]
    for e in entries:
        name = e.get("csv")
        if not name:
            continue
        path = base / name
        if path.exists():
            out.append((e, read_curve_csv(path)))
    return out


def render(report: dict, base: Path) -> str:
    spec = spec_from_doc(report["spec"]["document"])
    unb = report.get("unbounded")
    box = [float(v) for v in report["box"]]
    curves = _curves(report, base)
    if not unb and curves:
        allp = np.vstack([c for _, c in curves])
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        pad = 0.05 * max(hi[0] - lo[0], hi[1] - lo[1])
        box = [min(box[0], lo[0] - pad), max(box[1], hi[0] + pad),
               min(box[2], lo[1] - pad), max(box[3], hi[1] + pad)]
    panels = []
    if unb:
        chart = spec_from_doc({"clauses": unb["chart_clauses"]})
        panels.append((Panel(box, 0, "compactified chart"), chart, None))
        view = [float(v) for v in unb["view_box"]]
        tau = [float(eval_num(v)) for v in unb["translation"]]
        panels.append((Panel(view, PANEL, "original plane"), spec, tau))
    else:
        panels.append((Panel(box, 0, f"f = {report['f_gamma']}"), spec, None))
    special = report.get("special_points", {})
    marks = ([("circle", [eval_num(a) for a in p]) for p in special.get("gen", [])]
             + [("square", [eval_num(a) for a in p]) for p in special.get("tr", [])]
             + [("diamond", [eval_num(a) for a in e["point"]]) for e in special.get("ng", [])])
    for panel, pspec, tau in panels:
        inner, outer = _algebraic_pieces(pspec, panel.box)
        for p in outer:
            panel.polyline(p, 'stroke="#999" stroke-width="1" stroke-dasharray="4 3"')
        for p in inner:
            panel.polyline(p, 'stroke="#000" stroke-width="2"')
        for k, (e, c) in enumerate(curves):
            colour = ramp(k, len(curves))
            c = chart_to_plane(c, tau) if tau is not None else c
            panel.polyline(c, f'stroke="{colour}" stroke-width="1.2"')
        if tau is None:
            for shape, p in marks:
                panel.marker(p, shape, 'fill="none" stroke="#d62728" stroke-width="1.5"')
    legend = []
    for k, (e, _) in enumerate(curves):
        colour = ramp(k, len(curves))
        label = f"t = {float(e['t']):.3g}" + (f" i={e['i']}" if "i" in e else "")
        label += f" ({e['verdict']})" if "verdict" in e else ""
        legend.append(f'<text x="{PAD}" y="{PANEL + 22 + 14 * k}" font-family="sans-serif" '
                      f'font-size="11" fill="{colour}">{escape(label)}</text>')
    width = PANEL * len(panels)
    height = PANEL + 30 + 14 * len(curves)
    body = "\n".join(p.svg() for p, _, _ in panels)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
            f"{body}\n" + "\n".join(legend) + "\n</svg>\n")


def spec_from_doc(doc: dict):
    return parse_spec(yaml.safe_dump(doc, sort_keys=False), check_unbounded=False)


def eval_num(text) -> float:
    from fractions import Fraction
    return float(Fraction(str(text)))


def plot_report(report_path, out=None) -> Path:
    report_path = Path(report_path)
    report = read_report(report_path)
    if "spec" not in report or "box" not in report:
        raise SpecError("report lacks the spec document or box", stage="plot")
    svg = render(report, report_path.parent)
    out = Path(out) if out else report_path.parent / "plot.svg"
    try:
        out.write_text(svg, encoding="utf-8", newline="\n")
    except OSError as e:
        raise SpecError(f"cannot write {out}: {e.strerror}", stage="io") from None
    return out
