"""Compiled vs pure-Python kernels on the segment-plus-circle family.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time
from fractions import Fraction

import numpy as np

from limitset.algebra import Point2
from limitset.family import build_family
from limitset.kernels import backends
from limitset.semialg import parse_spec

SPEC = """clauses:
  - f: y*(x^2+y^2-1)
    constraints:
      - {g: 4 - x^2 - y^2, rel: ">="}
"""


def setup(t=1e-3, n=512):
    spec = parse_spec(SPEC)
    S = [Point2(Fraction(a), Fraction(b)) for a, b in ((-2, 0), (2, 0), (0, 1), (0, -1))]
    model = build_family(spec.f_gamma, S).model(t)
    xs = np.linspace(-2.4, 2.4, n + 1)
    ys = np.linspace(-1.4, 1.4, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    rng = np.random.default_rng(0)
    return {
        "model": model, "X": X, "Y": Y,
        "mask": np.ascontiguousarray(rng.random((n, n)) < 0.45),
        "a": rng.standard_normal((4000, 2)),
        "p0": rng.standard_normal((4000, 2)),
        "p1": rng.standard_normal((4000, 2)),
    }


def cases(k, d):
    m = d["model"]
    coef, pts = m.coef, m.pts
    vals = k.hmodel_eval(coef, pts, m.t, True, d["X"], d["Y"])[0]
    cx = 0.5 * (d["X"][:-1, :-1] + d["X"][1:, 1:])
    cy = 0.5 * (d["Y"][:-1, :-1] + d["Y"][1:, 1:])
    center = k.hmodel_eval(coef, pts, m.t, True, cx, cy)[0]
    fld = m.field_tuple()
    return {
        "hmodel_eval 513^2": lambda: k.hmodel_eval(coef, pts, m.t, True, d["X"], d["Y"]),
        "hmodel_point x2000": lambda: [k.hmodel_point(coef, pts, m.t, True, 0.3, 0.7)
                                       for _ in range(2000)],
        "marching_squares 512^2": lambda: k.marching_squares(np.ascontiguousarray(vals),
                                                             np.ascontiguousarray(center)),
        "label 512^2": lambda: k.label(d["mask"], False),
        "directed_hausdorff 4000x4000": lambda: k.directed_hausdorff(d["a"], d["p0"], d["p1"]),
        "dopri5 t=5": lambda: k.dopri5(fld, 0.0, 1.2, 5.0, 1e-10, 1e-10, None, 0, 10 ** 7,
                                       (-10.0, 10.0, -10.0, 10.0)),
    }


def best(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    data = setup()
    found = backends()
    names = list(found)
    timings = {n: {c: best(f, args.repeat) for c, f in cases(found[n], data).items()}
               for n in names}
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in names)
          + ("     speedup" if len(names) > 1 else ""))
    for c in timings[names[0]]:
        row = f"{c:32s}" + "".join(f"{timings[n][c] * 1e3:10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{timings['python'][c] / timings['cython'][c]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
