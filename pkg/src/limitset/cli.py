"""Command line: ``limitset realize | verify | plot``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import RealizationError, SpecError
from .family import read_field_text
from .pipeline import Options, realize, verify, write_outputs
from .plot import plot_report
from .report import dumps
from .semialg import load_spec


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("parameter values must be positive")
    return vals


def _bbox(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(":"))
    except ValueError:
        vals = ()
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("bbox must be xmin:xmax:ymin:ymax with min < max")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="limitset",
                                 description="Polynomial families with a prescribed limit periodic set.")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("realize", help="build the family and certify cycles")
    r.add_argument("spec")
    r.add_argument("--lambda", dest="lambdas", type=_floats, default=None,
                   help="comma separated parameter values (default: geometric schedule)")
    r.add_argument("--bbox", type=_bbox, default=None)
    r.add_argument("--resolution", type=int, default=512)
    r.add_argument("--target", type=float, default=0.15)
    r.add_argument("--out", default="out")
    r.add_argument("--no-plot", action="store_true")
    r.add_argument("-q", "--quiet", action="store_true")

    v = sub.add_parser("verify", help="re-certify an emitted field file")
    v.add_argument("spec")
    v.add_argument("field")
    v.add_argument("--lambda", dest="lambdas", type=_floats, required=True)
    v.add_argument("--bbox", type=_bbox, default=None)
    v.add_argument("--resolution", type=int, default=512)
    v.add_argument("--out", default=None, help="write the verification report here")
    v.add_argument("-q", "--quiet", action="store_true")

    p = sub.add_parser("plot", help="render report.json to SVG")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    return ap


def _logger(quiet):
    if quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr)


def _realize(args) -> int:
    spec = load_spec(args.spec)
    opts = Options(lambdas=args.lambdas, bbox=args.bbox, resolution=args.resolution,
                   target=args.target, log=_logger(args.quiet))
    run = realize(spec, opts)
    path = write_outputs(run, spec, args.out)
    if not args.no_plot:
        plot_report(path)
    print(f"{run.report['verdict']}  report: {path}")
    return 0 if run.report["verdict"] == "REALIZED" else 3


def _verify(args) -> int:
    spec = load_spec(args.spec)
    ff = read_field_text(args.field)
    opts = Options(bbox=args.bbox, resolution=args.resolution, log=_logger(args.quiet))
    rep = verify(spec, ff, args.lambdas, opts)
    text = dumps(rep)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        except OSError as e:
            raise SpecError(f"cannot write {args.out}: {e.strerror}", stage="io") from None
    for item in rep.get("results", []):
        tag = f" i={item['i']}" if "i" in item else ""
        print(f"t={item['t']:.6g}{tag}: {item['verdict']}")
    print(rep["verdict"])
    return 0 if rep["verdict"] == "VERIFIED" else 3


def _join_values(argv):
    # a box like -10:10:-5:5 looks like an option to argparse
    out, it = [], iter(argv)
    for a in it:
        if a == "--bbox":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--bbox={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_values(argv))
    try:
        if args.command == "realize":
            return _realize(args)
        if args.command == "verify":
            return _verify(args)
        out = plot_report(args.report, args.out)
        print(out)
        return 0
    except RealizationError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
