"""Command-line interface: one subcommand per analysis, artifacts under --out-dir.

Exit status: 0 on success, 1 on usage or input errors, 2 when two certificates
contradict each other (for example a hull nesting violation).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .errors import CertificateInconsistency, IFSError
from .io import dumps, parse_family, write_cover, write_csv, write_json, write_manifest, write_pgm, write_points

EXIT_OK, EXIT_USAGE, EXIT_INCONSISTENT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- argument helpers

def load_family(spec: str):
    """A family file path, or the name of a bundled fixture."""
    from .families import fixture_names, load_fixture
    if os.path.exists(spec):
        return parse_family(spec)
    if spec in fixture_names():
        return load_fixture(spec)
    raise UsageError(f"no family file or fixture named {spec!r} (fixtures: {', '.join(fixture_names())})")


def parse_grid(text: str) -> list:
    """'a,b,c' or 'lo:hi:n' (n evenly spaced values, both ends included)."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(lo), float(hi), n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad t grid {text!r}; use 'a,b,c' or 'lo:hi:n'") from None


def parse_floats(text: str, n: int, what: str) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers")
    return vals


def parse_res(text: str):
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise UsageError(f"bad resolution {text!r}; use WxH") from None
    if w < 1 or h < 1:
        raise UsageError("resolution must be positive")
    return w, h


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"bad complex number {text!r}") from None


def _positive(name, v):
    if v is not None and not v > 0:
        raise UsageError(f"--{name} must be positive")
    return v


# ---------------------------------------------------------------- report

class Run:
    """Collects artifacts and tagged thresholds for one subcommand."""

    def __init__(self, args):
        self.args = args
        self.out = args.out_dir
        os.makedirs(self.out, exist_ok=True)
        self.files = []
        self.thresholds = {}
        self.rows = []
        self.extra = {}
        self.classification = None

    def path(self, name):
        return os.path.join(self.out, name)

    def add(self, *paths):
        self.files.extend(paths)

    def family(self, fam):
        from .core import classify
        from .jsr import t0_threshold
        self.classification = classify(fam).to_dict()
        t0 = t0_threshold(fam)
        self.thresholds["t0"] = {"lo": t0.lo, "hi": t0.hi, "kind": "exact" if t0.exact else "bound"}
        return t0

    def finish(self):
        cfg = {k: v for k, v in vars(self.args).items() if k not in ("func", "out_dir")}
        report = {"tool": {"name": "ifslab", "version": __version__}, "config": cfg,
                  "classification": self.classification, "thresholds": self.thresholds,
                  "rows": self.rows,
                  "artifacts": sorted(os.path.relpath(f, self.out) for f in set(self.files))}
        report.update(self.extra)
        rp = self.path("report.json")
        write_json(rp, report)
        write_manifest(self.out, self.files + [rp])


def _echo(obj):
    sys.stdout.write(dumps(obj))


# ---------------------------------------------------------------- subcommands

def cmd_classify(args, run):
    fam = load_family(args.family)
    run.family(fam)
    p = run.path("classification.json")
    write_json(p, run.classification)
    run.add(p)
    _echo(run.classification)


def cmd_t0(args, run):
    from .jsr import t0_threshold
    fam = load_family(args.family)
    run.family(fam)
    r = t0_threshold(fam, max_depth=args.depth)
    out = {"t0": r.lo, "exact": True} if r.exact else {"t0_lo": r.lo, "t0_hi": r.hi, "exact": False}
    if r.witness_word is not None:
        out["witness_word"] = list(r.witness_word)
    p = run.path("t0.json")
    write_json(p, out)
    run.add(p)
    _echo(out)


def cmd_attractor(args, run):
    from .attractor import compute_attractor, convex_hull, trapping_ball
    from .core import instantiate
    fam = load_family(args.family)
    t0 = run.family(fam)
    _positive("cell", args.cell)
    if not 0 <= args.t < t0.lo:
        raise UsageError(f"t must lie in [0, {t0.lo})")
    inst = instantiate(fam, args.t)
    trap = trapping_ball(fam, args.t)
    cover = compute_attractor(inst, trap, args.cell)
    run.add(*write_cover(run.path("attractor.pgm"), cover))
    p = run.path("cells.csv")
    write_points(p, cover.centers())
    run.add(p)
    hull = np.asarray(convex_hull(cover))
    summary = {"t": args.t, "cells": len(cover), "cell": cover.cell, "level": cover.level,
               "trap": trap.to_dict(), "hull": hull.tolist()}
    run.rows.append(summary)
    _echo(summary)


def cmd_scan_connectivity(args, run):
    from .parallel import pmap
    from .topology import connectivity_lower_bound, connectivity_status
    fam = load_family(args.family)
    run.family(fam)
    _positive("cell", args.cell)
    ts = parse_grid(args.t_grid)
    if run.classification["similarity"]:
        run.thresholds["connectivity"] = {"value": connectivity_lower_bound(fam), "kind": "bound"}
    sts = pmap(lambda t: connectivity_status(fam, t, args.cell, args.max_refinements), ts, args.threads)
    rows = []
    for t, st in zip(ts, sts):
        w = st.witness
        n = [None, None] if w is None else (list(w.normal) + [None])[:2]
        rows.append([t, st.status, st.components, st.gap, n[0], n[1], None if w is None else w.offset])
        run.rows.append(dict(t=t, **st.to_dict()))
    p = run.path("connectivity.csv")
    write_csv(p, ["t", "status", "components", "gap", "witness_normal_x", "witness_normal_y",
                  "witness_offset"], rows)
    run.add(p)


def cmd_scan_interior(args, run):
    from .interior import interior_scan
    fam = load_family(args.family)
    run.family(fam)
    _positive("cell", args.cell)
    sc = interior_scan(fam, parse_grid(args.t_grid), args.cell, args.max_n, threads=args.threads)
    run.thresholds["measure"] = {"value": sc.measure_threshold, "kind": "bound"}
    if sc.t2_bracket is not None:
        run.thresholds["t2"] = {"lo": sc.t2_bracket[0], "hi": sc.t2_bracket[1], "kind": "evidence",
                                "assumes": "tame"}
    rows = []
    for t, st in sc.rows:
        b = st.ball
        c = [None, None] if b is None else list(np.asarray(b.center, dtype=float)) + [None]
        rows.append([t, st.status, st.kind, c[0], c[1], None if b is None else b.radius, st.depth])
        run.rows.append(dict(t=t, **st.to_dict()))
    p = run.path("interior.csv")
    write_csv(p, ["t", "status", "certificate_kind", "ball_cx", "ball_cy", "ball_r", "depth_n"], rows)
    run.add(p)


def cmd_weak_threshold(args, run):
    from .topology import weak_threshold
    fam = load_family(args.family)
    run.family(fam)
    _positive("cell", args.cell)
    w = weak_threshold(fam, parse_grid(args.t_grid), args.cell)
    run.thresholds["weak"] = {"lo": w.lo, "hi": w.hi, "kind": "evidence"}
    p = run.path("weak.json")
    write_json(p, w.to_dict())
    run.add(p)
    run.rows.extend({"t": t, "strongly_disconnected": s} for t, s in w.probes)
    _echo(w.to_dict())


def cmd_cone_bound(args, run):
    from .interior import nonempty_threshold_bound_2d
    fam = load_family(args.family)
    run.family(fam)
    cp = nonempty_threshold_bound_2d(fam)
    run.thresholds["cone"] = {"value": cp.tau, "kind": "bound"}
    p = run.path("cone.json")
    write_json(p, cp.to_dict())
    run.add(p)
    _echo(cp.to_dict())


def cmd_transition(args, run):
    from .transition import transition_report
    fam = load_family(args.family)
    run.family(fam)
    _positive("cell", args.cell)
    _positive("epsilon", args.epsilon)
    rep = transition_report(fam, parse_grid(args.t_grid), args.cell, args.epsilon, args.max_points,
                            threads=args.threads)
    p = run.path("lower_attractor.csv")
    write_points(p, rep.lower_attractor.points)
    run.add(p)
    p = run.path("hulls.json")
    write_json(p, rep.hull_sequence.to_dict())
    run.add(p)
    p = run.path("cauchy.csv")
    write_csv(p, ["t_k", "t_k1", "hausdorff"], rep.cauchy_table)
    run.add(p)
    for k, (t, cover) in enumerate(rep.upper_estimates):
        run.add(*write_cover(run.path(f"upper_{k:02d}.pgm"), cover))
    run.thresholds["k_star"] = {"vertices": np.asarray(rep.hull_sequence.k_star).tolist(), "kind": "evidence"}
    run.extra["transition"] = rep.to_dict()
    _echo({"q_star": rep.q_star.tolist(), "verdict": rep.upper.verdict,
           "lower_points": len(rep.lower_attractor), "invariance_residual": rep.residual})


def cmd_mandel(args, run):
    from .scan import ComplexFamilySpec, mandelbrot_scan
    region = parse_floats(args.region, 4, "--region")
    res = parse_res(args.res)
    if args.budget < 0:
        raise UsageError("--budget must be non-negative")
    spec = ComplexFamilySpec(parse_complex(args.m), parse_complex(args.c1), parse_complex(args.c2))
    ps = mandelbrot_scan(spec, region, res, args.budget, threads=args.threads, strict=args.strict)
    out = args.out if args.out else run.path("mandel.pgm")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_pgm(out, ps.image())
    side = os.path.splitext(out)[0] + ".json"
    write_json(side, ps.to_dict())
    run.add(out, side)
    run.extra["plane_scan"] = ps.to_dict()
    _echo(ps.to_dict())


def _read_points(path):
    try:
        P = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read points from {path}: {e}") from None
    return P


def cmd_hausdorff(args, run):
    from .attractor import hausdorff
    d = hausdorff(_read_points(args.a), _read_points(args.b))
    out = {"hausdorff": d}
    p = run.path("hausdorff.json")
    write_json(p, out)
    run.add(p)
    _echo(out)


# ---------------------------------------------------------------- parser

def build_parser():
    ap = _Parser(prog="ifslab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ifslab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="ifslab-out", help="artifact directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default IFSLAB_THREADS or the CPU count)")
    common.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_, family=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if family:
            p.add_argument("family", help="family JSON file or bundled fixture name")
        p.set_defaults(func=func)
        return p

    add("classify", cmd_classify, "similarity / linear / quasi- and semi-linear / bounded")
    p = add("t0", cmd_t0, "existence threshold t0 = 1/rho")
    p.add_argument("--depth", type=int, default=10)
    p = add("attractor", cmd_attractor, "outer box cover of A_t")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--cell", type=float, default=1e-3)
    p = add("scan-connectivity", cmd_scan_connectivity, "connectivity status along a t grid")
    p.add_argument("--t-grid", required=True)
    p.add_argument("--cell", type=float, default=None)
    p.add_argument("--max-refinements", type=int, default=5)
    p = add("scan-interior", cmd_scan_interior, "interior status along a t grid")
    p.add_argument("--t-grid", required=True)
    p.add_argument("--cell", type=float, default=None)
    p.add_argument("--max-n", type=int, default=8)
    p = add("weak-threshold", cmd_weak_threshold, "bracket for weak connectivity")
    p.add_argument("--t-grid", required=True)
    p.add_argument("--cell", type=float, default=1e-3)
    add("cone-bound", cmd_cone_bound, "rotation-cone lower bound for non-empty interior")
    p = add("transition", cmd_transition, "transition attractors and hulls of a bounded family")
    p.add_argument("--t-grid", required=True)
    p.add_argument("--cell", type=float, default=1e-3)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-points", type=int, default=1_000_000)
    p = add("mandel", cmd_mandel, "connectivity image of a tau-plane region", family=False)
    p.add_argument("--region", default="0,0,1,1", help="x0,y0,x1,y1")
    p.add_argument("--res", default="128x128", help="WxH")
    p.add_argument("--budget", type=int, default=5)
    p.add_argument("--out", default=None, help="PGM path (default OUT_DIR/mandel.pgm)")
    p.add_argument("--m", default="1", help="complex factor of the second map")
    p.add_argument("--c1", default="0")
    p.add_argument("--c2", default="1")
    p.add_argument("--strict", action="store_true", help="reject regions leaving the unit disk")
    p = add("hausdorff", cmd_hausdorff, "Hausdorff distance of two point CSV files", family=False)
    p.add_argument("a")
    p.add_argument("b")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("ifslab: error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = Run(args)
        args.func(args, run)
        run.finish()
    except CertificateInconsistency as e:
        print(f"ifslab: certificate inconsistency: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (UsageError, IFSError, ValueError, OSError) as e:
        print(f"ifslab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
