"""Command-line entry point.

Exit codes: 0 when nothing is violated (or every scenario matches), 1 when a
violation or mismatch is reported, 2 on usage or input errors.  Every output
document carries the tool version and the resolved run configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .nets import BudgetExceeded, build_net, make_subset
from .qc_check import VIOLATION, _clean, classify
from .qc_check import check_extremal, check_local_quasi_convex, check_locally_convex, check_quasi_convex
from .qgeo import certify, check_stationarity, minimize_chain, sm_convergence
from .spaceforms import GeometryError, comparison_angle
from .spaces import parse_number
from .spaces import Space, build_space
from .theorems import (
    Lemma44Instance,
    check_c1_at_vertex,
    check_c3,
    check_lemma43,
    check_lemma44,
    check_prop22,
    check_prop42,
)
from . import zoo

OK, FOUND, USAGE = 0, 1, 2
DEFAULT_RESOLUTION = 0.1


class UsageError(ValueError):
    pass


def _positive(name):
    def parse(text):
        try:
            v = parse_number(text)
        except Exception:
            raise argparse.ArgumentTypeError(f"{name}: not a number: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text}")
        return v

    return parse


def _positive_int(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: not an integer: {text!r}")
        if v <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text}")
        return v

    return parse


def _real(text):
    try:
        return parse_number(text)
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed: not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {text}")
    return v


def _m_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--m expects comma-separated integers: {text!r}")
    if not vals or any(v < 2 for v in vals):
        raise argparse.ArgumentTypeError("--m values must be integers >= 2")
    return vals


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: invalid JSON ({e})")


def _space_and_subset_doc(args):
    """Space plus the subset document from --subset, the space file, or a scenario."""
    subset = None
    if getattr(args, "scenario", None):
        spec = zoo.get_scenario(args.scenario)
        doc = spec.space
        subset = spec.subset
        if getattr(args, "resolution", 0) is None:
            args.resolution = spec.resolution
        if getattr(args, "subset_resolution", 0) is None and not getattr(args, "subset", None):
            args.subset_resolution = spec.subset_resolution
    elif args.space:
        doc = _load_json(args.space)
        subset = doc.get("subset")
    else:
        raise UsageError("--space or --scenario is required")
    if getattr(args, "resolution", 0) is None:
        args.resolution = DEFAULT_RESOLUTION
    arg = getattr(args, "subset", None)
    if arg:
        subset = _load_json(arg) if Path(arg).is_file() else arg
    space = build_space(doc)
    return space, subset


def _subset(args, space, subset):
    if subset is None:
        raise UsageError("--subset is required (or a 'subset' entry in the space file)")
    res = args.subset_resolution or args.resolution
    return make_subset(space, subset, res, args.seed)


def _point(space: Space, text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = text
    return space.decode(obj)


def _config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "func":
            continue
        out[k] = v
    return out


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _envelope(args, space: Space, body: dict) -> dict:
    return {"version": __version__, "config": _config(args), "space": space.to_dict(), **body}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_angle(args) -> int:
    theta = comparison_angle(args.k, args.s1, args.s2, args.opp)
    print(f"{theta:.12g}")
    return OK


def cmd_dist(args) -> int:
    space, _ = _space_and_subset_doc(args)
    print(f"{space.dist(_point(space, args.p), _point(space, args.q)):.12g}")
    return OK


CHECKS = ("qc", "lqc", "extremal", "convex", "classify")


def cmd_check(args) -> int:
    space, subset = _space_and_subset_doc(args)
    F = _subset(args, space, subset)
    Q = build_net(space, args.resolution, args.seed, cap=args.cap, probe_factor=args.probe_factor)
    if args.which == "classify":
        cls = classify(space, F, Q, lqc_radius=args.radius, tol=args.tol)
        reports = {k: r.to_dict(space) for k, r in cls.reports().items()}
        body = {"subset": F.label, "classification": reports, "broken_implications": cls.broken_implications}
        _emit(_envelope(args, space, body), args.out)
        return FOUND if any(r["verdict"] == VIOLATION for r in reports.values()) else OK
    if args.which == "qc":
        rep = check_quasi_convex(space, F, Q, tol=args.tol)
    elif args.which == "lqc":
        if args.radius is None:
            raise UsageError("check lqc needs --radius")
        rep = check_local_quasi_convex(space, F, args.radius, Q, tol=args.tol)
    elif args.which == "extremal":
        rep = check_extremal(space, F, Q)
    else:
        rep = check_locally_convex(space, F, tol=args.tol)
    body = {"subset": F.label, **rep.to_dict(space)}
    _emit(_envelope(args, space, body), args.out)
    return FOUND if rep.violated else OK


def cmd_qgeo(args) -> int:
    space, subset = _space_and_subset_doc(args)
    F = _subset(args, space, subset)
    a0, am = _point(space, args.start), _point(space, args.end)
    m = args.m[-1]
    chain = minimize_chain(space, F, a0, am, m)
    stat = check_stationarity(space, F, chain)
    body = {
        "subset": F.label,
        "points": [space.encode(p) for p in chain.points],
        "params": chain.params,
        "energy": chain.energy,
        "sweeps": chain.sweeps,
        "stationarity_margin": stat.worst_margin,
        "certificates": [],
    }
    found = False
    if args.certify:
        P = build_net(space, args.resolution, args.seed, cap=args.cap, probe_factor=args.probe_factor)
        for rep in certify(space, F, chain, P):
            body["certificates"].append({"check": rep.check, "verdict": rep.verdict, "margin": rep.worst_margin})
            found = found or rep.violated
    _emit(_envelope(args, space, body), args.out)
    return FOUND if found else OK


def cmd_smtable(args) -> int:
    space, subset = _space_and_subset_doc(args)
    F = _subset(args, space, subset)
    rows = sm_convergence(space, F, _point(space, args.start), _point(space, args.end), args.m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "S_m", "L2", "gap"])
    for r in rows:
        w.writerow([r.m, repr(r.S), repr(r.L2), repr(r.gap)])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return OK


VERIFY = ("c3", "prop42", "lemma43", "lemma44", "prop22", "c1vertex")


def cmd_verify(args) -> int:
    space, subset = _space_and_subset_doc(args)
    F = _subset(args, space, subset)
    w = args.which
    if w in ("c3", "prop42", "lemma43"):
        Q = zoo.with_landmarks(space, build_net(space, args.resolution, args.seed, cap=args.cap))
        rep = {"c3": check_c3, "prop42": check_prop42, "lemma43": check_lemma43}[w](space, F, Q, tol=args.tol)
    elif w == "lemma44":
        if args.x1 is None or args.x2 is None:
            raise UsageError("verify lemma44 needs --x1 and --x2")
        inst = Lemma44Instance(space, F, _point(space, args.x1), _point(space, args.x2), args.a1, args.a2)
        rng = np.random.default_rng(args.seed)
        H = space.canonical(space.geometry.random(args.samples, rng, 3.0))
        rep = check_lemma44(inst, H, tol=args.tol if args.tol is not None else 1e-6)
    elif w == "prop22":
        rep = check_prop22(space, F, tol=args.tol)
    else:
        if args.vertex is None:
            raise UsageError("verify c1vertex needs --vertex")
        rep = check_c1_at_vertex(space, F, _point(space, args.vertex), tol=args.tol, resolution=args.resolution, seed=args.seed)
    body = {"subset": F.label, **rep.to_dict(space)}
    _emit(_envelope(args, space, body), args.out)
    return FOUND if rep.violated else OK


def cmd_zoo(args) -> int:
    if args.action == "list":
        for s in zoo.list_scenarios():
            flags = ", ".join(f"{k}={v}" for k, v in sorted(s.expected.items()))
            print(f"{s.name}\t{flags}")
        return OK
    if not args.name:
        raise UsageError("zoo run needs a scenario name or 'all'")
    names = None if args.name == "all" else [args.name]
    results = zoo.run_all(names, args.resolution, args.seed, args.workers)
    run_config = {k: v for k, v in _config(args).items() if k not in ("workers", "out")}
    if args.out:
        zoo.write_reports(results, args.out, run_config)
    for name, doc in results.items():
        print(f"{name}\t{doc['status']}")
    return OK if all(d["status"] == "match" for d in results.values()) else FOUND


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p, resolution_default=None):
    p.add_argument("--space", help="space-spec JSON file")
    p.add_argument("--scenario", help="take space and subset from a zoo scenario")
    p.add_argument("--subset", help="subset name such as 'helix(1)' or a subset JSON file")
    p.add_argument("--resolution", type=_positive("--resolution"), default=resolution_default)
    p.add_argument("--subset-resolution", type=_positive("--subset-resolution"), default=None)
    p.add_argument("--tol", type=_positive("--tol"), default=None, help="tolerance (default: automatic)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--cap", type=_positive_int("--cap"), default=5000, help="net point budget")
    p.add_argument("--probe-factor", type=_positive("--probe-factor"), default=2.0)
    p.add_argument("--out", help="output path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qconvex", description="Quasi-convexity checks on model spaces.")
    parser.add_argument("--version", action="version", version=f"qconvex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("angle", help="comparison angle in the model plane")
    p.add_argument("--k", type=_real, required=True)
    p.add_argument("--s1", type=_real, required=True)
    p.add_argument("--s2", type=_real, required=True)
    p.add_argument("--opp", type=_real, required=True)
    p.set_defaults(func=cmd_angle)

    p = sub.add_parser("dist", help="distance between two points")
    p.add_argument("--space")
    p.add_argument("--scenario")
    p.add_argument("--p", required=True, help="JSON point or graph node id")
    p.add_argument("--q", required=True, help="JSON point or graph node id")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("check", help="run a subset check")
    p.add_argument("which", choices=CHECKS)
    _common(p)
    p.add_argument("--radius", type=_positive("--radius"), default=None, help="ball radius for lqc")
    p.set_defaults(func=cmd_check)

    for name, func, help_ in (("qgeo", cmd_qgeo, "minimise a chain inside the subset"), ("smtable", cmd_smtable, "S_m convergence table")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--from", dest="start", required=True, help="JSON start point")
        p.add_argument("--to", dest="end", required=True, help="JSON end point")
        p.add_argument("--m", type=_m_list, default=[8] if name == "qgeo" else [4, 8, 16, 32])
        if name == "qgeo":
            p.add_argument("--certify", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="theorem certificates")
    p.add_argument("which", choices=VERIFY)
    _common(p)
    p.add_argument("--x1")
    p.add_argument("--x2")
    p.add_argument("--a1", type=_real, default=1.0)
    p.add_argument("--a2", type=_real, default=1.0)
    p.add_argument("--samples", type=_positive_int("--samples"), default=200)
    p.add_argument("--vertex", help="JSON cone apex or suspension pole")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("zoo", help="scenario catalog")
    p.add_argument("action", choices=("list", "run"))
    p.add_argument("name", nargs="?")
    p.add_argument("--resolution", type=_positive("--resolution"), default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--workers", type=_positive_int("--workers"), default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_zoo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code not in (0, None) else OK
    try:
        return args.func(args)
    except (UsageError, GeometryError, ValueError, KeyError, BudgetExceeded) as e:
        name = type(e).__name__
        msg = e.args[0] if e.args else ""
        print(f"qconvex {args.command}: {name}: {msg}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
