"""``bellbound`` command line."""
import argparse
import hashlib
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import BellError, canonical_form, classical_bound, is_tight, saturating_vertices
from .validation import check_ranks

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2

# arguments that do not change a result and are left out of its hash
_UNHASHED = {"json", "results_dir", "jobs", "command", "func", "verbose", "out"}


class UsageError(Exception):
    pass


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if hasattr(v, "item"):
        return v.item()
    return v


def results_dir(args):
    env = os.environ.get("BELLBOUND_RESULTS")
    if env:
        return Path(env)
    return Path(args.results_dir or "results")


def args_hash(params):
    blob = json.dumps(_jsonable(params), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def make_record(ineq_name, op, params, outputs, seed):
    return {
        "ineq": ineq_name,
        "op": op,
        "params": _jsonable(params),
        "outputs": _jsonable(outputs),
        "version": __version__,
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def _safe(name):
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in str(name))


def write_record(args, record):
    params = {k: v for k, v in vars(args).items() if k not in _UNHASHED}
    path = results_dir(args) / _safe(record["ineq"]) / f"{record['op']}-{args_hash(params)}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def emit(args, ineq_name, op, outputs, text):
    params = {k: v for k, v in vars(args).items() if k not in _UNHASHED}
    record = make_record(ineq_name, op, params, outputs, args.seed)
    path = write_record(args, record)
    if args.json == "-":
        print(json.dumps(record, indent=2, sort_keys=True))
    else:
        if args.json:
            Path(args.json).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        print(text)
    logging.getLogger(__name__).info("record written to %s", path)
    return record


def _load(name):
    from .catalog import get_inequality

    return get_inequality(name)


def cmd_parse(args):
    from .catalog import format_catalog, parse_catalog

    cat = parse_catalog(args.file)
    scen = next(iter(cat.values())).scenario if cat else None
    if args.out:
        Path(args.out).write_text(format_catalog(cat, scen))
    outputs = {"count": len(cat), "names": list(cat)}
    text = f"{len(cat)} inequalities parsed from {args.file}"
    if args.json != "-":
        for q in cat.values():
            text += f"\n{q}"
    emit(args, Path(args.file).stem, "parse", outputs, text)


def cmd_classical(args):
    q = _load(args.ineq)
    bound, vertex = classical_bound(q)
    out = {"bound": bound, "b0": q.b0, "alpha": list(vertex.alpha), "beta": list(vertex.beta),
           "valid": bound <= q.b0}
    emit(args, args.ineq, "classical", out, f"classical bound {bound} (stated b0 {q.b0})")


def cmd_tight(args):
    q = _load(args.ineq)
    sat = saturating_vertices(q)
    tight = is_tight(q)
    out = {"tight": tight, "saturating": len(sat), "dim": q.scenario.dim}
    emit(args, args.ineq, "tight", out, f"tight: {tight} ({len(sat)} saturating vertices, d = {q.scenario.dim})")


def cmd_canon(args):
    q = _load(args.ineq)
    c = canonical_form(q)
    out = {"canonical": [str(v) for v in c.vector], "b0": c.b0}
    emit(args, args.ineq, "canon", out, str(c))


def cmd_generate(args):
    from .catalog import Catalog, format_catalog
    from .facets import FacetGenerator

    seed = _load(args.seed_ineq)
    gen = FacetGenerator(method=args.method, max_rounds=args.rounds,
                         b0_star="auto" if args.cut is None else Fraction(args.cut))
    gen.fit(seed)
    cat = Catalog()
    for k, q in enumerate(gen.inequalities_, start=1):
        cat.add(q.with_name(f"G{k}_{q.scenario.label}"))
    text = format_catalog(cat)
    if args.out:
        Path(args.out).write_text(text)
    out = {"count": len(cat), "inequalities": [format_catalog(Catalog([(k, v)])).strip() for k, v in cat.items()]}
    emit(args, args.seed_ineq, "generate", out, text.rstrip())


def cmd_seesaw(args):
    from .seesaw import SpaceSpec, reduce_dimension, seesaw

    q = _load(args.ineq)
    rA, rB = check_ranks(args.ranks, q.scenario.m_A, q.scenario.m_B)
    space = SpaceSpec(args.dim, args.field, rA, rB)
    rep = seesaw(q, space, restarts=args.restarts, seed=args.seed, probes=args.probes, method=args.method)
    if args.reduce:
        rep = reduce_dimension(q, rep)
    out = rep.to_json()
    text = (f"violation {rep.violation:.7f}  H = {args.field} {rep.reduced_dim}  "
            f"D_A {''.join(map(str, rep.op_ranks[0]))}  D_B {''.join(map(str, rep.op_ranks[1]))}")
    emit(args, args.ineq, "seesaw", out, text)


def _npa_level(args):
    from .npa import LevelError, parse_level

    try:
        parse_level(args.level)
    except LevelError as exc:
        raise UsageError(str(exc)) from None


def cmd_npa(args):
    from .npa import solve_level

    _npa_level(args)
    q = _load(args.ineq)
    r = solve_level(q, args.level, tol=args.tol, sample=args.pattern_sample, sample_seed=args.seed)
    out = {"upper": r.upper, "primal": r.primal, "dual": r.dual, "level": r.level, "words": r.n_words,
           "classes": r.n_classes, "min_eig": r.min_eig, "converged": r.converged,
           "safety_margin": r.safety_margin}
    emit(args, args.ineq, "npa", out, f"upper bound {r.upper:.7f} at {r.level} ({r.n_words} words)")


def cmd_certify(args):
    from .npa import certify
    from .seesaw import SpaceSpec, seesaw

    _npa_level(args)
    q = _load(args.ineq)
    rep = seesaw(q, SpaceSpec(args.dim, args.field), restarts=args.restarts, seed=args.seed, probes=args.probes)
    g = certify(q, args.level, rep.violation, tol=args.tol)
    out = {"lower": g.lower, "upper": g.upper, "gap": g.gap, "matched": g.matched, "level": g.level}
    emit(args, args.ineq, "certify", out,
         f"lower {g.lower:.7f}  upper {g.upper:.7f}  gap {g.gap:.2e}  matched {g.matched}")


def cmd_eta(args):
    from .detect import optimize_threshold

    q = _load(args.ineq)
    rep = optimize_threshold(q, args.mode, args.complex == "yes", args.budget, args.seed)
    eta = rep.eta_sym if args.mode == "sym" else rep.eta_asym_B
    text = "no violation" if eta is None else f"threshold {eta:.6f} ({args.mode})"
    emit(args, args.ineq, "eta", rep.to_json(), text)


def cmd_golden(args):
    from .golden import golden_suite

    rows = golden_suite(args.tier, seed=args.seed, jobs=args.jobs)
    out = {"rows": [{"label": r.item.label, "value": r.value, "expected": r.item.expected, "passed": r.passed,
                     "error": r.error} for r in rows]}
    text = "\n".join(r.line() for r in rows)
    text += f"\n{sum(r.passed for r in rows)}/{len(rows)} passed"
    emit(args, "golden", f"golden-{args.tier}", out, text)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_ERROR


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH",
                   help="write the JSON record to PATH (stdout when no path is given)")
    p.add_argument("--results-dir", default=None, help="results directory (env BELLBOUND_RESULTS wins)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="bellbound", description="Bell inequality toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    p = add("parse", cmd_parse, "parse a catalog file")
    p.add_argument("file")
    p.add_argument("--out", help="write the catalog back out (round trip)")
    _common(p)
    for name, func, h in (("classical", cmd_classical, "classical bound"),
                          ("tight", cmd_tight, "facet test"),
                          ("canon", cmd_canon, "canonical form under relabelings")):
        p = add(name, func, h)
        p.add_argument("--ineq", required=True)
        _common(p)

    p = add("generate", cmd_generate, "generate tight inequalities from a seed facet")
    p.add_argument("--method", choices=("shelling", "slicing"), default="shelling")
    p.add_argument("--seed", dest="seed_ineq", required=True, metavar="NAME|FILE", help="seed inequality")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--cut", default=None, help="slicing bound b0* (default: automatic)")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH")
    p.add_argument("--results-dir", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(seed=0)

    p = add("seesaw", cmd_seesaw, "see-saw lower bound")
    p.add_argument("--ineq", required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--field", choices=("real", "complex"), default="real")
    p.add_argument("--ranks", default="auto", help="auto or e.g. 1222/1222")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--probes", type=int, default=64)
    p.add_argument("--method", choices=("eig", "nm"), default="eig")
    p.add_argument("--reduce", action="store_true", help="try to drop unused Schmidt directions")
    _common(p)

    p = add("npa", cmd_npa, "moment-matrix upper bound")
    p.add_argument("--ineq", required=True)
    p.add_argument("--level", default="L2", help="L1|1a|L2|2a|2b|L3|L2+AAB|custom:PATTERNS")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--pattern-sample", type=float, default=None,
                   help="keep this fraction of the words beyond level 2")
    _common(p)

    p = add("certify", cmd_certify, "compare see-saw and moment bounds")
    p.add_argument("--ineq", required=True)
    p.add_argument("--level", default="L2")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--field", choices=("real", "complex"), default="real")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--probes", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-7)
    _common(p)

    p = add("eta", cmd_eta, "detection-efficiency threshold")
    p.add_argument("--ineq", required=True)
    p.add_argument("--mode", choices=("sym", "asym"), default="sym")
    p.add_argument("--complex", choices=("yes", "no"), default="no")
    p.add_argument("--budget", type=int, default=None, help="max degenerate patterns")
    _common(p)

    p = add("golden", cmd_golden, "regression table")
    p.add_argument("--tier", choices=("fast", "slow"), default="fast")
    _common(p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (BellError, KeyError, ValueError, ArithmeticError, OSError) as exc:
        print(f"bellbound: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
