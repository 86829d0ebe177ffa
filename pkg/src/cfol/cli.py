"""Command-line front end: one subcommand per operation group.

Exit status 0 on success, 1 on a domain or validation error, 2 on a usage
error.  Rationals on the command line are written ``p/q`` or as integers.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .amalgam import diff_amalgam, extension_defect, farey_extensions, log_to_csv, path_amalgam, run_fraisse
from .analysis import compute_type, definability_probe, qe_probe, type_distance, zero_set
from .errors import CfolError
from .formulas import FormulaFamily, enumerate_formulas, random_formula
from .games import GameSpec, back_and_forth_iso, describe_tree, ef_play, ef_solve
from .io import (
    dumps,
    load_family_dir,
    load_formula,
    load_formulas,
    load_metric,
    load_signature,
    load_structure,
    load_tracked,
    parse_context,
    read_json,
    save_structure,
    write_json,
)
from .parser import parse_formula
from .rational import format_fraction, parse_fraction
from .semantics import certified_eval, formula_value, generate_diagram, seminorm, tarski_vaught_check
from .signature import DEFAULT_GRID_STEP
from .structures import expand_by_constants, find_isomorphism, validate_structure
from .syntax import print_formula
from .ultra import Family, Ultrafilter, los_check, ultraproduct

DEFAULT_EPS = "1/100"


def _rational(text: str):
    try:
        return parse_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rational_list(text: str):
    return [_rational(t) for t in text.split(",") if t.strip()]


def _show(v) -> str:
    """Plain form for terminal output: ``0``, ``1/2``."""
    return str(v)


def _fmt(v) -> str:
    return "none" if v is None else format_fraction(v)


def _print_json(data) -> None:
    sys.stdout.write(dumps(data))


def _assignment(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    out = {}
    for part in text.split(","):
        name, sep, point = part.strip().partition("=")
        if not sep:
            raise CfolError(f"bad assignment {part!r}; expected name=point")
        out[name.strip()] = point.strip()
    return out


def _formula(args, sig, flag: str = "formula"):
    text = getattr(args, flag, None)
    path = getattr(args, f"{flag}_file", None)
    ctx = parse_context(getattr(args, "context", None))
    if path:
        return load_formula(path, sig, ctx)
    if text is None:
        raise CfolError(f"give --{flag} or --{flag}-file")
    return parse_formula(text, sig, ctx, infer_free=not ctx)


def _add_formula_args(p: argparse.ArgumentParser, flag: str = "formula") -> None:
    p.add_argument(f"--{flag}", help="formula text")
    p.add_argument(f"--{flag}-file", dest=f"{flag.replace('-', '_')}_file", help="file holding one formula")
    p.add_argument("--context", help="free variable sorts, e.g. x:S,y:S (default: inferred)")


def _family(args, sig, context=None) -> FormulaFamily:
    if args.family:
        return load_formulas(args.family, sig, context)
    return enumerate_formulas(
        sig,
        context or {},
        max_quantifier_depth=args.qdepth,
        max_connective_depth=args.cdepth,
        denominator=args.denominator,
    )


def _add_family_args(p: argparse.ArgumentParser, qdepth: int = 0, cdepth: int = 1) -> None:
    p.add_argument("--family", help="formula family file (default: generated)")
    p.add_argument("--qdepth", type=int, default=qdepth, help=f"generated family quantifier depth (default {qdepth})")
    p.add_argument("--cdepth", type=int, default=cdepth, help=f"generated family connective depth (default {cdepth})")
    p.add_argument("--denominator", type=int, default=2, help="generated family constant denominators (default 2)")


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    if args.signature:
        problems = load_signature(args.signature).validate()
    else:
        problems = [str(v) for v in validate_structure(load_structure(args.m))]
    if problems:
        for v in problems:
            print(v)
        return 1
    print("ok")
    return 0


def cmd_eval(args) -> int:
    m = load_structure(args.m)
    phi = _formula(args, m.signature)
    print(_show(formula_value(m, phi, _assignment(args.assign))))
    return 0


def cmd_certified_eval(args) -> int:
    m = load_structure(args.m)
    if args.mesh is not None:
        m = m.with_mesh(args.mesh)
    phi = _formula(args, m.signature)
    res = certified_eval(m, phi, _assignment(args.assign), args.step)
    out = {"value": format_fraction(res.value), "radius": _fmt(res.radius)}
    if res.interval is not None:
        out["interval"] = [format_fraction(v) for v in res.interval]
    _print_json(out)
    return 0


def cmd_diagram(args) -> int:
    m = load_structure(args.m)
    family = None
    if args.family:
        family = load_formulas(args.family, expand_by_constants(m).signature)
    _, sentences = generate_diagram(m, args.kind, family, max_connective_depth=args.cdepth, denominator=args.denominator)
    for phi in sentences:
        print(print_formula(phi))
    return 0


def cmd_tv_check(args) -> int:
    n, m = load_structure(args.n), load_structure(args.m)
    fam = load_formulas(args.family, m.signature)
    report = tarski_vaught_check(n, m, fam, args.witness_var)
    _print_json(
        {
            "ok": report.ok,
            "checked": report.checked,
            "failures": [
                {
                    "formula": print_formula(f.formula),
                    "parameters": f.parameters,
                    "inf_substructure": format_fraction(f.inf_small),
                    "inf_structure": format_fraction(f.inf_large),
                    "witness": f.witness,
                }
                for f in report.failures
            ],
        }
    )
    return 0


def _metric_json(space) -> dict:
    return {"points": list(space.points), "metric": [[format_fraction(v) for v in row] for row in space.matrix]}


def cmd_amalgam(args) -> int:
    a, b, c = load_metric(args.base), load_metric(args.b), load_metric(args.c)
    if args.mode == "path":
        out = {"metric": _metric_json(path_amalgam(a, b, c, args.cap))}
    else:
        res = diff_amalgam(a, b, c)
        out = {"metric": _metric_json(res.space), "notice": res.notice}
    _print_json(out)
    return 0


def cmd_build_urysohn(args) -> int:
    tracked = load_tracked(args.track) if args.track else farey_extensions()
    state = run_fraisse(args.stages, args.denominator, tracked, args.mode, args.max_base)
    save_structure(state.structure(), args.out)
    Path(args.log).write_text(log_to_csv(state.log), encoding="utf-8")
    print(f"points {len(state.points)}")
    print(f"defect {_show(state.defect())}")
    print(f"structure written to {args.out}")
    print(f"defect log written to {args.log}")
    return 0


def cmd_defect(args) -> int:
    u = load_metric(args.m)
    tracked = load_tracked(args.track) if args.track else farey_extensions()
    print(_show(extension_defect(u, tracked)))
    return 0


def _game(args) -> GameSpec:
    m, n = load_structure(args.m), load_structure(args.n)
    p = Path(args.delta)
    if p.suffix == ".json":
        data = read_json(p)
        variables = [tuple(v) for v in data.get("variables", [])] or None
        ctx = dict(variables) if variables else {}
        delta = [parse_formula(t, m.signature, ctx, infer_free=not ctx) for t in data.get("formulas", [])]
    else:
        variables = None
        delta = list(load_formulas(p, m.signature))
    return GameSpec(m, n, delta, args.eps, variables)


def cmd_ef(args) -> int:
    g = _game(args)
    tree = ef_solve(g)
    if args.action == "solve":
        print(describe_tree(tree))
        return 0
    transcript = ef_play(g, args.human, tree)
    if args.transcript:
        Path(args.transcript).write_text("\n".join(transcript) + "\n", encoding="utf-8")
    return 0


def _family_and_filter(args) -> tuple[Family, Ultrafilter]:
    names, structures = load_family_dir(args.family)
    fam = Family(structures, names)
    gen = args.gen
    if gen not in names:
        try:
            gen = names[int(gen)]
        except (ValueError, IndexError):
            raise CfolError(f"generator {args.gen!r} is neither a member name nor a position") from None
    return fam, Ultrafilter(names, gen)


def cmd_ultra(args) -> int:
    fam, u = _family_and_filter(args)
    up = ultraproduct(fam, u)
    data = up.structure.to_json()
    if args.out:
        write_json(data, args.out)
        report = find_isomorphism(up.structure, fam[u.generator])
        print(f"ultraproduct written to {args.out}; isomorphic to generator member: {report.kind == 'isomorphism'}")
    else:
        _print_json(data)
    return 0


def cmd_los(args) -> int:
    fam, u = _family_and_filter(args)
    sig = fam.signature
    if args.formulas:
        formulas = list(load_formulas(args.formulas, sig))
    else:
        rng = random.Random(args.seed)
        ctx = {"x": sig.sorts[0].name, "y": sig.sorts[0].name}
        formulas = [random_formula(rng, sig, ctx, max_quantifier_depth=args.depth) for _ in range(args.count)]
    report = los_check(fam, u, formulas, args.samples, args.seed)
    _print_json({"checked": report.checked, "discrepancies": [str(d) for d in report.discrepancies]})
    return 0 if report.ok else 1


def cmd_iso(args) -> int:
    m, n = load_structure(args.m), load_structure(args.n)
    report = back_and_forth_iso(m, n, args.depth) if args.method == "back-and-forth" else find_isomorphism(m, n)
    _print_json({"kind": report.kind, "witness": report.witness, "violations": report.violations})
    return 0


def _tuple(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _tuple_context(m, tup, sorts_text):
    if sorts_text:
        sorts = _tuple(sorts_text)
    else:
        sorts = []
        for p in tup:
            owners = [s for s, pts in m.carriers.items() if p in pts]
            if len(owners) != 1:
                raise CfolError(f"cannot infer the sort of {p!r}; pass --sorts")
            sorts.append(owners[0])
    if len(sorts) != len(tup):
        raise CfolError("--sorts and the tuple differ in length")
    return {f"x{i + 1}": s for i, s in enumerate(sorts)}


def cmd_type(args) -> int:
    m = load_structure(args.m)
    tup = _tuple(args.tuple)
    fam = _family(args, m.signature, _tuple_context(m, tup, args.sorts))
    tv = compute_type(m, tup, fam)
    _print_json({"tuple": tup, "type": {k: format_fraction(v) for k, v in tv.as_dict().items()}})
    return 0


def cmd_type_dist(args) -> int:
    m = load_structure(args.m)
    a, b = _tuple(args.a), _tuple(args.b)
    fam = _family(args, m.signature, _tuple_context(m, a, args.sorts))
    res = type_distance(m, a, b, fam)
    _print_json({"distance": format_fraction(res.value), "realizations": [list(t) for t in res.witness], "upper_bound": True})
    return 0


def cmd_qe_probe(args) -> int:
    m = load_structure(args.m)
    rep = qe_probe(m, args.depth, args.eta, args.eps, args.arity)
    _print_json(
        {
            "depth": args.depth,
            "eta": format_fraction(rep.eta),
            "eps": format_fraction(rep.eps),
            "pairs_examined": rep.pairs_examined,
            "witnesses": [
                {
                    "left": list(w.left),
                    "right": list(w.right),
                    "formula": print_formula(w.formula),
                    "left_value": format_fraction(w.left_value),
                    "right_value": format_fraction(w.right_value),
                }
                for w in rep.witnesses
            ],
        }
    )
    return 0


def cmd_zeroset(args) -> int:
    m = load_structure(args.m)
    phi = _formula(args, m.signature)
    zs = zero_set(m, phi, args.tol)
    _print_json({"variables": [v for v, _ in zs.variables], "points": [list(t) for t in zs.points]})
    return 0


def cmd_defprobe(args) -> int:
    _, structures = load_family_dir(args.family)
    sig = structures[0].signature
    phi = load_formula(args.phi, sig, parse_context(args.context))
    cands = load_formulas(args.candidates, sig) if args.candidates else None
    rep = definability_probe(structures, phi, args.eps_list, cands, args.step)
    _print_json(
        {
            "formula": print_formula(phi),
            "empty_zero_set_members": rep.empty_members,
            "results": [
                {
                    "eps": format_fraction(e.eps),
                    "witness": None if e.witness is None else print_formula(e.witness),
                    "delta": _fmt(e.delta) if e.delta is not None else None,
                    "candidates_tried": e.candidates_tried,
                    "verdict": "witness" if e.found else "no witness in searched family",
                }
                for e in rep.entries
            ],
        }
    )
    return 0


def cmd_seminorm(args) -> int:
    if args.family:
        _, structures = load_family_dir(args.family)
    else:
        structures = [load_structure(p) for p in args.m]
    if not structures:
        raise CfolError("give --family or at least one --m")
    phi = _formula(args, structures[0].signature)
    print(_show(seminorm(phi, structures)))
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfol", description="Exact continuous first-order logic on finite metric structures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a structure or signature file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--m", help="structure file")
    g.add_argument("--signature", help="signature file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="exact value of a formula")
    p.add_argument("--m", required=True)
    _add_formula_args(p)
    p.add_argument("--assign", help="assignment, e.g. x=a,y=b")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("certified-eval", help="value plus error radius on a declared net")
    p.add_argument("--m", required=True)
    _add_formula_args(p)
    p.add_argument("--assign")
    p.add_argument("--mesh", type=_rational, help="override the structure's net mesh")
    p.add_argument("--step", type=_rational, default=DEFAULT_GRID_STEP, help="modulus grid step (default 1/64)")
    p.set_defaults(func=cmd_certified_eval)

    p = sub.add_parser("diagram", help="atomic or elementary diagram sentences")
    p.add_argument("--m", required=True)
    p.add_argument("--kind", choices=("atomic", "elementary"), default="atomic")
    p.add_argument("--family", help="sentence family over the expanded language")
    p.add_argument("--cdepth", type=int, default=1)
    p.add_argument("--denominator", type=int, default=2)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("tv-check", help="Tarski-Vaught test for a substructure")
    p.add_argument("--n", required=True, help="substructure file")
    p.add_argument("--m", required=True, help="structure file")
    p.add_argument("--family", required=True, help="formula family file")
    p.add_argument("--witness-var", default="y")
    p.set_defaults(func=cmd_tv_check)

    p = sub.add_parser("amalgam", help="amalgamate two extensions of a base space")
    p.add_argument("--base", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--mode", choices=("path", "diff"), default="path")
    p.add_argument("--cap", type=_rational, help="truncate path-amalgam distances")
    p.set_defaults(func=cmd_amalgam)

    p = sub.add_parser("build-urysohn", help="finite Urysohn approximant with a defect log")
    p.add_argument("--denominator", type=int, default=4)
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--track", help="tracked extensions file (default: Farey order 5)")
    p.add_argument("--mode", choices=("diff", "path"), default="diff")
    p.add_argument("--max-base", type=int, default=1)
    p.add_argument("--out", default="urysohn.json")
    p.add_argument("--log", default="urysohn_defect.csv")
    p.set_defaults(func=cmd_build_urysohn)

    p = sub.add_parser("defect", help="extension defect of a metric space")
    p.add_argument("--m", required=True)
    p.add_argument("--track")
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("ef", help="Ehrenfeucht-Fraisse games")
    p.add_argument("action", choices=("solve", "play"))
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--delta", required=True, help="formula list file")
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--human", choices=("I", "II"), default="I")
    p.add_argument("--transcript", help="write the transcript here")
    p.set_defaults(func=cmd_ef)

    p = sub.add_parser("ultra", help="principal ultraproduct of a family directory")
    p.add_argument("--family", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ultra)

    p = sub.add_parser("los", help="check Los's theorem on a family")
    p.add_argument("--family", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--formulas")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_los)

    p = sub.add_parser("iso", help="isomorphism search")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--method", choices=("search", "back-and-forth"), default="search")
    p.add_argument("--depth", type=int, default=1)
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("type", help="type vector of a tuple")
    p.add_argument("--m", required=True)
    p.add_argument("--tuple", required=True)
    p.add_argument("--sorts")
    _add_family_args(p)
    p.set_defaults(func=cmd_type)

    p = sub.add_parser("type-dist", help="distance between the types of two tuples")
    p.add_argument("--m", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--sorts")
    _add_family_args(p)
    p.set_defaults(func=cmd_type_dist)

    p = sub.add_parser("qe-probe", help="search for witnesses against quantifier elimination")
    p.add_argument("--m", required=True)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--eta", type=_rational, default=_rational("0"))
    p.add_argument("--eps", type=_rational, default=_rational(DEFAULT_EPS))
    p.add_argument("--arity", type=int, default=1)
    p.set_defaults(func=cmd_qe_probe)

    p = sub.add_parser("zeroset", help="zero set of a formula")
    p.add_argument("--m", required=True)
    _add_formula_args(p)
    p.add_argument("--tol", type=_rational, default=_rational("0"))
    p.set_defaults(func=cmd_zeroset)

    p = sub.add_parser("defprobe", help="definability evidence for a zero set")
    p.add_argument("--family", required=True, help="directory of structures")
    p.add_argument("--phi", required=True, help="formula file")
    p.add_argument("--context")
    p.add_argument("--eps-list", type=_rational_list, required=True)
    p.add_argument("--candidates")
    p.add_argument("--step", type=_rational, default=DEFAULT_GRID_STEP)
    p.set_defaults(func=cmd_defprobe)

    p = sub.add_parser("seminorm", help="max |phi| over a family of structures")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--family", help="directory of structures")
    g.add_argument("--m", action="append", help="structure file (repeatable)")
    _add_formula_args(p)
    p.set_defaults(func=cmd_seminorm)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CfolError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
