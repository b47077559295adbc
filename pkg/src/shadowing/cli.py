"""Command-line interface.

Exit codes: 0 property holds / success, 1 property fails (a witness is
written), 2 usage or validation error, 3 search budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import analyze, construct, pseudo, zoo
from .core import ContinuityClass, SystemMap, as_fraction, format_fraction, orbit_lasso, orbit_nonaut
from .documents import (
    DocumentError,
    load_system,
    pseudo_orbit_from_document,
    read_json,
    save_results,
    system_to_document,
    table_to_csv,
    write_json,
)

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
PROPERTIES = ("shadow", "struct", "fgpotp", "cgpotp", "usc")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        value = as_fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational p/q") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def _cls(text: str) -> ContinuityClass:
    try:
        return ContinuityClass.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _eps_grid(text: str, space) -> list:
    if text == "auto":
        return pseudo.epsilon_probes(space)
    return [_rational(t) for t in text.split(",") if t.strip()]


def _autonomous(loaded) -> SystemMap:
    if not loaded.autonomous:
        raise UsageError("this command needs a single-map system ('map', not 'maps')")
    return loaded.system


def _lasso_witness(prop, eps, dl, labels, pre, per, g=None) -> dict:
    doc = {
        "property": prop,
        "epsilon": format_fraction(eps),
        "delta": format_fraction(dl),
        "outcome": "FAILS",
        "preperiod": [labels[i] for i in pre],
        "period": [labels[i] for i in per],
    }
    if g is not None:
        doc["g"] = [labels[i] for i in g.image]
    return doc


def cmd_validate(args) -> int:
    loaded = load_system(args.system)
    kind = "map" if loaded.autonomous else "map sequence"
    print(f"ok: {loaded.space.n} points, {kind}, class {loaded.cls}")
    return EXIT_OK


def cmd_check(args) -> int:
    loaded = load_system(args.system)
    labels = loaded.space.labels
    cls = args.cls or loaded.cls
    eps, dl = args.eps, args.delta
    witness = None
    if args.property == "shadow":
        if loaded.autonomous:
            verdict = pseudo.decide_shadowing(loaded.system, eps, dl)
            holds = verdict.holds
            if not holds:
                witness = pseudo.witness_document(verdict, labels)
                witness["property"] = "shadow"
        else:
            res = analyze.structural_check_nonaut(loaded.system, eps, dl)
            holds = res.holds
            if not holds:
                witness = {
                    "property": "shadow", "epsilon": format_fraction(eps), "delta": format_fraction(dl),
                    "outcome": "FAILS", "prefix": [labels[i] for i in res.witness.preperiod],
                }
    else:
        f = _autonomous(loaded)
        if args.property == "struct":
            res = analyze.structural_check(f, eps, dl, cls)
            if not res.holds:
                g, x = res.witness
                witness = _lasso_witness("struct", eps, dl, labels, *orbit_lasso(g, x), g)
        elif args.property == "fgpotp":
            res = analyze.fgpotp_check(f, eps, dl)
            if not res.holds:
                o = res.witness.orbit
                witness = _lasso_witness("fgpotp", eps, dl, labels, o.preperiod, o.period)
        elif args.property == "cgpotp":
            res = analyze.cgpotp_check(f, eps, dl, cls)
            if not res.holds:
                fpo, g = res.witness
                witness = _lasso_witness("cgpotp", eps, dl, labels, fpo.orbit.preperiod, fpo.orbit.period, g)
        else:
            res = analyze.usc_check(f, eps, dl, cls)
            if not res.holds:
                g, x = res.witness
                witness = _lasso_witness("usc", eps, dl, labels, *orbit_lasso(g, x), g)
        holds = res.holds
    print(f"{args.property} eps={format_fraction(eps)} delta={format_fraction(dl)}: {'HOLDS' if holds else 'FAILS'}")
    if witness is not None:
        out = args.witness or Path(f"{Path(args.system).stem}.{args.property}.witness.json")
        write_json(witness, out)
        print(f"witness written to {out}")
        return EXIT_FALSE
    return EXIT_OK


def cmd_replay(args) -> int:
    """Recompute survivors for a witness; exit 1 when it is confirmed unshadowable."""
    loaded = load_system(args.system)
    doc = read_json(args.witness)
    po = pseudo_orbit_from_document(doc, loaded.space)
    eps = as_fraction(doc["epsilon"])
    labels = loaded.space.labels
    if po.is_finite:
        if loaded.autonomous:
            trace = [sorted(t) for t in pseudo.shadow_survivors(loaded.system, po.preperiod, eps)]
            shadowed = bool(trace[-1])
        else:
            d = loaded.space.d
            shadowed = any(
                all(d(y, x) < eps for y, x in zip(orbit_nonaut(loaded.system, z, len(po) - 1), po.preperiod))
                for z in range(loaded.space.n)
            )
            trace = []
        for i, t in enumerate(trace):
            print(f"T_{i} = {{{', '.join(labels[p] for p in t)}}}")
    else:
        shadowed = analyze.lasso_shadowed(_autonomous(loaded), po.preperiod, po.period, eps)
    print("shadowed" if shadowed else "not shadowed")
    return EXIT_OK if shadowed else EXIT_FALSE


def cmd_modulus(args) -> int:
    loaded = load_system(args.system)
    f = _autonomous(loaded)
    table = analyze.modulus_table(f, _eps_grid(args.eps_grid, loaded.space), args.cls or loaded.cls, jobs=args.jobs)
    if args.output:
        save_results(table, args.output)
    else:
        sys.stdout.write(table_to_csv(table))
    return EXIT_OK


def cmd_equiv(args) -> int:
    loaded = load_system(args.system)
    f = _autonomous(loaded)
    report = analyze.equivalence_experiment(f, _eps_grid(args.eps_grid, loaded.space), args.cls or loaded.cls,
                                            jobs=args.jobs)
    doc = report.to_document()
    if args.output:
        write_json(doc, args.output)
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK if report.ok else EXIT_FALSE


def cmd_realize(args) -> int:
    loaded = load_system(args.system)
    po = pseudo_orbit_from_document(read_json(args.pseudo_orbit), loaded.space)
    if args.delta is not None:
        po = pseudo.PseudoOrbit(po.preperiod, po.period, args.delta)
    mode = args.mode
    cls = args.cls or loaded.cls
    if mode == "nonauto":
        result = construct.realize_nonautonomous(loaded.system, po)
        out_cls = loaded.cls
    elif mode == "auto":
        result = construct.realize_autonomous(_autonomous(loaded), po)
        out_cls = loaded.cls
    elif mode.startswith("continuous-prefix:"):
        N = int(mode.split(":", 1)[1])
        if po.delta is None:
            raise UsageError("continuous-prefix mode needs a delta (in the file or via --delta)")
        result = construct.realize_prefix_continuous(_autonomous(loaded), po, N, cls, po.delta)
        out_cls = cls
    else:
        raise UsageError(f"unknown mode {mode!r}")
    doc = system_to_document(result.system, out_cls, start=loaded.space.labels[result.start],
                             rho_bound=format_fraction(result.rho_bound))
    if args.output:
        write_json(doc, args.output)
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_search(args) -> int:
    systems = []
    for spec in args.family.split(";"):
        if spec.strip():
            systems.append((spec.strip(), zoo.build_zoo(spec)))
    report = analyze.separation_search(systems, args.cls, args.budget)
    if args.output:
        write_json(report, args.output)
    else:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_zoo(args) -> int:
    if args.action == "list":
        for name, text in zoo.FAMILIES.items():
            print(f"{name:16s} {text}")
        return EXIT_OK
    if not args.spec:
        raise UsageError("zoo build needs a spec, e.g. tent:m=16")
    spec = zoo.ZooSpec.parse(args.spec)
    f = zoo.build_zoo(spec)
    doc = system_to_document(f, zoo_spec=str(spec))
    if args.output:
        write_json(doc, args.output)
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shadowing", description="Exact shadowing checks on finite dynamical systems.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="validate a system document")
    s.add_argument("system")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("check", help="decide one property at (eps, delta)")
    s.add_argument("system")
    s.add_argument("--eps", type=_rational, required=True)
    s.add_argument("--delta", type=_rational, required=True)
    s.add_argument("--property", choices=PROPERTIES, default="shadow")
    s.add_argument("--class", dest="cls", type=_cls, default=None)
    s.add_argument("--witness", help="where to write the witness when the property fails")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("replay", help="replay a witness written by check")
    s.add_argument("system")
    s.add_argument("--witness", required=True)
    s.set_defaults(func=cmd_replay)

    for name, func, helptext in (("modulus", cmd_modulus, "threshold table as CSV"),
                                 ("equiv", cmd_equiv, "implication report as JSON")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("system")
        s.add_argument("--eps-grid", default="auto", help="comma-separated rationals, or 'auto'")
        s.add_argument("--class", dest="cls", type=_cls, default=None)
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("-o", "--output")
        s.set_defaults(func=func)

    s = sub.add_parser("realize", help="realize a pseudo-orbit as an orbit of a nearby system")
    s.add_argument("system")
    s.add_argument("--pseudo-orbit", required=True)
    s.add_argument("--mode", default="auto", help="auto | nonauto | continuous-prefix:N")
    s.add_argument("--class", dest="cls", type=_cls, default=None)
    s.add_argument("--delta", type=_rational, default=None)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_realize)

    s = sub.add_parser("search-separation", help="look for CGPOTP-but-not-FGPOTP candidates")
    s.add_argument("--family", required=True, help="zoo specs separated by ';'")
    s.add_argument("--class", dest="cls", type=_cls, default=ContinuityClass.parse("lip:1"))
    s.add_argument("--budget", type=int, default=1000)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("zoo", help="list or build zoo systems")
    s.add_argument("action", choices=("list", "build"))
    s.add_argument("spec", nargs="?")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_zoo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except pseudo.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DocumentError, UsageError, construct.PreconditionError, construct.Infeasible,
            ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
