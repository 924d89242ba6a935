"""Command line entry point: ``treelogic <subcommand> ...``.

Exit codes: 0 success or SAT, 1 UNSAT or no model, 2 usage error, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import Sequence

from .formula_core import (NAV_KINDS, Formula, FormulaError, Signature, classify, free_vars,
                           has_counting, parse, pretty)
from .tree_model import Tree, TreeError, load, save
from .verdict import Outcome

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_TIMEOUT = 0, 1, 2, 3

_SYM = r"[A-Za-z_][A-Za-z0-9_']*"
_NON_SYMBOLS = {"and", "or", "not", "implies", "exists", "forall", "=", *NAV_KINDS}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- inputs

def _read(arg: str) -> str:
    """Contents of the file arg, or arg itself when no such file exists."""
    if arg == "-":
        return sys.stdin.read()
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read()
    return arg


def infer_signature(text: str) -> Signature:
    """Unary and binary symbols in order of first use in formula text."""
    unary: list[str] = []
    binary: list[str] = []
    for m in re.finditer(rf"\(\s*({_SYM})\s+([xy])(\s+[xy])?\s*\)", text):
        name = m.group(1)
        if name in _NON_SYMBOLS:
            continue
        target = binary if m.group(3) else unary
        if name not in target:
            target.append(name)
    return Signature(tuple(unary), tuple(binary))


def _tree_symbols(text: str) -> tuple[list[str], list[str]]:
    unary: list[str] = []
    binary: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("edge "):
            parts = line.split()
            if len(parts) > 1 and parts[1] not in binary:
                binary.append(parts[1])
        elif ":" in line and not line.startswith("#"):
            for s in line.partition(":")[2].split():
                if s not in unary:
                    unary.append(s)
    return unary, binary


def _signature(args, formula_text: str = "", tree_text: str = "") -> Signature:
    if getattr(args, "sig", None):
        return Signature.from_text(_read(args.sig))
    sig = infer_signature(formula_text)
    if tree_text:
        u, b = _tree_symbols(tree_text)
        sig = sig.extend([s for s in u if s not in sig.unary], [r for r in b if r not in sig.binary])
    return sig


def _formula(args, tree_text: str = "") -> tuple[Formula, Signature]:
    if not args.formula:
        raise UsageError("--formula is required")
    text = _read(args.formula)
    sig = _signature(args, text, tree_text)
    return parse(text, sig), sig


def _tree(args, sig: Signature) -> Tree:
    if not args.tree:
        raise UsageError("--tree is required")
    return load(_read(args.tree), sig)


# ---------------------------------------------------------------- output

def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text.rstrip("\n"))


def _verdict_exit(outcome: Outcome) -> int:
    if outcome is Outcome.SAT:
        return EXIT_OK
    if outcome is Outcome.TIMEOUT:
        return EXIT_TIMEOUT
    return EXIT_NEGATIVE


def _verdict_text(v) -> str:
    if v.sat:
        return f"{v.outcome}\n{save(v.model)}"
    return str(v.outcome)


def _warn_sound(args) -> None:
    if args.mode == "sound":
        print("warning: sound mode uses the theoretical bounds and is unlikely to finish; "
              "bounded mode is the default", file=sys.stderr)


# ---------------------------------------------------------------- subcommands

def cmd_parse(args) -> int:
    f, sig = _formula(args)
    _emit(args, {"formula": pretty(f), "class": classify(f), "signature": sig.to_text()},
          f"{pretty(f)}\nclass: {classify(f)}")
    return EXIT_OK


def _normal_form(f: Formula, sig: Signature, logic: str | None):
    from .normalizer import to_nf_c2, to_nf_fo2

    logic = logic or ("c2" if has_counting(f) else "fo2")
    return logic, (to_nf_c2 if logic == "c2" else to_nf_fo2)(f, sig)


def cmd_nf(args) -> int:
    f, sig = _formula(args)
    logic, (nf, sig2) = _normal_form(f, sig, args.logic)
    out = pretty(nf.to_formula())
    _emit(args, {"logic": logic, "normal_form": out, "signature": sig2.to_text(), "m": nf.m},
          f"{out}\n{sig2.to_text()}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .semantics import model_check

    tree_text = _read(args.tree) if args.tree else ""
    f, sig = _formula(args, tree_text)
    value = model_check(_tree(args, sig), f)
    _emit(args, {"value": value}, "true" if value else "false")
    return EXIT_OK


def cmd_sat_fo2(args) -> int:
    from .sat_fo2bin import Bounds, sat_fo2bin, sound_bounds

    f, sig = _formula(args)
    _, (nf, _) = _normal_form(f, sig, "fo2")
    _warn_sound(args)
    if args.mode == "sound":
        bounds = sound_bounds(nf)
    else:
        bounds = Bounds(args.max_depth, args.max_degree, args.max_fset)
    v = sat_fo2bin(nf, bounds, timeout=args.timeout_secs)
    _emit(args, v.to_dict(), _verdict_text(v))
    return _verdict_exit(v.outcome)


def cmd_sat_c2(args) -> int:
    from .sat_c2 import C2Bounds, c2_bounds, sat_c2

    f, sig = _formula(args)
    _, (nf, _) = _normal_form(f, sig, "c2")
    _warn_sound(args)
    bounds = c2_bounds(nf) if args.mode == "sound" else C2Bounds(args.max_depth, args.max_degree)
    v = sat_c2(nf, bounds, timeout=args.timeout_secs)
    _emit(args, v.to_dict(), _verdict_text(v))
    return _verdict_exit(v.outcome)


def cmd_translate(args) -> int:
    from .c2_to_fo2 import translate
    from .oracle import enumerate_frames, enumerate_labelings
    from .semantics import model_check

    args.formula = args.input
    f, sig = _formula(args)
    g = translate(f)
    payload: dict = {"translation": pretty(g)}
    lines = [pretty(g)]
    status = EXIT_OK
    if args.check_upto:
        if free_vars(f):
            raise UsageError("--check-upto needs a sentence")
        trees = bad = 0
        for n in range(1, args.check_upto + 1):
            for frame in enumerate_frames(n):
                for t in enumerate_labelings(frame, sig):
                    trees += 1
                    if model_check(t, f) != model_check(t, g):
                        bad += 1
        payload["check"] = {"max_nodes": args.check_upto, "trees": trees, "disagreements": bad}
        lines.append(f"checked {trees} trees up to {args.check_upto} nodes: {bad} disagreements")
        status = EXIT_OK if bad == 0 else EXIT_NEGATIVE
    _emit(args, payload, "\n".join(lines))
    return status


def cmd_oracle(args) -> int:
    from .oracle import oracle_sat

    f, sig = _formula(args)
    r = oracle_sat(f, sig, args.max_nodes, budget=args.budget)
    payload = {"sat": r.sat, "model": save(r.model) if r.sat else None, "checked": r.checked,
               "max_nodes": r.max_nodes}
    text = f"SAT\n{save(r.model)}" if r.sat else str(r)
    _emit(args, payload, text)
    return EXIT_OK if r.sat else EXIT_NEGATIVE


def cmd_diff(args) -> int:
    from .oracle import SUITES, DiffConfig, differential

    suites = SUITES if args.suite == "all" else tuple(s.strip() for s in args.suite.split(","))
    for s in suites:
        if s not in SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from all, {', '.join(SUITES)}")
    cfg = DiffConfig(suites=suites, seed=args.seed, max_nodes=args.max_nodes, cases=args.cases,
                     jobs=args.jobs, timeout=args.timeout_secs or 30.0)
    report = differential(cfg)
    _emit(args, report.to_dict(), report.to_text())
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def shrink_model(t: Tree, nf) -> Tree:
    """Apply vertical then horizontal cuts until neither applies."""
    from .sat_c2 import cut_model, horizontal_cut, horizontal_cut_candidates, marking
    from .semantics import full_type, reduce

    changed = True
    while changed:
        changed = False
        red = [reduce(nf, full_type(t, nf.C, v)) for v in range(t.n)]
        for u in range(t.n):
            v = next((v for v in range(u + 1, t.subtree_end[u]) if red[v] == red[u]), None)
            if v is not None:
                t, changed = cut_model(t, u, v, nf), True
                break
        if changed:
            continue
        for p in range(t.n):
            cands = horizontal_cut_candidates(t, p, nf)
            if cands:
                i, j = cands[0]
                t, changed = horizontal_cut(t, p, i, j, marking(t, p, nf), nf), True
                break
    return t


def cmd_shrink(args) -> int:
    from .normalizer import as_nf_c2
    from .semantics import model_check

    tree_text = _read(args.tree) if args.tree else ""
    f, sig = _formula(args, tree_text)
    nf = as_nf_c2(f, sig)
    if nf is None:
        raise UsageError("shrink needs a formula already in C2 normal form (see the nf subcommand)")
    t = _tree(args, sig)
    if not model_check(t, f):
        print("warning: the input tree is not a model; cuts need not preserve anything",
              file=sys.stderr)
    small = shrink_model(t, nf)
    _emit(args, {"nodes_before": t.n, "nodes_after": small.n, "tree": save(small)}, save(small))
    return EXIT_OK


def cmd_bounds(args) -> int:
    f, sig = _formula(args)
    logic, (nf, _) = _normal_form(f, sig, args.logic)
    if logic == "fo2":
        from .sat_fo2bin import alpha_size, bound_f, bound_fset

        payload = {"logic": "fo2", "m": nf.m, "alpha": alpha_size(nf), "f": bound_f(nf),
                   "fset": bound_fset(nf), "max_depth": bound_f(nf), "max_degree": bound_f(nf)}
    else:
        from .sat_c2 import alpha_size, max_degree_bound, max_depth_bound

        n = alpha_size(nf)
        payload = {"logic": "c2", "m": nf.m, "C": nf.C, "alpha": n,
                   "max_depth": max_depth_bound(nf.C, nf.m, n), "max_degree": max_degree_bound(nf.C, n)}
    text = "\n".join(f"{k}: {v}" for k, v in payload.items())
    # big integers go out as strings so JSON readers keep them exact
    _emit(args, {k: (str(v) if isinstance(v, int) and v > 2**53 else v) for k, v in payload.items()},
          text)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treelogic", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--sig", help="signature file (default: inferred from the formula)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=_positive_int, default=1)
    common.add_argument("--timeout-secs", type=float, default=None,
                        help="default from TREELOGIC_TIMEOUT_SECS")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("parse", cmd_parse, "parse and pretty-print a formula")
    sp.add_argument("--formula", required=True)
    sp = add("nf", cmd_nf, "normal form and extended signature")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--logic", choices=("fo2", "c2"))
    sp = add("check", cmd_check, "model check a formula on a tree")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--tree", required=True)
    for name, fn in (("sat-fo2", cmd_sat_fo2), ("sat-c2", cmd_sat_c2)):
        sp = add(name, fn, f"satisfiability search ({name[4:].upper()})")
        sp.add_argument("--formula", required=True)
        sp.add_argument("--max-depth", type=_positive_int, default=4)
        sp.add_argument("--max-degree", type=_positive_int, default=4)
        if name == "sat-fo2":
            sp.add_argument("--max-fset", type=_positive_int, default=4)
        sp.add_argument("--mode", choices=("bounded", "sound"), default="bounded")
    sp = add("translate", cmd_translate, "remove counting quantifiers")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--check-upto", type=_positive_int, default=0)
    sp = add("oracle", cmd_oracle, "brute-force model search")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--max-nodes", type=_positive_int, default=4)
    sp.add_argument("--budget", type=int, default=10**6)
    sp = add("diff", cmd_diff, "differential tests against the oracle")
    sp.add_argument("--suite", default="all")
    sp.add_argument("--max-nodes", type=_positive_int, default=4)
    sp.add_argument("--cases", type=_positive_int, default=20)
    sp = add("shrink", cmd_shrink, "cut a C2 model down with vertical and horizontal cuts")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--tree", required=True)
    sp = add("bounds", cmd_bounds, "theoretical search bounds")
    sp.add_argument("--formula", required=True)
    sp.add_argument("--logic", choices=("fo2", "c2"))
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    from .c2_to_fo2 import TranslationError
    from .oracle import BudgetExceeded
    from .sat_c2 import C2Error
    from .sat_fo2bin import FO2Error
    from .semantics import SemanticsError

    try:
        return args.fn(args)
    except (UsageError, FormulaError, TreeError, TranslationError, C2Error, FO2Error,
            SemanticsError, BudgetExceeded, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
