"""Brute-force ground truth over small trees."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

from .formula_core import (And, Binary, Const, Count, Eq, Exists, Forall, Formula, Implies, Nav, Not, Or,
                           Signature, Unary)
from .semantics import model_check
from .tree_model import Tree


class BudgetExceeded(Exception):
    pass


@lru_cache(maxsize=None)
def _shapes(n: int) -> tuple[tuple, ...]:
    """Ordered forests with n nodes as nested tuples, canonical order."""
    if n == 0:
        return ((),)
    out = []
    # first tree has k nodes (root + k-1 below), rest is a forest of n-k nodes
    for k in range(1, n + 1):
        for first in _shapes(k - 1):
            for rest in _shapes(n - k):
                out.append((first,) + rest)
    return tuple(out)


def _parents_of(forest: tuple) -> list[int]:
    parents = [-1]

    def go(f: tuple, p: int) -> None:
        for t in f:
            parents.append(p)
            go(t, len(parents) - 1)

    go(forest, 0)
    return parents


def enumerate_frames(max_nodes: int, min_nodes: int = 1) -> Iterator[Tree]:
    """Every unlabeled ordered tree with min_nodes..max_nodes nodes, by size."""
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    for n in range(max(1, min_nodes), max_nodes + 1):
        for forest in _shapes(n - 1):
            yield Tree(_parents_of(forest))


def count_labelings(frame: Tree, sig: Signature) -> int:
    n = frame.n
    return 2 ** (len(sig.unary) * n + len(sig.binary) * n * n)


def enumerate_labelings(frame: Tree, sig: Signature, budget: int | None = None) -> Iterator[Tree]:
    """All labelings of frame over sig, in big-endian bit order.

    Raises BudgetExceeded up front when the labeling count exceeds budget.
    """
    total = count_labelings(frame, sig)
    if budget is not None and total > budget:
        raise BudgetExceeded(f"{total} labelings exceed the budget of {budget}")
    n = frame.n
    pairs = [(a, b) for a in range(n) for b in range(n)]
    unary_choices = list(itertools.product(*[list(_subsets(sig.unary)) for _ in range(n)]))
    edge_bits = len(sig.binary) * len(pairs)
    for labels in unary_choices:
        for bits in itertools.product((False, True), repeat=edge_bits):
            edges = {r: [pairs[j] for j in range(len(pairs)) if bits[i * len(pairs) + j]]
                     for i, r in enumerate(sig.binary)}
            yield Tree(frame.parents, labels, edges, sig)


def _subsets(symbols: tuple[str, ...]) -> Iterator[frozenset]:
    for bits in itertools.product((False, True), repeat=len(symbols)):
        yield frozenset(s for s, b in zip(symbols, bits) if b)


@dataclass(frozen=True)
class OracleResult:
    sat: bool
    model: Tree | None
    checked: int
    max_nodes: int

    def __str__(self) -> str:
        return "SAT" if self.sat else f"NO_MODEL_UP_TO_{self.max_nodes}"


def oracle_sat(f: Formula, sig: Signature, max_nodes: int, budget: int | None = 10 ** 6,
               max_depth: int | None = None, max_degree: int | None = None) -> OracleResult:
    """First model of f with at most max_nodes nodes, or none.

    budget caps the total number of labeled trees examined.
    """
    checked = 0
    for frame in enumerate_frames(max_nodes):
        if max_depth is not None and frame.height() > max_depth:
            continue
        if max_degree is not None and frame.max_degree() > max_degree:
            continue
        for t in enumerate_labelings(frame, sig):
            checked += 1
            if budget is not None and checked > budget:
                raise BudgetExceeded(f"more than {budget} labeled trees needed")
            if model_check(t, f):
                return OracleResult(True, t, checked, max_nodes)
    return OracleResult(False, None, checked, max_nodes)


def frame_satisfiable(f: Formula, frame: Tree, sig: Signature, budget: int | None = None) -> bool:
    """Some labeling of frame over sig satisfies f (exhaustive)."""
    return any(model_check(t, f) for t in enumerate_labelings(frame, sig, budget))


def ground(f: Formula, frame: Tree, sig: Signature):
    """z3 boolean expression over labeling variables, true iff the labeled frame satisfies f.

    Variables are named "A@i" for unary A at node i and "R@i,j" for binary R.
    """
    import z3

    n = frame.n
    nav = frame.nav_matrices
    unary = {(s, i): z3.Bool(f"{s}@{i}") for s in sig.unary for i in range(n)}
    binary = {(r, i, j): z3.Bool(f"{r}@{i},{j}") for r in sig.binary for i in range(n) for j in range(n)}
    memo: dict = {}

    def val(env: dict, v: str) -> int:
        return env[v]

    def go(g: Formula, xv: int, yv: int):
        key = (id(g), xv, yv)
        if key in memo:
            return memo[key][1]
        env = {"x": xv, "y": yv}
        if isinstance(g, Const):
            r = z3.BoolVal(g.value)
        elif isinstance(g, Unary):
            r = unary[(g.sym, val(env, g.var))]
        elif isinstance(g, Binary):
            r = binary[(g.sym, val(env, g.v1), val(env, g.v2))]
        elif isinstance(g, Nav):
            r = z3.BoolVal(bool(nav[g.kind][val(env, g.v1), val(env, g.v2)]))
        elif isinstance(g, Eq):
            r = z3.BoolVal(val(env, g.v1) == val(env, g.v2))
        elif isinstance(g, Not):
            r = z3.Not(go(g.arg, xv, yv))
        elif isinstance(g, And):
            r = z3.And(go(g.left, xv, yv), go(g.right, xv, yv))
        elif isinstance(g, Or):
            r = z3.Or(go(g.left, xv, yv), go(g.right, xv, yv))
        elif isinstance(g, Implies):
            r = z3.Implies(go(g.left, xv, yv), go(g.right, xv, yv))
        else:
            parts = [go(g.body, w, yv) if g.var == "x" else go(g.body, xv, w) for w in range(n)]
            if isinstance(g, Exists):
                r = z3.Or(*parts)
            elif isinstance(g, Forall):
                r = z3.And(*parts)
            else:
                lo = z3.AtLeast(*parts, g.n) if g.n > 0 else z3.BoolVal(True)
                hi = z3.AtMost(*parts, g.n)
                r = lo if g.op == ">=" else hi if g.op == "<=" else z3.And(lo, hi)
        memo[key] = (g, r)
        return r

    return go(f, 0, 0)


def frame_satisfiable_sat(f: Formula, frame: Tree, sig: Signature) -> bool:
    """Some labeling of frame over sig satisfies f, decided by a SAT solver."""
    import z3

    solver = z3.Solver()
    solver.add(ground(f, frame, sig))
    return solver.check() == z3.sat


# ---------------------------------------------------------------- differential reports

@dataclass
class Disagreement:
    suite: str
    description: str
    reproducer: str


@dataclass
class Report:
    seed: int
    suites: dict[str, int] = field(default_factory=dict)
    disagreements: list[Disagreement] = field(default_factory=list)
    truncated: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "suites": dict(sorted(self.suites.items())),
            "disagreements": [d.__dict__ for d in self.disagreements],
            "truncated": list(self.truncated),
            "ok": self.ok,
        }

    def to_text(self) -> str:
        lines = [f"seed {self.seed}"]
        for name, cnt in sorted(self.suites.items()):
            bad = sum(1 for d in self.disagreements if d.suite == name)
            lines.append(f"{name}: {cnt} checks, {bad} disagreements")
        for d in self.disagreements:
            lines.append(f"  [{d.suite}] {d.description}")
            lines.append("    " + d.reproducer.replace("\n", "\n    "))
        for t in self.truncated:
            lines.append(f"truncated: {t}")
        return "\n".join(lines)


# ---------------------------------------------------------------- random corpora

_NAV_KINDS = ("child", "descendant", "next", "following")


def random_tree(rng: random.Random, n: int, sig: Signature, p_label: float = 0.5) -> Tree:
    """Random ordered tree with n nodes, preorder-numbered, random unary labels."""
    parents = [-1]
    stack = [0]
    for v in range(1, n):
        # attach to a node on the rightmost path so numbering stays preorder
        del stack[rng.randint(1, len(stack)):]
        parents.append(stack[-1])
        stack.append(v)
    labels = [{s for s in sig.unary if rng.random() < p_label} for _ in range(n)]
    return Tree(parents, labels, None, Signature(sig.unary, ()))


def random_qf(rng: random.Random, sig: Signature, depth: int, nav: bool = True,
              binary: bool = True) -> Formula:
    """Random quantifier-free formula in x and y."""
    if depth <= 0 or rng.random() < 0.3:
        choices = ["unary"] * 3 if sig.unary else []
        if nav:
            choices += ["nav"] * 2 + ["eq"]
        if binary and sig.binary:
            choices += ["binary"]
        if not choices:
            return Const(rng.random() < 0.5)
        kind = rng.choice(choices)
        if kind == "unary":
            return Unary(rng.choice(sig.unary), rng.choice("xy"))
        if kind == "binary":
            v = rng.choice(("xy", "yx", "xx", "yy"))
            return Binary(rng.choice(sig.binary), v[0], v[1])
        if kind == "eq":
            return Eq("x", "y")
        v = rng.choice(("xy", "yx"))
        return Nav(rng.choice(_NAV_KINDS), v[0], v[1])
    op = rng.choice(("and", "or", "not", "and", "or"))
    if op == "not":
        return Not(random_qf(rng, sig, depth - 1, nav, binary))
    cls = And if op == "and" else Or
    return cls(random_qf(rng, sig, depth - 1, nav, binary), random_qf(rng, sig, depth - 1, nav, binary))


def random_nf_c2(rng: random.Random, sig: Signature, max_conjuncts: int = 2, max_count: int = 3,
                 depth: int = 2):
    """Random C2 normal form over the unary part of sig."""
    from .normalizer import NormalFormC2

    usig = Signature(sig.unary, ())
    chi = random_qf(rng, usig, depth)
    if rng.random() < 0.5:
        chi = Or(chi, Not(random_qf(rng, usig, 1)))  # keep chi from being too restrictive
    conjuncts = []
    for _ in range(rng.randint(0, max_conjuncts)):
        op = rng.choice((">=", "<="))
        conjuncts.append((op, rng.randint(0 if op == "<=" else 1, max_count), random_qf(rng, usig, depth)))
    return NormalFormC2(chi, tuple(conjuncts), usig)


def random_nf_fo2(rng: random.Random, sig: Signature, max_conjuncts: int = 2, depth: int = 2):
    """Random FO2 normal form; the guards are drawn from the unary symbols of sig."""
    from .formula_core import NON_EQUAL_ORDERS
    from .normalizer import NormalFormFO2

    chi = random_qf(rng, sig, depth)
    if rng.random() < 0.5:
        chi = Or(chi, Not(random_qf(rng, sig, 1)))
    conjuncts = []
    if sig.unary:
        for _ in range(rng.randint(0, max_conjuncts)):
            conjuncts.append((rng.choice(sig.unary), rng.choice(NON_EQUAL_ORDERS),
                              random_qf(rng, sig, depth, nav=False)))
    return NormalFormFO2(chi, tuple(conjuncts), sig)


def random_sentence(rng: random.Random, sig: Signature, depth: int = 3, counting: bool = True,
                    max_count: int = 3) -> Formula:
    """Random two-variable sentence, optionally with counting quantifiers."""

    def go(d: int, free: frozenset) -> Formula:
        if d <= 0 or (free and rng.random() < 0.25):
            if not free:
                return Const(True)
            usable = sorted(free)
            atoms: list[Formula] = [Unary(s, rng.choice(usable)) for s in sig.unary]
            if len(usable) == 2:
                atoms += [Nav(rng.choice(_NAV_KINDS), *rng.choice((("x", "y"), ("y", "x")))),
                          Eq("x", "y")]
            return rng.choice(atoms) if atoms else Const(rng.random() < 0.5)
        r = rng.random()
        if r < 0.45:
            var = rng.choice("xy")
            body = go(d - 1, free | {var})
            if counting and rng.random() < 0.5:
                op = rng.choice((">=", "<=", "="))
                return Count(op, rng.randint(0, max_count), var, body)
            return (Exists if rng.random() < 0.5 else Forall)(var, body)
        if r < 0.6:
            return Not(go(d - 1, free))
        return (And if rng.random() < 0.5 else Or)(go(d - 1, free), go(d - 1, free))

    return go(depth, frozenset())


# ---------------------------------------------------------------- differential harness

SUITES = ("types", "normal-form", "translate", "sat-c2", "sat-fo2", "cut")


@dataclass(frozen=True)
class DiffConfig:
    suites: tuple[str, ...] = SUITES
    seed: int = 0
    max_nodes: int = 4
    cases: int = 20
    jobs: int = 1
    timeout: float = 30.0


def _case_rng(seed: int, suite: str, index: int) -> random.Random:
    return random.Random(f"{seed}/{suite}/{index}")


def _shrink_tree(t: Tree, bad) -> Tree:
    """Drop leaves one at a time while bad(tree) stays true."""
    changed = True
    while changed and t.n > 1:
        changed = False
        for v in range(t.n - 1, 0, -1):
            if t.children[v]:
                continue
            keep = [w for w in range(t.n) if w != v]
            index = {w: i for i, w in enumerate(keep)}
            edges = {r: [(index[a], index[b]) for a, b in t.edges[r] if a != v and b != v]
                     for r in t.sig.binary}
            smaller = Tree([-1 if t.parents[w] == -1 else index[t.parents[w]] for w in keep],
                           [t.labels[w] for w in keep], edges, t.sig)
            if bad(smaller):
                t, changed = smaller, True
                break
    return t


def _repro(formula: Formula, tree: Tree | None = None, extra: str = "") -> str:
    from .formula_core import pretty
    from .tree_model import save

    text = f"formula: {pretty(formula)}"
    if tree is not None:
        text += "\ntree:\n" + save(tree).rstrip()
    if extra:
        text += "\n" + extra
    return text


def _suite_types(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .semantics import check_via_types

    sig = Signature(("A", "B")[:rng.randint(1, 2)])
    nf = random_nf_c2(rng, sig)
    f = nf.to_formula()
    t = random_tree(rng, rng.randint(1, cfg.max_nodes + 2), sig)

    def bad(u: Tree) -> bool:
        return check_via_types(u, nf) != model_check(u, f)

    if bad(t):
        t = _shrink_tree(t, bad)
        return [Disagreement("types", "type-based check differs from model checking", _repro(f, t))]
    return []


def _suite_normal_form(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .normalizer import to_nf_c2, to_nf_fo2

    sig = Signature(("A",))
    counting = rng.random() < 0.5
    f = random_sentence(rng, sig, depth=rng.randint(1, 3), counting=counting, max_count=2)
    nf, sig2 = (to_nf_c2 if counting else to_nf_fo2)(f, sig)
    g = nf.to_formula()
    out = []
    for frame in enumerate_frames(min(cfg.max_nodes, 5)):
        if frame_satisfiable(f, frame, sig) != frame_satisfiable_sat(g, frame, sig2):
            out.append(Disagreement("normal-form", "normal form changes satisfiability on a frame",
                                    _repro(f, frame)))
            break
    return out


def _suite_translate(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .c2_to_fo2 import translate
    from .formula_core import has_counting

    sig = Signature(("A",))
    f = random_sentence(rng, sig, depth=rng.randint(1, 3), counting=True, max_count=3)
    g = translate(f)
    if has_counting(g):
        return [Disagreement("translate", "translation still counts", _repro(f))]
    for frame in enumerate_frames(min(cfg.max_nodes, 5)):
        for t in enumerate_labelings(frame, sig):
            if model_check(t, f) != model_check(t, g):
                t = _shrink_tree(t, lambda u: model_check(u, f) != model_check(u, g))
                return [Disagreement("translate", "translation changes truth", _repro(f, t))]
    return []


def _suite_sat_c2(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .sat_c2 import C2Bounds, sat_c2
    from .verdict import Outcome

    sig = Signature(("A", "B")[:rng.randint(1, 2)])
    nf = random_nf_c2(rng, sig, max_count=2)
    f = nf.to_formula()
    o = oracle_sat(f, nf.sig, cfg.max_nodes, budget=None)
    d, g = (o.model.height(), max(o.model.max_degree(), 1)) if o.sat else (2, 2)
    v = sat_c2(nf, C2Bounds(max(d, 1), g), timeout=cfg.timeout)
    if v.sat and not model_check(v.model, f):
        return [Disagreement("sat-c2", "SAT witness is not a model", _repro(f, v.model))]
    if o.sat and v.outcome is not Outcome.SAT and v.outcome is not Outcome.TIMEOUT:
        return [Disagreement("sat-c2", f"solver missed a model within depth {d}, degree {g}",
                             _repro(f, o.model))]
    return []


def _suite_sat_fo2(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .sat_fo2bin import Bounds, harvest_fset, sat_fo2bin
    from .verdict import Outcome

    sig = rng.choice([Signature(("A",), ("R",)), Signature(("A", "B"))])
    nf = random_nf_fo2(rng, sig)
    f = nf.to_formula()
    o = oracle_sat(f, nf.sig, min(cfg.max_nodes, 3 if sig.binary else 5), budget=None)
    if o.sat:
        b = Bounds(o.model.height(), max(o.model.max_degree(), 1), len(harvest_fset(o.model, nf)))
    else:
        b = Bounds(2, 2, 2)
    v = sat_fo2bin(nf, b, timeout=cfg.timeout)
    if v.sat and not model_check(v.model, f):
        return [Disagreement("sat-fo2", "SAT witness is not a model", _repro(f, v.model))]
    if o.sat and v.outcome is not Outcome.SAT and v.outcome is not Outcome.TIMEOUT:
        return [Disagreement("sat-fo2", f"solver missed a model within {b}", _repro(f, o.model))]
    return []


def _suite_cut(rng: random.Random, cfg: DiffConfig) -> list[Disagreement]:
    from .sat_c2 import cut_model
    from .semantics import full_type, reduce

    sig = Signature(("A",))
    nf = random_nf_c2(rng, sig, max_count=2)
    f = nf.to_formula()
    t = random_tree(rng, rng.randint(2, cfg.max_nodes + 3), sig)
    if not model_check(t, f):
        return []
    red = [reduce(nf, full_type(t, nf.C, v)) for v in range(t.n)]
    for u in range(t.n):
        for v in range(u + 1, t.subtree_end[u]):
            if red[u] == red[v] and not model_check(cut_model(t, u, v, nf), f):
                return [Disagreement("cut", f"cutting at ({u}, {v}) loses modelhood", _repro(f, t))]
    return []


_SUITE_FUNCS = {
    "types": _suite_types,
    "normal-form": _suite_normal_form,
    "translate": _suite_translate,
    "sat-c2": _suite_sat_c2,
    "sat-fo2": _suite_sat_fo2,
    "cut": _suite_cut,
}


def _run_case(args: tuple[str, int, DiffConfig]) -> tuple[str, list[Disagreement], str | None]:
    suite, index, cfg = args
    rng = _case_rng(cfg.seed, suite, index)
    try:
        return suite, _SUITE_FUNCS[suite](rng, cfg), None
    except BudgetExceeded as e:
        return suite, [], f"{suite} case {index}: {e}"


def differential(cfg: DiffConfig) -> Report:
    """Run the cross-checks of cfg.suites; the report depends only on cfg, not on cfg.jobs."""
    unknown = [s for s in cfg.suites if s not in _SUITE_FUNCS]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    jobs = [(s, i, cfg) for s in cfg.suites for i in range(cfg.cases)]
    if cfg.jobs > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_case, jobs))
    else:
        results = [_run_case(j) for j in jobs]
    report = Report(cfg.seed)
    for suite in cfg.suites:
        report.suites[suite] = 0
    for suite, found, truncated in results:
        report.suites[suite] += 1
        report.disagreements.extend(found)
        if truncated:
            report.truncated.append(truncated)
    return report
