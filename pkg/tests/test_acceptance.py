"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import random
import time

import pytest

from helpers import GB_U, GB_V, GREEN_BLACK_PHI, green_black_tree, star
from treelogic.c2_to_fo2 import build_psi, count_in_position, equivalent_on, translate
from treelogic.formula_core import TRUE, Order, Signature, Unary, has_counting, parse
from treelogic.normalizer import NormalFormC2, NormalFormFO2, to_nf_c2, to_nf_fo2
from treelogic.oracle import (enumerate_frames, enumerate_labelings, frame_satisfiable,
                              frame_satisfiable_sat, oracle_sat, random_nf_c2, random_nf_fo2,
                              random_tree)
from treelogic.sat_c2 import C2Bounds, alpha_size, cut_model, max_degree_bound, max_depth_bound, sat_c2
from treelogic.sat_fo2bin import Bounds, bound_f, harvest_fset, sat_fo2bin
from treelogic.semantics import (check_via_types, combine, full_type, is_phi_consistent,
                                 model_check, reduce, truth_table)
from treelogic.tree_model import POSITIONS
from treelogic.verdict import Outcome

A = Signature(("A",))


@pytest.fixture
def verdict(capsys):
    def emit(criterion: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        assert ok, detail
    return emit


def test_c1_types_agree_with_model_checking(verdict):
    rng = random.Random(101)
    start = time.monotonic()
    bad = models = 0
    pairs = 1000
    for _ in range(pairs):
        sig = Signature(("A", "B")[:rng.randint(1, 2)])
        phi = random_nf_c2(rng, sig, max_conjuncts=2, max_count=3)
        assert phi.C <= 3
        t = random_tree(rng, rng.randint(1, 8), sig)
        truth = model_check(t, phi.to_formula())
        models += truth
        bad += check_via_types(t, phi) != truth
    secs = time.monotonic() - start
    verdict("1 type-based check vs model checking", bad == 0 and secs <= 120 and 0 < models < pairs,
            f"{pairs} pairs ({models} models), {bad} disagreements, {secs:.1f}s")


def test_c2_green_black_example(verdict):
    phi, t = GREEN_BLACK_PHI, green_black_tree()
    a, b = full_type(t, phi.C, GB_U), full_type(t, phi.C, GB_V)
    checks = [is_phi_consistent(phi, a), is_phi_consistent(phi, b),
              not is_phi_consistent(phi, combine(a, b))]
    verdict("2 green/black example", all(checks),
            f"u consistent={checks[0]}, v consistent={checks[1]}, combined inconsistent={checks[2]}")


def test_c3_combined_types(verdict):
    rng = random.Random(303)
    pairs = distinct = bad = 0
    for _ in range(300):
        phi = random_nf_c2(rng, A, max_count=2)
        groups: dict = {}
        for _ in range(3):
            t = random_tree(rng, rng.randint(1, 8), A)
            for v in range(t.n):
                a = full_type(t, phi.C, v)
                if is_phi_consistent(phi, a):
                    groups.setdefault(reduce(phi, a), set()).add(a)
        for group in groups.values():
            for a in group:
                for b in group:
                    pairs += 1
                    distinct += a != b
                    bad += not is_phi_consistent(phi, combine(a, b))
    verdict("3 combined types stay consistent", bad == 0 and distinct >= 100,
            f"{pairs} pairs ({distinct} with distinct types), {bad} violations")


def test_c4_cutting(verdict):
    rng = random.Random(404)
    triples = bad = 0
    attempts = 0
    while triples < 250 and attempts < 2000:
        attempts += 1
        phi = random_nf_c2(rng, A, max_conjuncts=rng.randint(0, 2), max_count=2)
        f = phi.to_formula()
        for _ in range(20):
            t = random_tree(rng, rng.randint(3, 10), A)
            if not model_check(t, f):
                continue
            red = [reduce(phi, full_type(t, phi.C, v)) for v in range(t.n)]
            for u in range(t.n):
                for v in range(u + 1, t.subtree_end[u]):
                    if red[u] == red[v]:
                        triples += 1
                        bad += not model_check(cut_model(t, u, v, phi), f)
    verdict("4 cutting preserves models", bad == 0 and triples >= 200, f"{triples} triples, {bad} violations")


TRANSLATION_CORPUS = [
    "(count>= 3 y (descendant x y))",
    "(count>= 2 y (child x y))",
    "(count<= 1 y (child x y))",
    "(count= 2 y (following x y))",
    "(count>= 2 y (following y x))",
    "(count>= 3 y (not (= x y)))",
    "(count<= 2 y (descendant y x))",
    "(count>= 2 y (not (or (or (descendant x y) (descendant y x)) (or (following x y) (following y x)))))",
    "(exists x (count>= 3 y (descendant x y)))",
    "(forall x (count<= 2 y (child x y)))",
    "(forall x (implies (exists y (child x y)) (count>= 2 y (child x y))))",
    "(exists x (count= 3 y (child x y)))",
    "(count>= 2 y (and (next x y) true))",
    "(count>= 1 y (and (descendant x y) (count>= 2 x (child y x))))",
    "(count>= 2 y (A y))",
    "(count>= 2 y (and (A y) (descendant x y)))",
    "(count<= 1 y (and (A y) (following x y)))",
    "(count>= 2 y (and (A y) (not (or (or (descendant x y) (descendant y x)) (or (following x y) (following y x))))))",
    "(forall x (implies (A x) (count>= 2 y (descendant x y))))",
    "(exists x (and (A x) (count>= 2 y (and (A y) (following x y)))))",
    "(count= 1 y (and (A y) (child y x)))",
    "(forall x (count<= 2 y (A y)))",
    "(count>= 3 y (or (A y) (child x y)))",
]


def test_c5_translation(verdict):
    start = time.monotonic()
    bad = trees = 0
    counting_left = []
    for text in TRANSLATION_CORPUS:
        f = parse(text, A)
        g = translate(f)
        if has_counting(g):
            counting_left.append(text)
        labeled = "(A " in text
        grid = ([t for fr in enumerate_frames(5) for t in enumerate_labelings(fr, A)] if labeled
                else list(enumerate_frames(6)))
        for t in grid:
            trees += 1
            bad += not equivalent_on(t, f, g)
    secs = time.monotonic() - start
    ok = bad == 0 and not counting_left and len(TRANSLATION_CORPUS) >= 20 and secs <= 600
    verdict("5 counting-free translation", ok,
            f"{len(TRANSLATION_CORPUS)} formulas, {trees} tree checks, {bad} disagreements, "
            f"{len(counting_left)} still counting, {secs:.1f}s")


def test_c6_position_formulas(verdict):
    bad = cases = 0
    for psi in (TRUE, Unary("A", "x")):
        sig = A if psi != TRUE else Signature()
        grid = [t for fr in enumerate_frames(6) for t in enumerate_labelings(fr, sig)]
        for pos in POSITIONS:
            for c in range(4):
                f = build_psi(c, pos, psi)
                cases += 1
                for t in grid:
                    col = truth_table(t, f)[:, 0]
                    bad += sum(bool(col[v]) != (count_in_position(t, pos, v, psi) >= c)
                               for v in range(t.n))
    verdict("6 position formulas vs counts", bad == 0 and cases == 128,
            f"{cases} (position, c, psi) cases, {bad} disagreements")


def test_c7_star_fixtures(verdict):
    f = parse("(exists x (count>= 3 y (descendant x y)))", Signature())
    three, two = model_check(star(3), f), model_check(star(2), f)
    verdict("7 star fixtures", three and not two, f"T3 satisfies: {three}, T2 satisfies: {two}")


def test_c8_bound_values(verdict):
    fo = NormalFormFO2(TRUE, (("A", Order.DOWN, TRUE),), A)
    c_depth = NormalFormC2(TRUE, ((">=", 1, TRUE),), Signature())
    c_deg = NormalFormC2(TRUE, ((">=", 1, Unary("A", "y")),), A)
    got = (bound_f(fo),
           max_depth_bound(c_depth.C, c_depth.m, alpha_size(c_depth)),
           max_degree_bound(c_deg.C, alpha_size(c_deg)))
    verdict("8 exact bounds", got == (768, 531441, 384), f"f={got[0]}, depth={got[1]}, degree={got[2]}")


def _fo2_case(rng):
    sig = rng.choice([A, Signature(("A", "B")), Signature(("A",), ("R",))])
    phi = random_nf_fo2(rng, sig)
    o = oracle_sat(phi.to_formula(), phi.sig, 3 if sig.binary else 5, budget=None)
    return phi, o


def test_c9_solvers(verdict):
    start = time.monotonic()
    rng = random.Random(909)
    fo_bad = fo_sat = 0
    for _ in range(40):
        phi, o = _fo2_case(rng)
        if o.sat:
            b = Bounds(o.model.height(), max(o.model.max_degree(), 1), len(harvest_fset(o.model, phi)))
        else:
            b = Bounds(2, 2, 2)
        v = sat_fo2bin(phi, b, timeout=60)
        fo_sat += o.sat
        fo_bad += (v.sat and not model_check(v.model, phi.to_formula())) or (o.sat and not v.sat)
    c_bad = c_sat = 0
    for i in range(40):
        sig = Signature(("A", "B")[:1 + i % 2])
        phi = random_nf_c2(rng, sig, max_count=2)
        o = oracle_sat(phi.to_formula(), phi.sig, 4, budget=None)
        d, g = (o.model.height(), max(o.model.max_degree(), 1)) if o.sat else (2, 2)
        v = sat_c2(phi, C2Bounds(d, g), timeout=60)
        c_sat += o.sat
        c_bad += (v.sat and not model_check(v.model, phi.to_formula())) or (o.sat and not v.sat)
    # worked examples: one-node model, no finite model, and the descendant-counting formula
    ex, _ = to_nf_fo2(parse("(exists x (A x))", A), A)
    v1 = sat_fo2bin(ex, Bounds(1, 1, 1), timeout=60)
    no, _ = to_nf_c2(parse("(forall x (count>= 1 y (child x y)))", Signature()), Signature())
    v2 = sat_c2(no, C2Bounds(3, 3), timeout=60)
    desc = NormalFormC2(TRUE, ((">=", 1, parse("(P y)", Signature(("P",)))),
                               (">=", 3, parse("(or (not (P x)) (descendant x y))", Signature(("P",))))),
                        Signature(("P",)))
    v3 = sat_c2(desc, C2Bounds(3, 3), timeout=60)
    examples = (v1.sat and v1.model.n == 1 and v2.outcome is Outcome.UNSAT_WITHIN_BOUNDS
                and v3.sat and v3.model.n >= 4)
    secs = time.monotonic() - start
    ok = fo_bad == 0 and c_bad == 0 and examples and secs <= 900 and fo_sat and c_sat
    verdict("9 solver soundness and bounded completeness", ok,
            f"FO2 40 formulas ({fo_sat} satisfiable), {fo_bad} violations; "
            f"C2 40 formulas ({c_sat} satisfiable), {c_bad} violations; examples ok={examples}; "
            f"{secs:.1f}s")


NF_CORPUS = [
    ("(exists x (A x))", False),
    ("(forall x (exists y (or (child x y) (next x y))))", False),
    ("(forall x (implies (A x) (exists y (and (descendant x y) (not (A y))))))", False),
    ("(and (exists x (A x)) (forall x (implies (A x) (forall y (implies (A y) (= x y))))))", False),
    ("(forall x (or (A x) (exists y (and (child y x) (A y)))))", False),
    ("(exists x (and (A x) (exists y (and (following x y) (A y)))))", False),
    ("(not (exists x (and (A x) (forall y (implies (child x y) (A y))))))", False),
    ("(exists x (count>= 3 y (descendant x y)))", True),
    ("(forall x (count= 2 y (child x y)))", True),
    ("(forall x (count<= 1 y (and (A y) (child x y))))", True),
    ("(exists x (and (A x) (count>= 2 y (and (A y) (following x y)))))", True),
    ("(forall x (implies (A x) (count>= 2 y (descendant x y))))", True),
]


def test_c10_normal_form_frames(verdict):
    bad = checks = 0
    for text, counting in NF_CORPUS:
        f = parse(text, A)
        nf, sig2 = (to_nf_c2 if counting else to_nf_fo2)(f, A)
        g = nf.to_formula()
        for fr in enumerate_frames(5):
            checks += 1
            bad += frame_satisfiable(f, fr, A) != frame_satisfiable_sat(g, fr, sig2)
    verdict("10 normal form keeps frame satisfiability", bad == 0 and len(NF_CORPUS) >= 10,
            f"{len(NF_CORPUS)} formulas x {checks // len(NF_CORPUS)} frames, {bad} disagreements")
