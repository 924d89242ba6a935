import random
from math import comb

import pytest

from treelogic import semantics
from treelogic.formula_core import Signature, parse
from treelogic.oracle import (SUITES, BudgetExceeded, DiffConfig, count_labelings, differential,
                              enumerate_frames, enumerate_labelings, frame_satisfiable,
                              frame_satisfiable_sat, oracle_sat, random_sentence)
from treelogic.semantics import model_check
from treelogic.tree_model import Tree


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def test_frame_counts_are_catalan():
    assert len(list(enumerate_frames(3))) == 4
    assert len(list(enumerate_frames(1))) == 1
    for n in range(1, 8):
        sized = [t for t in enumerate_frames(n, n)]
        assert len(sized) == catalan(n - 1)
        assert len({t.parents for t in sized}) == len(sized)


def test_labeling_counts():
    two = Tree([-1, 0])
    assert len(list(enumerate_labelings(two, Signature(("A",))))) == 4
    assert len(list(enumerate_labelings(two, Signature(("A",), ("R",))))) == 64
    assert len(list(enumerate_labelings(two, Signature()))) == 1
    assert count_labelings(two, Signature(("A",), ("R",))) == 64
    with pytest.raises(BudgetExceeded):
        list(enumerate_labelings(two, Signature(("A",), ("R",)), budget=10))


def test_oracle_examples():
    f = parse("(exists x (count>= 3 y (descendant x y)))", Signature())
    r = oracle_sat(f, Signature(), 4)
    assert r.sat and r.model.n == 4 and model_check(r.model, f)
    assert not oracle_sat(f, Signature(), 3).sat
    assert str(oracle_sat(parse("false", Signature()), Signature(), 3)) == "NO_MODEL_UP_TO_3"


def test_frame_satisfiability_two_ways():
    sig = Signature(("A",))
    rng = random.Random(3)
    for _ in range(15):
        f = random_sentence(rng, sig, depth=3)
        for fr in enumerate_frames(4):
            assert frame_satisfiable(f, fr, sig) == frame_satisfiable_sat(f, fr, sig)


def test_differential_is_clean_and_deterministic():
    cfg = DiffConfig(cases=4, max_nodes=3)
    r1 = differential(cfg)
    assert r1.ok, r1.to_text()
    assert set(r1.suites) == set(SUITES)
    r2 = differential(DiffConfig(cases=4, max_nodes=3, jobs=3))
    assert r1.to_dict() == r2.to_dict()


def test_differential_empty_corpus():
    r = differential(DiffConfig(cases=0))
    assert r.ok and not r.disagreements and all(v == 0 for v in r.suites.values())


def test_differential_catches_a_mutation(monkeypatch):
    monkeypatch.setattr(semantics, "is_phi_consistent", lambda phi, a: True)
    r = differential(DiffConfig(suites=("types",), cases=30))
    assert not r.ok
    assert "formula:" in r.disagreements[0].reproducer
