import random

import pytest
from hypothesis import given, strategies as st

from helpers import GB_U, GB_V, GREEN_BLACK_PHI, green_black_tree, naive_eval, star
from treelogic.formula_core import ORDERS, TRUE, Const, Order, Signature, parse
from treelogic.normalizer import NormalFormC2
from treelogic.oracle import random_nf_c2, random_sentence, random_tree
from treelogic.semantics import (SemanticsError, check_via_types, combine, full_type, horizontal,
                                 is_phi_consistent, model_check, reduce, witness_counts)
from treelogic.tree_model import Tree
from treelogic.type_system import INF, KMultiset, OneType

EMPTY = OneType(Signature(), frozenset())
DESC3 = parse("(exists x (count>= 3 y (descendant x y)))", Signature())


def test_star_fixtures():
    assert model_check(star(3), DESC3)
    assert not model_check(star(2), DESC3)
    assert model_check(star(2), TRUE)


def test_unbound_variable():
    with pytest.raises(SemanticsError):
        model_check(star(1), parse("(child x y)", Signature()))
    assert model_check(star(1), parse("(child x y)", Signature()), {"x": 0, "y": 1})


@given(st.integers(0, 10**6))
def test_model_check_matches_reference_evaluator(seed):
    rng = random.Random(seed)
    sig = Signature(("A", "B"))
    f = random_sentence(rng, sig, depth=4)
    t = random_tree(rng, rng.randint(1, 7), sig)
    assert model_check(t, f) == naive_eval(t, f, {})


def test_full_type_examples():
    t = star(3)
    a = full_type(t, 3, 0)
    assert a[Order.DOWN] == KMultiset(3, {EMPTY: 3})
    for o in (Order.UP, Order.DEEP_UP, Order.LEFT, Order.RIGHT, Order.FAR_LEFT, Order.FAR_RIGHT,
              Order.FREE, Order.DEEP_DOWN):
        assert not a[o]
    assert full_type(t, 2, 0)[Order.DOWN] == KMultiset(2, {EMPTY: INF})
    leaf = full_type(star(1), 1, 1)
    assert leaf[Order.UP] == KMultiset(1, {EMPTY: 1}) and not leaf[Order.DOWN]


@given(st.integers(0, 10**6), st.integers(0, 3))
def test_full_types_are_well_formed(seed, k):
    rng = random.Random(seed)
    t = random_tree(rng, rng.randint(1, 8), Signature(("A",)))
    assert all(full_type(t, k, v).is_well_formed() for v in range(t.n))


def test_witness_counts_examples():
    t = star(2)
    never = NormalFormC2(TRUE, (("<=", 0, Const(False)),), Signature())
    a = full_type(t, 0, 0)
    assert all(v == 0 for v in witness_counts(never, a)[0])
    child = NormalFormC2(TRUE, ((">=", 1, parse("(child x y)", Signature())),), Signature())
    assert witness_counts(child, full_type(star(1), 1, 0))[0][Order.DOWN.index] == 1
    assert witness_counts(child, full_type(t, 1, 1))[0][Order.DOWN.index] == 0
    # Down can hold several children, so its entry is summed and saturates
    assert witness_counts(child, full_type(t, 1, 0))[0][Order.DOWN.index] is INF
    with pytest.raises(SemanticsError):
        witness_counts(child, full_type(t, 2, 0))


def test_green_black_counts():
    # a green node with two black children and black neighbours on both sides
    gb = GREEN_BLACK_PHI
    t = Tree.from_nested(((), [(("black",), []), (("green",), [(("black",), []), (("black",), [])]),
                               (("black",), [])]), gb.sig)
    row = witness_counts(gb, full_type(t, gb.C, 2))[0]
    assert row[Order.DOWN.index] == 2
    assert row[Order.LEFT.index] == 1
    assert row[Order.RIGHT.index] == 1
    assert not is_phi_consistent(gb, full_type(t, gb.C, 2))


def test_green_black_example():
    gb, t = GREEN_BLACK_PHI, green_black_tree()
    assert model_check(t, gb.to_formula())
    a, b = full_type(t, gb.C, GB_U), full_type(t, gb.C, GB_V)
    assert is_phi_consistent(gb, a) and is_phi_consistent(gb, b)
    assert reduce(gb, a).wct != reduce(gb, b).wct
    assert not is_phi_consistent(gb, combine(a, b))


def test_vacuous_formula_accepts_everything():
    phi = NormalFormC2(TRUE, (), Signature(("A",)))
    t = random_tree(random.Random(1), 6, phi.sig)
    assert all(is_phi_consistent(phi, full_type(t, 0, v)) for v in range(t.n))
    assert check_via_types(Tree([-1]), phi)


def test_check_via_types_star():
    phi = NormalFormC2(TRUE, ((">=", 3, parse("(descendant x y)", Signature())),), Signature())
    assert not check_via_types(star(2), phi) and not model_check(star(2), phi.to_formula())


@given(st.integers(0, 10**6))
def test_check_via_types_matches_model_check(seed):
    rng = random.Random(seed)
    sig = Signature(("A", "B")[:rng.randint(1, 2)])
    phi = random_nf_c2(rng, sig)
    t = random_tree(rng, rng.randint(1, 8), sig)
    assert check_via_types(t, phi) == model_check(t, phi.to_formula())


def test_reduce_and_horizontal_examples():
    phi = NormalFormC2(TRUE, ((">=", 1, TRUE),), Signature())
    t = Tree([-1, 0, 1, 2, 3])  # path
    root = full_type(t, 1, 0)
    assert all(not m for m in horizontal(root)[1:])
    r1, r2 = reduce(phi, full_type(t, 1, 1)), reduce(phi, full_type(t, 1, 2))
    assert r1.below == r2.below and r1.free == full_type(t, 1, 1)[Order.FREE]


@given(st.integers(0, 10**6))
def test_combine_is_idempotent(seed):
    rng = random.Random(seed)
    t = random_tree(rng, rng.randint(1, 7), Signature(("A",)))
    for v in range(t.n):
        a = full_type(t, 2, v)
        assert combine(a, a) == a


@given(st.integers(0, 10**6))
def test_combined_types_stay_consistent(seed):
    rng = random.Random(seed)
    sig = Signature(("A",))
    phi = random_nf_c2(rng, sig, max_count=2)
    seen: dict = {}
    for _ in range(4):
        t = random_tree(rng, rng.randint(1, 7), sig)
        for v in range(t.n):
            a = full_type(t, phi.C, v)
            if is_phi_consistent(phi, a):
                seen.setdefault(reduce(phi, a), set()).add(a)
    for group in seen.values():
        for a in group:
            for b in group:
                assert is_phi_consistent(phi, combine(a, b))


def test_combine_cutoff_mismatch():
    with pytest.raises(SemanticsError):
        combine(full_type(star(1), 1, 0), full_type(star(1), 2, 0))
    assert len(ORDERS) == 10
