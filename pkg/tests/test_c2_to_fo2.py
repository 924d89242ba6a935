import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import star
from treelogic.c2_to_fo2 import (TranslationError, build_psi, count_in_position, equivalent_on,
                                 translate)
from treelogic.formula_core import TRUE, Signature, Unary, has_counting, parse
from treelogic.oracle import enumerate_frames, enumerate_labelings, random_sentence, random_tree
from treelogic.semantics import model_check, truth_table
from treelogic.tree_model import POSITIONS, Position

A = Signature(("A",))


def test_count_in_position_examples():
    assert count_in_position(star(3), Position.CHILD, 0, TRUE) == 3
    assert count_in_position(star(3), Position.STRICT_DESCENDANT, 2, TRUE) == 0
    assert count_in_position(star(3), Position.FAR_FOLLOWING_SIBLING, 2, TRUE) == 0
    assert count_in_position(star(3), Position.FAR_FOLLOWING_SIBLING, 1, TRUE) == 1
    with pytest.raises(TranslationError):
        count_in_position(star(1), Position.CHILD, 0, parse("(child x y)", Signature()))


def test_build_psi_examples():
    assert all(build_psi(0, pos, TRUE) == TRUE for pos in POSITIONS)
    f = build_psi(3, Position.STRICT_DESCENDANT, TRUE)
    assert truth_table(star(3), f)[0, 0] and not truth_table(star(2), f)[0, 0]


def _all_trees(max_nodes, sig):
    return [t for fr in enumerate_frames(max_nodes) for t in enumerate_labelings(fr, sig)]


@pytest.mark.parametrize("pos", POSITIONS, ids=str)
def test_build_psi_matches_counts(pos):
    psi = Unary("A", "x")
    trees = _all_trees(4, A)
    for c in range(1, 4):
        f = build_psi(c, pos, psi)
        for t in trees:
            col = truth_table(t, f)[:, 0]
            for v in range(t.n):
                assert bool(col[v]) == (count_in_position(t, pos, v, psi) >= c)


@given(st.integers(0, 10**6))
def test_free_position_decomposition(seed):
    rng = random.Random(seed)
    t = random_tree(rng, rng.randint(1, 9), A)
    psi = Unary("A", "x")
    parts = (Position.ANCESTOR_SIBLING_SUBTREE, Position.DESCENDANT_OF_FOLLOWING_SIBLING,
             Position.DESCENDANT_OF_PRECEDING_SIBLING)
    for v in range(t.n):
        free = sum(1 for w in range(t.n) if t.order_of(v, w).value == "Free" and "A" in t.labels[w])
        assert free == sum(count_in_position(t, p, v, psi) for p in parts)


def test_translate_examples():
    fo2 = parse("(forall x (exists y (child x y)))", Signature())
    assert translate(fo2) is fo2
    f = parse("(count>= 3 y (descendant x y))", Signature())
    g = translate(f)
    assert not has_counting(g)
    for t in enumerate_frames(7):
        assert equivalent_on(t, f, g)
    free = parse("(count>= 2 y (and (A y) (not (or (or (descendant x y) (descendant y x)) "
                 "(or (following x y) (following y x))))))", A)
    g = translate(free)
    assert not has_counting(g)
    assert all(equivalent_on(t, free, g) for t in _all_trees(5, A))


def test_translate_rejects_common_binaries():
    sig = Signature((), ("R",))
    with pytest.raises(TranslationError):
        translate(parse("(count>= 1 y (R x y))", sig))


def test_top_level_count_is_closed():
    f = parse("(count>= 2 x (A x))", A)
    g = translate(f)
    assert not has_counting(g)
    assert all(model_check(t, f) == model_check(t, g) for t in _all_trees(4, A))


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_translate_random_sentences(seed):
    rng = random.Random(seed)
    f = random_sentence(rng, A, depth=rng.randint(1, 3), max_count=2)
    g = translate(f)
    assert not has_counting(g)
    for fr in enumerate_frames(4):
        for t in enumerate_labelings(fr, A):
            assert model_check(t, f) == model_check(t, g)
