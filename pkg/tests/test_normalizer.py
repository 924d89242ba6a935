import random

import pytest
from hypothesis import given, settings, strategies as st

from treelogic.formula_core import ORDERS, Signature, is_quantifier_free, parse, tree_size
from treelogic.normalizer import (SIZE_FACTOR, NormalFormC2, NormalFormFO2, NormalizationError,
                                  as_nf_c2, as_nf_fo2, to_nf_c2, to_nf_fo2)
from treelogic.oracle import (enumerate_frames, frame_satisfiable, frame_satisfiable_sat,
                              random_sentence)

A = Signature(("A",))


def frames_agree(f, sig, nf, sig2, max_nodes):
    g = nf.to_formula()
    return all(frame_satisfiable(f, fr, sig) == frame_satisfiable_sat(g, fr, sig2)
               for fr in enumerate_frames(max_nodes))


def test_universal_fixpoint():
    f = parse("(forall x (forall y (or (A x) (not (child x y)))))", A)
    nf, sig2 = to_nf_c2(f, A)
    assert nf.m == 0 and sig2 == A and nf.to_formula() == f


def test_normal_form_input_is_kept():
    f = parse("(forall x (forall y true))", A)
    nf, _ = to_nf_fo2(f, A)
    again, sig3 = to_nf_fo2(nf.to_formula(), nf.sig)
    assert again == nf and sig3 == nf.sig
    assert as_nf_c2(nf.to_formula(), A) is not None


def test_exists_has_trigger_and_keeps_frames():
    f = parse("(exists x (A x))", A)
    nf, sig2 = to_nf_fo2(f, A)
    assert isinstance(nf, NormalFormFO2) and len(sig2.unary) > 1
    assert frames_agree(f, A, nf, sig2, 4)


def test_split_per_order():
    f = parse("(forall x (exists y (or (child x y) (next x y))))", Signature())
    nf, sig2 = to_nf_fo2(f, Signature())
    assert {theta for _, theta, _ in nf.conjuncts} <= set(ORDERS)
    assert all(is_quantifier_free(chi) for _, _, chi in nf.conjuncts)
    assert frames_agree(f, Signature(), nf, sig2, 4)


def test_count_equal_expands():
    f = parse("(forall x (count= 2 y (child x y)))", Signature())
    nf, _ = to_nf_c2(f, Signature())
    ops = sorted(op for op, c, _ in nf.conjuncts if c == 2)
    assert ops == ["<=", ">="]


def test_counting_example_keeps_frames():
    f = parse("(exists x (count>= 3 y (descendant x y)))", Signature())
    nf, sig2 = to_nf_c2(f, Signature())
    assert isinstance(nf, NormalFormC2) and nf.C >= 1
    assert frames_agree(f, Signature(), nf, sig2, 5)


@pytest.mark.parametrize("text,fn", [
    ("(exists x (count>= 1 y (A y)))", to_nf_fo2),     # counting in FO2 mode
    ("(exists y (R x y))", to_nf_c2),                   # common binary in C2 mode
    ("(A x)", to_nf_fo2),                               # free variable
])
def test_errors(text, fn):
    with pytest.raises(NormalizationError):
        fn(parse(text, Signature(("A",), ("R",))), Signature(("A",), ("R",)))


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.booleans())
def test_output_shape_and_size(seed, counting):
    rng = random.Random(seed)
    # bounds stay at 1: guarded bounds of 2 or more are outside the size guarantee
    f = random_sentence(rng, A, depth=rng.randint(1, 4), counting=counting, max_count=1)
    nf, sig2 = (to_nf_c2 if counting else to_nf_fo2)(f, A)
    assert is_quantifier_free(nf.chi)
    again = (as_nf_c2 if counting else as_nf_fo2)(nf.to_formula(), sig2)
    assert again is not None and again.m == nf.m
    assert tree_size(nf.to_formula()) <= SIZE_FACTOR * tree_size(f) ** 2


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.booleans())
def test_frame_preservation(seed, counting):
    rng = random.Random(seed)
    f = random_sentence(rng, A, depth=rng.randint(1, 3), counting=counting, max_count=2)
    nf, sig2 = (to_nf_c2 if counting else to_nf_fo2)(f, A)
    assert frames_agree(f, A, nf, sig2, 4)
