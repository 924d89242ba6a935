import pytest
from hypothesis import given, strategies as st

from treelogic.formula_core import NON_EQUAL_ORDERS, Order, Signature
from treelogic.type_system import (INF, KMultiset, OneType, TwoType, TypeError_, count_leq, cut,
                                   enumerate_multisets, enumerate_one_types, enumerate_two_types,
                                   invert, mset_intersect, mset_union)

SIG = Signature(("A", "B"))
ONES = enumerate_one_types(SIG)


@pytest.mark.parametrize("sig,n", [
    (Signature(("A", "B")), 4),
    (Signature(), 1),
    (Signature(("A",), ("R",)), 4),
])
def test_one_type_counts(sig, n):
    assert len(enumerate_one_types(sig)) == n == 2 ** (len(sig.unary) + len(sig.binary))


def test_one_type_order_is_big_endian():
    assert [t.index for t in ONES] == [0, 1, 2, 3]
    assert ONES[2].unary == {"A"} and ONES[1].unary == {"B"}


def test_two_type_counts_and_restrictions():
    sig = Signature(("A",), ("R",))
    all2 = list(enumerate_two_types(sig))
    assert len(all2) == 9 * 4 * 4 * 4
    with pytest.raises(TypeError_):
        TwoType(ONES[0], ONES[0], Order.EQUAL)


def test_cut_saturates():
    assert cut(3, 3) == 3 and cut(3, 4) is INF and cut(0, 1) is INF and cut(0, 0) == 0
    assert count_leq(2, INF) and not count_leq(INF, 5)


counts = st.dictionaries(st.sampled_from(ONES), st.integers(0, 6), max_size=4)


@given(st.integers(0, 3), counts, counts, counts)
def test_union_commutative_associative(k, a, b, c):
    A, B, C = (KMultiset.from_counts(k, x) for x in (a, b, c))
    assert mset_union(A, B) == mset_union(B, A)
    assert mset_union(mset_union(A, B), C) == mset_union(A, mset_union(B, C))


@given(st.integers(0, 3), counts, counts)
def test_union_is_cut_of_sum(k, a, b):
    A, B = KMultiset.from_counts(k, a), KMultiset.from_counts(k, b)
    total = {t: a.get(t, 0) + b.get(t, 0) for t in set(a) | set(b)}
    assert mset_union(A, B) == KMultiset.from_counts(k, total)


@given(st.integers(0, 3), counts, counts)
def test_intersection_is_below_both(k, a, b):
    A, B = KMultiset.from_counts(k, a), KMultiset.from_counts(k, b)
    for t, v in mset_intersect(A, B).items():
        assert count_leq(v, A[t]) and count_leq(v, B[t])


@given(st.sampled_from(list(enumerate_two_types(Signature(("A",), ("R",))))))
def test_invert_is_an_involution(beta):
    assert invert(invert(beta)) == beta
    assert invert(beta).order is beta.order.inverse


def test_multiset_validation_and_enumeration():
    with pytest.raises(TypeError_):
        KMultiset(2, {ONES[0]: 3})
    with pytest.raises(TypeError_):
        mset_union(KMultiset(1), KMultiset(2))
    ms = list(enumerate_multisets(1, ONES[:2]))
    assert len(ms) == 9 and len(set(ms)) == 9
    assert KMultiset.single(2, ONES[1]).singleton() == ONES[1]
    assert all(o is not Order.EQUAL for o in NON_EQUAL_ORDERS)
