import pytest
from hypothesis import given, strategies as st

from treelogic.formula_core import (NAV_KINDS, ORDERS, And, Binary, Const, Count, Eq, Exists, Forall,
                                    FormulaError, Implies, Nav, Not, Or, Order, ParseError,
                                    Signature, Unary, classify, conj, disj, entailment_matrix,
                                    free_vars, has_counting, order_from_formula, parse, pretty,
                                    swap_vars, tree_size, validate)

SIG = Signature(("A", "B"), ("R",))


def formulas(sig=SIG):
    var = st.sampled_from("xy")
    atoms = st.one_of(
        st.builds(Const, st.booleans()),
        st.builds(Unary, st.sampled_from(sig.unary), var),
        st.builds(Binary, st.sampled_from(sig.binary), var, var),
        st.builds(Nav, st.sampled_from(NAV_KINDS), var, var),
        st.builds(Eq, var, var),
    )

    def extend(inner):
        return st.one_of(
            st.builds(Not, inner),
            st.builds(And, inner, inner),
            st.builds(Or, inner, inner),
            st.builds(Implies, inner, inner),
            st.builds(Exists, var, inner),
            st.builds(Forall, var, inner),
            st.builds(Count, st.sampled_from([">=", "<=", "="]), st.integers(0, 5), var, inner),
        )

    return st.recursive(atoms, extend, max_leaves=12)


@given(formulas())
def test_pretty_parse_round_trip(f):
    assert parse(pretty(f), SIG) == f


@given(formulas())
def test_swap_vars_is_an_involution(f):
    assert swap_vars(swap_vars(f)) == f


def test_parse_examples():
    f = parse("(exists x (count>= 3 y (descendant x y)))", Signature())
    assert f == Exists("x", Count(">=", 3, "y", Nav("descendant", "x", "y")))
    assert free_vars(f) == frozenset()
    assert has_counting(f)
    g = parse("(forall x (implies (A x) (exists y (and (child x y) (not (A y))))))", SIG)
    assert free_vars(g.body.left) == {"x"}


@pytest.mark.parametrize("text,expected", [
    ("(exists y (child x y))", "pure-fo2"),
    ("(exists y (R x y))", "fo2-with-common-binary"),
    ("(count>= 2 y (A y))", "c2"),
    ("(count<= 1 y (R x y))", "c2-with-common-binary"),
])
def test_classify(text, expected):
    assert classify(parse(text, SIG)) == expected


@pytest.mark.parametrize("text", [
    "(exists z (A z))",          # third variable
    "(C x)",                      # unknown symbol
    "(A x y)",                    # arity mismatch
    "(count>= -1 y (A y))",       # negative bound
    "(and (A x)",                 # unbalanced
    "(R x)",                      # binary used as unary
])
def test_parse_errors(text):
    with pytest.raises(FormulaError):
        parse(text, SIG)


def test_parse_error_location():
    with pytest.raises(ParseError) as e:
        parse("(and (A x)\n  (Q y))", SIG)
    assert e.value.line == 2


def test_signature_file_round_trip():
    text = "unary: A B\nbinary: R\n"
    assert Signature.from_text(text) == SIG
    assert Signature.from_text(SIG.to_text()) == SIG
    assert Signature.from_text("unary:\nbinary:\n") == Signature()


def test_signature_rejects_clashes():
    with pytest.raises(FormulaError):
        Signature(("A",), ("A",))
    with pytest.raises(FormulaError):
        Signature(("child",))


def test_validate_checks_symbols():
    validate(Unary("A", "x"), SIG)
    with pytest.raises(FormulaError):
        validate(Unary("Z", "x"), SIG)


def test_balanced_conj_disj():
    parts = [Unary("A", "x")] * 64
    assert tree_size(conj(parts)) == 127
    assert conj([]) == Const(True) and disj([]) == Const(False)
    depth = 0
    f = conj(parts)
    while isinstance(f, And):
        f, depth = f.left, depth + 1
    assert depth == 6


def test_orders_are_inverse_pairs():
    for o in ORDERS:
        assert o.inverse.inverse is o
        assert order_from_formula(o.formula()) is o


def test_entailment_matrix_shape():
    m = entailment_matrix()
    assert len(m) == 10 and all(len(row) == 9 for row in m.values())
    assert m[Order.DOWN]["child"] and m[Order.DOWN]["descendant"]
    assert m[Order.UP]["child^-1"] and not m[Order.UP]["child"]
    assert m[Order.FAR_RIGHT]["following"] and not m[Order.FAR_RIGHT]["next"]
    assert m[Order.EQUAL]["="] and not any(v for k, v in m[Order.FREE].items())
