"""Translation of counting quantifiers into plain two-variable logic.

``build_psi(c, pos, psi)`` returns a counting-free formula with free variable
x that holds at v iff at least c nodes in position ``pos`` to v satisfy psi.
``translate`` eliminates every counting quantifier of a formula, innermost
first, using these builders.

All builders share subformulas by object identity, so outputs are DAGs.  The
number of distinct nodes is ``len(list(walk(f)))``; the unshared tree size
grows much faster.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .formula_core import (FALSE, TRUE, And, Binary, Const, Count, Eq, Exists, Forall, Formula,
                      FormulaError, Implies, Nav, Not, ORDERS, Or, Order, Unary, conj, disj,
                      free_vars, has_counting, swap_vars)
from .semantics import truth_table
from .tree_model import Position, Tree

P = Position


class TranslationError(FormulaError):
    pass


# ---------------------------------------------------------------- semantic oracle

def count_in_position(t: Tree, pos: Position, v: int, psi: Formula) -> int:
    """Number of nodes w in position pos to v with t |= psi[x -> w]."""
    if not free_vars(psi) <= {"x"}:
        raise TranslationError("psi must have at most the free variable x")
    col = truth_table(t, psi)[:, 0]
    return sum(1 for w in range(t.n) if col[w] and t.in_position(pos, v, w))


# ---------------------------------------------------------------- small constructors

def _and(*parts: Formula) -> Formula:
    if any(p == FALSE for p in parts):
        return FALSE
    parts = [p for p in parts if p != TRUE]
    return conj(parts) if parts else TRUE


def _or(*parts: Formula) -> Formula:
    if any(p == TRUE for p in parts):
        return TRUE
    parts = [p for p in parts if p != FALSE]
    return disj(parts) if parts else FALSE


def _exists_y(*parts: Formula) -> Formula:
    body = _and(*parts)
    return FALSE if body == FALSE else Exists("y", body)


def _exists_x(*parts: Formula) -> Formula:
    body = _and(*parts)
    return FALSE if body == FALSE else Exists("x", body)


def _at_y(f: Formula) -> Formula:
    """The formula f(x) read at y."""
    return swap_vars(f) if "x" in free_vars(f) else f


def _at_x(f: Formula) -> Formula:
    """The formula f(y) read at x."""
    return swap_vars(f) if "y" in free_vars(f) else f


DOWN_XY = Nav("child", "x", "y")
DOWN_YX = Nav("child", "y", "x")
DESC_XY = Nav("descendant", "x", "y")
DESC_YX = Nav("descendant", "y", "x")
NEXT_XY = Nav("next", "x", "y")
NEXT_YX = Nav("next", "y", "x")
FOLL_XY = Nav("following", "x", "y")
FOLL_YX = Nav("following", "y", "x")


# ---------------------------------------------------------------- position builders

@lru_cache(maxsize=None)
def build_psi(c: int, pos: Position, psi: Formula) -> Formula:
    """Counting-free formula in x: at least c nodes in position pos satisfy psi."""
    if c < 0:
        raise TranslationError("negative count")
    if c == 0:
        return TRUE
    if psi == FALSE:
        return FALSE
    return (_base if c == 1 else _step)(c, pos, psi)


def _base(c: int, pos: Position, psi: Formula) -> Formula:
    py = _at_y(psi)
    if pos is P.STRICT_DESCENDANT:
        return _exists_y(DESC_XY, py)
    if pos is P.DESCENDANT_OR_SELF:
        return _or(psi, _exists_y(DESC_XY, py))
    if pos is P.FOLLOWING_SIBLING_SUBTREE_INCL:
        return _or(_exists_y(FOLL_XY, py), _exists_y(FOLL_XY, _exists_x(DESC_YX, psi)))
    if pos is P.DESCENDANT_OF_FOLLOWING_SIBLING:
        return _exists_y(FOLL_XY, _exists_x(DESC_YX, psi))
    if pos is P.PRECEDING_SIBLING_SUBTREE_INCL:
        return _or(_exists_y(FOLL_YX, py), _exists_y(FOLL_YX, _exists_x(DESC_YX, psi)))
    if pos is P.DESCENDANT_OF_PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, _exists_x(DESC_YX, psi))
    if pos is P.CHILD:
        return _exists_y(DOWN_XY, py)
    if pos is P.DEEP_DESCENDANT:
        return _exists_y(DESC_XY, Not(DOWN_XY), py)
    if pos is P.ANCESTOR:
        return _exists_y(DESC_YX, py)
    if pos is P.DEEP_ANCESTOR:
        return _exists_y(DESC_YX, Not(DOWN_YX), py)
    if pos is P.FOLLOWING_SIBLING:
        return _exists_y(FOLL_XY, py)
    if pos is P.PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, py)
    if pos is P.FAR_FOLLOWING_SIBLING:
        # not the closest following sibling: excludes next, not child
        return _exists_y(FOLL_XY, Not(NEXT_XY), py)
    if pos is P.FAR_PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, Not(NEXT_YX), py)
    if pos is P.SIBLING_SUBTREE:
        return _exists_y(_or(FOLL_XY, FOLL_YX), _or(py, _exists_x(DESC_YX, psi)))
    if pos is P.ANCESTOR_SIBLING_SUBTREE:
        inner = _exists_y(DESC_XY, py)
        return _exists_y(DESC_YX, _exists_x(_or(FOLL_YX, FOLL_XY), _or(psi, inner)))
    raise TranslationError(f"unknown position {pos}")  # pragma: no cover


def _split(k: int, lo: int, hi: int, first: Position, second: Position, psi: Formula) -> Formula:
    """Disjunction over i in [lo, hi] of build_psi(i, first) and build_psi(k - i, second), at y."""
    return _or(*(_and(_at_y(build_psi(i, first, psi)), _at_y(build_psi(k - i, second, psi)))
                 for i in range(lo, hi + 1)))


def _step(k: int, pos: Position, psi: Formula) -> Formula:
    py = _at_y(psi)
    rec = lambda c, p: _at_y(build_psi(c, p, psi))  # noqa: E731
    if pos is P.STRICT_DESCENDANT:
        return _exists_y(DESC_XY, _or(_and(py, rec(k - 1, P.STRICT_DESCENDANT)),
                                      _split(k, 1, k - 1, P.DESCENDANT_OR_SELF,
                                             P.FOLLOWING_SIBLING_SUBTREE_INCL, psi)))
    if pos is P.DESCENDANT_OR_SELF:
        return _or(_and(psi, build_psi(k - 1, P.STRICT_DESCENDANT, psi)),
                   build_psi(k, P.STRICT_DESCENDANT, psi))
    if pos is P.FOLLOWING_SIBLING_SUBTREE_INCL:
        return _exists_y(FOLL_XY, _split(k, 1, k, P.DESCENDANT_OR_SELF,
                                         P.FOLLOWING_SIBLING_SUBTREE_INCL, psi))
    if pos is P.DESCENDANT_OF_FOLLOWING_SIBLING:
        return _exists_y(FOLL_XY, _split(k, 1, k, P.STRICT_DESCENDANT,
                                         P.DESCENDANT_OF_FOLLOWING_SIBLING, psi))
    # preceding mirrors: the closest preceding sibling with chosen nodes carries the rest
    if pos is P.PRECEDING_SIBLING_SUBTREE_INCL:
        return _exists_y(FOLL_YX, _split(k, 1, k, P.DESCENDANT_OR_SELF,
                                         P.PRECEDING_SIBLING_SUBTREE_INCL, psi))
    if pos is P.DESCENDANT_OF_PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, _split(k, 1, k, P.STRICT_DESCENDANT,
                                         P.DESCENDANT_OF_PRECEDING_SIBLING, psi))
    if pos is P.CHILD:
        return _exists_y(DOWN_XY, py, rec(k - 1, P.FOLLOWING_SIBLING))
    if pos is P.DEEP_DESCENDANT:
        return _exists_y(DOWN_XY, _split(k, 1, k, P.STRICT_DESCENDANT,
                                         P.DESCENDANT_OF_FOLLOWING_SIBLING, psi))
    if pos is P.ANCESTOR:
        return _exists_y(DESC_YX, py, rec(k - 1, P.ANCESTOR))
    if pos is P.DEEP_ANCESTOR:
        return _exists_y(DESC_YX, Not(DOWN_YX), py, rec(k - 1, P.ANCESTOR))
    if pos is P.FOLLOWING_SIBLING:
        return _exists_y(FOLL_XY, py, rec(k - 1, P.FOLLOWING_SIBLING))
    if pos is P.PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, py, rec(k - 1, P.PRECEDING_SIBLING))
    if pos is P.FAR_FOLLOWING_SIBLING:
        return _exists_y(FOLL_XY, Not(NEXT_XY), py, rec(k - 1, P.FOLLOWING_SIBLING))
    if pos is P.FAR_PRECEDING_SIBLING:
        return _exists_y(FOLL_YX, Not(NEXT_YX), py, rec(k - 1, P.PRECEDING_SIBLING))
    if pos is P.SIBLING_SUBTREE:
        return _or(*(_and(build_psi(i, P.FOLLOWING_SIBLING_SUBTREE_INCL, psi),
                          build_psi(k - i, P.PRECEDING_SIBLING_SUBTREE_INCL, psi))
                     for i in range(0, k + 1)))
    if pos is P.ANCESTOR_SIBLING_SUBTREE:
        return _exists_y(DESC_YX, _split(k, 1, k, P.SIBLING_SUBTREE, P.ANCESTOR_SIBLING_SUBTREE, psi))
    raise TranslationError(f"unknown position {pos}")  # pragma: no cover


# ---------------------------------------------------------------- counting elimination

_SINGLE = frozenset([Order.UP, Order.RIGHT, Order.LEFT, Order.EQUAL])
_POSITION_OF = {
    Order.DOWN: P.CHILD,
    Order.DEEP_DOWN: P.DEEP_DESCENDANT,
    Order.DEEP_UP: P.DEEP_ANCESTOR,
    Order.FAR_RIGHT: P.FAR_FOLLOWING_SIBLING,
    Order.FAR_LEFT: P.FAR_PRECEDING_SIBLING,
}
_FREE_PARTS = (P.ANCESTOR_SIBLING_SUBTREE, P.DESCENDANT_OF_FOLLOWING_SIBLING,
               P.DESCENDANT_OF_PRECEDING_SIBLING)


def _substitute(f: Formula, theta: Order) -> Formula:
    """Fix the x/y navigational and equality atoms of f to their value under theta.

    Quantified subformulas are left alone; for Equal, y is identified with x.
    """
    if isinstance(f, Nav):
        if f.v1 == f.v2:
            return FALSE
        return TRUE if theta.nav_truth(f.kind, f.v1 == "x") else FALSE
    if isinstance(f, Eq):
        return TRUE if f.v1 == f.v2 or theta is Order.EQUAL else FALSE
    if theta is Order.EQUAL and "y" in free_vars(f):
        if isinstance(f, Unary):
            return Unary(f.sym, "x")
        if isinstance(f, (Exists, Forall, Count)):
            return swap_vars(f)
    if isinstance(f, Not):
        return Not(_substitute(f.arg, theta))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_substitute(f.left, theta), _substitute(f.right, theta))
    if isinstance(f, Binary):
        raise TranslationError("common binary atoms are not supported by the translation")
    return f


def _fold(f: Formula, fixed: dict) -> Formula:
    """Constant folding, with the literals in ``fixed`` replaced by their value."""
    if f in fixed:
        return TRUE if fixed[f] else FALSE
    if isinstance(f, Not):
        a = _fold(f.arg, fixed)
        return (FALSE if a.value else TRUE) if isinstance(a, Const) else Not(a)
    if isinstance(f, Implies):
        return _fold(Or(Not(f.left), f.right), fixed)
    if isinstance(f, And):
        return _and(_fold(f.left, fixed), _fold(f.right, fixed))
    if isinstance(f, Or):
        return _or(_fold(f.left, fixed), _fold(f.right, fixed))
    return f


def _x_literals(f: Formula) -> list[Formula]:
    """Maximal non-boolean subformulas of f that do not mention y, in first-seen order."""
    out: list[Formula] = []
    seen = set()

    def go(g: Formula) -> None:
        if isinstance(g, (Not, And, Or, Implies)):
            for c in g.children():
                go(c)
        elif isinstance(g, Const):
            return
        elif "y" not in free_vars(g) and g not in seen:
            seen.add(g)
            out.append(g)

    go(f)
    return out


def _at_least_in_order(k: int, theta: Order, psi_y: Formula) -> Formula:
    """At least k nodes y in order theta to x satisfy psi_y (a formula in y only)."""
    if k == 0:
        return TRUE
    if psi_y == FALSE:
        return FALSE
    if theta in _SINGLE:
        if k > 1:
            return FALSE
        if theta is Order.EQUAL:
            return psi_y
        return _exists_y(theta.formula(), psi_y)
    psi = _at_x(psi_y)
    if theta is Order.FREE:
        return _at_least_split(k, [lambda c, p=p: build_psi(c, p, psi) for p in _FREE_PARTS])
    return build_psi(k, _POSITION_OF[theta], psi)


def _at_least_split(k: int, parts) -> Formula:
    """At least k in a disjoint union: disjunction over splits of k among the parts.

    Shares the partial sums so the result stays polynomial in k and len(parts).
    """
    memo: dict[tuple[int, int], Formula] = {}

    def go(j: int, r: int) -> Formula:
        if r == 0:
            return TRUE
        if j == len(parts):
            return FALSE
        key = (j, r)
        if key not in memo:
            memo[key] = _or(*(_and(parts[j](i), go(j + 1, r - i)) for i in range(r + 1)))
        return memo[key]

    return go(0, k)


def _count_geq(k: int, body: Formula) -> Formula:
    """Counting-free equivalent of count>= k y body, for counting-free body."""
    if k == 0:
        return TRUE
    per_order = {o: _substitute(body, o) for o in ORDERS}
    xlits: list[Formula] = []
    for o in ORDERS:
        if o is not Order.EQUAL:
            for lit in _x_literals(per_order[o]):
                if lit not in xlits:
                    xlits.append(lit)
    cases = []
    for bits in itertools.product((True, False), repeat=len(xlits)):
        fixed = dict(zip(xlits, bits))
        guard = _and(*(l if b else Not(l) for l, b in fixed.items()))
        parts = []
        for o in ORDERS:
            if o is Order.EQUAL:
                psi_eq = _fold(per_order[o], {})
                parts.append(lambda c, f=psi_eq: f if c == 1 else (TRUE if c == 0 else FALSE))
            else:
                psi_o = _fold(per_order[o], fixed)
                parts.append(lambda c, o=o, f=psi_o: _at_least_in_order(c, o, f))
        cases.append(_and(guard, _at_least_split(k, parts)))
    return _or(*cases)


def translate(f: Formula) -> Formula:
    """Equivalent formula without counting quantifiers (same free variables)."""
    if not has_counting(f):
        return f
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        if g in memo:
            return memo[g]
        if isinstance(g, Binary):
            raise TranslationError("common binary atoms are not supported by the translation")
        if isinstance(g, Not):
            r = Not(go(g.arg))
        elif isinstance(g, (And, Or, Implies)):
            r = type(g)(go(g.left), go(g.right))
        elif isinstance(g, (Exists, Forall)):
            r = type(g)(g.var, go(g.body))
        elif isinstance(g, Count):
            body = go(g.body)
            if g.var == "x":
                r = swap_vars(_count(g.op, g.n, swap_vars(body)))
            else:
                r = _count(g.op, g.n, body)
            other = "y" if g.var == "x" else "x"
            if other not in free_vars(g):
                # the positional split needs an anchor; any node works when none is bound
                r = Exists(other, r)
        else:
            r = g
        memo[g] = r
        return r

    return go(f)


def _count(op: str, n: int, body: Formula) -> Formula:
    if op == ">=":
        return _count_geq(n, body)
    if op == "<=":
        return _neg(_count_geq(n + 1, body))
    return _and(_count_geq(n, body), _neg(_count_geq(n + 1, body)))


def _neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    return Not(f)


def equivalent_on(t: Tree, f: Formula, g: Formula) -> bool:
    """f and g agree on every assignment of x and y in t."""
    return bool(np.array_equal(truth_table(t, f), truth_table(t, g)))
