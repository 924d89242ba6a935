"""Model checking, full types, witness counts and the type-based evaluation path."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .formula_core import (And, Binary, Const, Count, Eq, Exists, Forall, Formula, FormulaError, Implies,
                      Nav, Not, ORDERS, Or, Order, Unary, free_vars)
from .tree_model import Tree
from .type_system import (INF, CountValue, KMultiset, OneType, TwoType, add_counts, count_leq, cut,
                    mset_union, mset_union_all)


class SemanticsError(Exception):
    pass


# ---------------------------------------------------------------- model checking

def truth_table(t: Tree, f: Formula, cache: dict | None = None) -> np.ndarray:
    """Boolean matrix M with M[u, w] = truth of f under x -> u, y -> w."""
    n = t.n
    nav = t.nav_matrices
    cache = {} if cache is None else cache
    ones = np.ones((n, n), dtype=bool)
    labels = {s: np.array([s in l for l in t.labels], dtype=bool) for s in t.sig.unary}
    edges = {}
    for r in t.sig.binary:
        m = np.zeros((n, n), dtype=bool)
        for a, b in t.edges[r]:
            m[a, b] = True
        edges[r] = m

    def rel(m: np.ndarray, a: str, b: str) -> np.ndarray:
        if a == "x" and b == "y":
            return m
        if a == "y" and b == "x":
            return m.T
        d = np.diag(m)
        return np.broadcast_to(d[:, None] if a == "x" else d[None, :], (n, n))

    def go(g: Formula) -> np.ndarray:
        key = id(g)
        hit = cache.get(key)
        if hit is not None and hit[0] is g:
            return hit[1]
        if isinstance(g, Const):
            r = ones if g.value else ~ones
        elif isinstance(g, Unary):
            if g.sym not in labels:
                raise SemanticsError(f"symbol {g.sym!r} not in the tree's signature")
            col = labels[g.sym]
            r = np.broadcast_to(col[:, None] if g.var == "x" else col[None, :], (n, n))
        elif isinstance(g, Binary):
            if g.sym not in edges:
                raise SemanticsError(f"symbol {g.sym!r} not in the tree's signature")
            r = rel(edges[g.sym], g.v1, g.v2)
        elif isinstance(g, Nav):
            r = rel(nav[g.kind], g.v1, g.v2)
        elif isinstance(g, Eq):
            r = np.eye(n, dtype=bool) if g.v1 != g.v2 else ones
        elif isinstance(g, Not):
            r = ~go(g.arg)
        elif isinstance(g, And):
            r = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            r = go(g.left) | go(g.right)
        elif isinstance(g, Implies):
            r = ~go(g.left) | go(g.right)
        elif isinstance(g, (Exists, Forall, Count)):
            b = go(g.body)
            axis = 1 if g.var == "y" else 0
            if isinstance(g, Exists):
                v = b.any(axis=axis)
            elif isinstance(g, Forall):
                v = b.all(axis=axis)
            else:
                s = b.sum(axis=axis)
                v = s >= g.n if g.op == ">=" else s <= g.n if g.op == "<=" else s == g.n
            r = np.broadcast_to(v[:, None] if g.var == "y" else v[None, :], (n, n))
        else:  # pragma: no cover
            raise SemanticsError(f"unknown formula node {g!r}")
        cache[key] = (g, r)
        return r

    return go(f)


def model_check(t: Tree, f: Formula, env: Mapping[str, int] | None = None) -> bool:
    env = dict(env or {})
    missing = free_vars(f) - set(env)
    if missing:
        raise SemanticsError(f"unbound free variable(s): {', '.join(sorted(missing))}")
    for v, node in env.items():
        if not 0 <= node < t.n:
            raise SemanticsError(f"node {node} out of range")
    m = truth_table(t, f)
    return bool(m[env.get("x", 0), env.get("y", 0)])


# ---------------------------------------------------------------- quantifier-free entailment

@lru_cache(maxsize=1 << 18)
def holds_qf(chi: Formula, left: OneType, right: OneType, order: Order,
             cross: tuple[tuple[bool, bool], ...] = ()) -> bool:
    """Truth of quantifier-free chi under the atom assignment of a pair.

    x has 1-type left, y has 1-type right, their relative position is order
    and cross lists (R(x,y), R(y,x)) per common binary symbol (absent means
    all false).  For order Equal, right must equal left.
    """
    sig = left.sig
    binary = sig.binary

    def one(var: str) -> OneType:
        return left if var == "x" else right

    def bin_holds(sym: str, a: str, b: str) -> bool:
        if a == b or order is Order.EQUAL:
            return sym in one(a).loops
        if not cross:
            return False
        i = binary.index(sym)
        return cross[i][0] if a == "x" else cross[i][1]

    def go(g: Formula) -> bool:
        if isinstance(g, Const):
            return g.value
        if isinstance(g, Unary):
            return g.sym in one(g.var).unary
        if isinstance(g, Binary):
            return bin_holds(g.sym, g.v1, g.v2)
        if isinstance(g, Nav):
            if g.v1 == g.v2:
                return False
            return order.nav_truth(g.kind, g.v1 == "x")
        if isinstance(g, Eq):
            return g.v1 == g.v2 or order is Order.EQUAL
        if isinstance(g, Not):
            return not go(g.arg)
        if isinstance(g, And):
            return go(g.left) and go(g.right)
        if isinstance(g, Or):
            return go(g.left) or go(g.right)
        if isinstance(g, Implies):
            return (not go(g.left)) or go(g.right)
        raise SemanticsError("formula is not quantifier-free")

    return go(chi)


def two_type_holds(chi: Formula, beta: TwoType) -> bool:
    return holds_qf(chi, beta.left, beta.right, beta.order, beta.cross)


# ---------------------------------------------------------------- full types

_SINGLETON_POSITIONS = (Order.UP, Order.RIGHT, Order.LEFT)
_PROPAGATION = ((Order.UP, Order.DEEP_UP), (Order.DOWN, Order.DEEP_DOWN),
                (Order.RIGHT, Order.FAR_RIGHT), (Order.LEFT, Order.FAR_LEFT))


class FullType:
    """Per-position k-multisets of 1-types around a node."""

    __slots__ = ("k", "positions", "_h")

    def __init__(self, k: int, positions: Mapping[Order, KMultiset] | tuple):
        self.k = k
        if isinstance(positions, Mapping):
            positions = tuple(positions.get(o, KMultiset(k)) for o in ORDERS)
        if len(positions) != len(ORDERS):
            raise SemanticsError("a full type has one multiset per order formula")
        for m in positions:
            if m.k != k:
                raise SemanticsError(f"cutoff mismatch: {m.k} vs {k}")
        self.positions = tuple(positions)
        self._h = hash((k, self.positions))

    def __getitem__(self, o: Order) -> KMultiset:
        return self.positions[o.index]

    @property
    def alpha(self) -> OneType:
        eq = self[Order.EQUAL]
        if len(eq) != 1:
            raise SemanticsError("Equal component must be a singleton")
        return eq.support()[0]

    def replace(self, **changes: KMultiset) -> "FullType":
        pos = list(self.positions)
        for name, m in changes.items():
            pos[Order[name.upper()].index] = m
        return FullType(self.k, tuple(pos))

    def with_positions(self, changes: Mapping[Order, KMultiset]) -> "FullType":
        pos = list(self.positions)
        for o, m in changes.items():
            pos[o.index] = m
        return FullType(self.k, tuple(pos))

    def is_well_formed(self) -> bool:
        """Singleton and emptiness-propagation constraints."""
        eq = self[Order.EQUAL]
        if len(eq) != 1 or eq.items()[0][1] != cut(self.k, 1):
            return False
        for o in _SINGLETON_POSITIONS:
            m = self[o]
            if m and (len(m) != 1 or m.items()[0][1] != cut(self.k, 1)):
                return False
        for near, far in _PROPAGATION:
            if not self[near] and self[far]:
                return False
        return True

    def __eq__(self, other):
        return isinstance(other, FullType) and self._h == other._h and self.k == other.k \
            and self.positions == other.positions

    def __hash__(self):
        return self._h

    def __str__(self) -> str:
        parts = [f"{o}={self[o]}" for o in ORDERS if self[o]]
        return "FullType(" + ", ".join(parts) + ")"

    __repr__ = __str__


def _require_no_binaries(t: Tree) -> None:
    if t.sig.binary:
        raise SemanticsError("full types are defined for signatures without common binary symbols")


def full_type(t: Tree, k: int, v: int) -> FullType:
    _require_no_binaries(t)
    if not 0 <= v < t.n:
        raise SemanticsError(f"node {v} out of range")
    counts: list[dict[OneType, int]] = [{} for _ in ORDERS]
    row = t.order_matrix[v]
    ones = t.one_types
    for w in range(t.n):
        d = counts[row[w].index]
        d[ones[w]] = d.get(ones[w], 0) + 1
    return FullType(k, tuple(KMultiset.from_counts(k, c) for c in counts))


def all_full_types(t: Tree, k: int) -> list[FullType]:
    return [full_type(t, k, v) for v in range(t.n)]


# ---------------------------------------------------------------- witness counting

_SINGLETON_W = frozenset([Order.EQUAL, Order.RIGHT, Order.LEFT, Order.UP])


def witness_counts(phi, a: FullType) -> tuple[tuple[CountValue, ...], ...]:
    """Table W[i][order.index] of witnesses per conjunct and position.

    Equal, Up, Right and Left hold at most one node and contribute 0 or 1.
    All other positions, Down included, contribute the saturated number of
    nodes whose 1-type makes the conjunct's matrix true.
    """
    c = phi.C
    if a.k != c:
        raise SemanticsError(f"cutoff mismatch: full type has k={a.k}, formula needs {c}")
    alpha = a.alpha
    table = []
    for _, _, chi_i in phi.conjuncts:
        row: list[CountValue] = []
        for o in ORDERS:
            m = a[o]
            if o in _SINGLETON_W:
                s = m.singleton() if c > 0 else (m.support()[0] if len(m) == 1 else None)
                row.append(1 if s is not None and holds_qf(chi_i, alpha, s, o) else 0)
            else:
                total: CountValue = 0
                for beta, cnt in m.items():
                    if holds_qf(chi_i, alpha, beta, o):
                        total = add_counts(total, cnt)
                row.append(cut(c, total))
        table.append(tuple(row))
    return tuple(table)


def _compare(op: str, value: CountValue, bound: int) -> bool:
    if op == ">=":
        return value is INF or value >= bound
    return count_leq(value, bound)


def is_phi_consistent(phi, a: FullType) -> bool:
    alpha = a.alpha
    if not holds_qf(phi.chi, alpha, alpha, Order.EQUAL):
        return False
    for o in ORDERS:
        for beta in a[o].support():
            if not holds_qf(phi.chi, alpha, beta, o):
                return False
    for (op, bound, _), row in zip(phi.conjuncts, witness_counts(phi, a)):
        total: CountValue = 0
        for v in row:
            total = add_counts(total, v)
        if not _compare(op, total, bound):
            return False
    return True


def check_via_types(t: Tree, phi) -> bool:
    _require_no_binaries(t)
    k = phi.C
    return all(is_phi_consistent(phi, full_type(t, k, v)) for v in range(t.n))


# ---------------------------------------------------------------- reduced, horizontal, combined

@dataclass(frozen=True)
class ReducedType:
    alpha: OneType
    wct: tuple
    above: KMultiset
    below: KMultiset
    free: KMultiset


def reduce(phi, a: FullType) -> ReducedType:
    k = a.k
    if k != phi.C:
        raise SemanticsError(f"cutoff mismatch: full type has k={k}, formula needs {phi.C}")
    above = mset_union(a[Order.UP], a[Order.DEEP_UP])
    below = mset_union(a[Order.DOWN], a[Order.DEEP_DOWN])
    free = mset_union_all(k, [a[Order.RIGHT], a[Order.LEFT], a[Order.FAR_RIGHT], a[Order.FAR_LEFT],
                              a[Order.FREE]])
    return ReducedType(a.alpha, witness_counts(phi, a), above, below, free)


HORIZONTAL_ORDERS = (Order.EQUAL, Order.RIGHT, Order.FAR_RIGHT, Order.LEFT, Order.FAR_LEFT)


def horizontal(a: FullType) -> tuple[KMultiset, ...]:
    return tuple(a[o] for o in HORIZONTAL_ORDERS)


_FROM_UPPER = (Order.UP, Order.DEEP_UP, Order.RIGHT, Order.FAR_RIGHT, Order.FREE, Order.LEFT,
               Order.FAR_LEFT)


def combine(a: FullType, b: FullType) -> FullType:
    """Upper, sibling and free positions from a; Equal, Down and DeepDown from b."""
    if a.k != b.k:
        raise SemanticsError(f"cutoff mismatch: {a.k} vs {b.k}")
    return FullType(a.k, tuple(a[o] if o in _FROM_UPPER else b[o] for o in ORDERS))
