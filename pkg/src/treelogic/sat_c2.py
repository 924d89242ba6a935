"""Finite satisfiability for C2 over trees by a search over full types.

The alternating procedure is run deterministically: the root's full type and
each node's children are guessed by enumeration, the universal choice of a
child becomes a loop over all children.  Only the children's Down and
DeepDown components are enumerated; every other component of a child's full
type is determined by its parent and siblings.

Search results are memoized on (full type, remaining depth).  A full type
that repeats on the current path is skipped: any finite subtree below the
lower copy could replace the upper one, so a smallest accepted tree never
repeats a full type on a path.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .formula_core import And, Const, Eq, Implies, Nav, Not, Or, Order, Signature, Unary
from .normalizer import NormalFormC2, used_signature
from .semantics import (FullType, SemanticsError, full_type, holds_qf, horizontal,
                        is_phi_consistent, model_check, reduce)
from .tree_model import Tree
from .type_system import (INF, CountValue, KMultiset, OneType, cut, enumerate_one_types, mset_union,
                    mset_union_all)
from .verdict import Deadline, Mode, Outcome, Timeout, Verdict

O = Order


class C2Error(Exception):
    pass


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class C2Bounds:
    max_depth: int
    max_degree: int
    mode: Mode = Mode.BOUNDED


def alpha_size(phi: NormalFormC2) -> int:
    """Number of 1-types over the symbols occurring in phi."""
    sig = used_signature(phi)
    return 2 ** (len(sig.unary) + len(sig.binary))


def max_depth_bound(c: int, m: int, n_alpha: int) -> int:
    return 3 * (c + 2) ** (10 * m + 1) * n_alpha ** 2


def max_degree_bound(c: int, n_alpha: int) -> int:
    return (4 * c * c + 8 * c) * n_alpha ** 5


def c2_bounds(phi: NormalFormC2) -> C2Bounds:
    n = alpha_size(phi)
    return C2Bounds(max_depth_bound(phi.C, phi.m, n), max_degree_bound(phi.C, n), Mode.SOUND)


# ---------------------------------------------------------------- local consistency

def _empty(k: int) -> KMultiset:
    return KMultiset(k)


def locally_consistent(a: FullType, children: Sequence[FullType]) -> bool:
    """Parent and ordered children full types fit together.

    Checks the sibling chaining of Left/FarLeft and Right/FarRight, the
    parent's Down and DeepDown against the children, each child's Up and
    DeepUp against the parent, and each child's Free against the parent's
    free and sibling parts plus the other children's subtrees.
    """
    k = a.k
    if any(c.k != k for c in children):
        raise SemanticsError("cutoff mismatch")
    e = _empty(k)
    n = len(children)
    for i, c in enumerate(children):
        if c[O.LEFT] != (children[i - 1][O.EQUAL] if i > 0 else e):
            return False
        if c[O.FAR_LEFT] != (mset_union(children[i - 1][O.LEFT], children[i - 1][O.FAR_LEFT])
                             if i > 0 else e):
            return False
        if c[O.RIGHT] != (children[i + 1][O.EQUAL] if i < n - 1 else e):
            return False
        if c[O.FAR_RIGHT] != (mset_union(children[i + 1][O.RIGHT], children[i + 1][O.FAR_RIGHT])
                              if i < n - 1 else e):
            return False
    if a[O.DOWN] != mset_union_all(k, (c[O.EQUAL] for c in children)):
        return False
    below = [mset_union(c[O.DOWN], c[O.DEEP_DOWN]) for c in children]
    if a[O.DEEP_DOWN] != mset_union_all(k, below):
        return False
    upper = mset_union(a[O.UP], a[O.DEEP_UP])
    outside = mset_union_all(k, (a[O.FREE], a[O.LEFT], a[O.RIGHT], a[O.FAR_LEFT], a[O.FAR_RIGHT]))
    for i, c in enumerate(children):
        if c[O.UP] != a[O.EQUAL] or c[O.DEEP_UP] != upper:
            return False
        others = mset_union_all(k, (b for j, b in enumerate(below) if j != i))
        if c[O.FREE] != mset_union(outside, others):
            return False
    return True


# ---------------------------------------------------------------- enumeration helpers

def _weight(v: CountValue, k: int) -> int:
    return k + 1 if v is INF else v


def _multisets_by_weight(k: int, universe: Sequence[OneType], weight: int) -> Iterator[dict]:
    """Maps universe -> {1..k, INF} (zeros omitted) of exact total weight, INF weighing k+1."""
    values: list[CountValue] = list(range(1, k + 1)) + [INF]

    def rec(i: int, left: int, acc: dict) -> Iterator[dict]:
        if left == 0:
            yield dict(acc)
            return
        if i == len(universe):
            return
        yield from rec(i + 1, left, acc)
        for v in values:
            w = _weight(v, k)
            if w <= left:
                acc[universe[i]] = v
                yield from rec(i + 1, left - w, acc)
                del acc[universe[i]]

    yield from rec(0, weight, {})


def _distinct_permutations(items: list) -> Iterator[tuple]:
    """Distinct orderings of a list of sortable items, lexicographic."""
    items = sorted(items)
    n = len(items)
    if n == 0:
        yield ()
        return
    while True:
        yield tuple(items)
        i = n - 2
        while i >= 0 and not items[i] < items[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while not items[i] < items[j]:
            j -= 1
        items[i], items[j] = items[j], items[i]
        items[i + 1:] = reversed(items[i + 1:])


def _split_counts(target: CountValue, slots: int, k: int) -> Iterator[tuple]:
    """Tuples of per-slot saturated counts whose saturated sum is target."""
    if target is INF:
        values: list[CountValue] = list(range(0, k + 1)) + [INF]
        # order by total weight so small witnesses come first
        combos = sorted(itertools.product(values, repeat=slots),
                        key=lambda c: sum(_weight(v, k) for v in c))
        for combo in combos:
            if any(v is INF for v in combo) or sum(combo) > k:
                yield combo
        return

    def rec(i: int, left: int) -> Iterator[tuple]:
        if i == slots - 1:
            yield (left,)
            return
        for v in range(left + 1):
            for rest in rec(i + 1, left - v):
                yield (v,) + rest

    if slots == 0:
        if target == 0:
            yield ()
        return
    yield from rec(0, target)


# ---------------------------------------------------------------- the search

@dataclass
class _Node:
    alpha: OneType
    children: list
    height: int


class _Search:
    def __init__(self, phi: NormalFormC2, bounds: C2Bounds, deadline: Deadline):
        self.phi = phi
        self.k = phi.C
        self.bounds = bounds
        self.deadline = deadline
        self.sig = used_signature(phi)
        # fewest atoms first: fresh predicates are rarely needed
        self.universe = sorted((t for t in enumerate_one_types(self.sig)
                                if holds_qf(phi.chi, t, t, O.EQUAL) and not self._self_excluded(t)),
                               key=lambda t: (len(t.unary) + len(t.loops), t.index))
        self.masks = {s: np.array([s in t.unary for t in self.universe], dtype=bool)
                      for s in self.sig.unary}
        self._allowed: dict[tuple[OneType, Order], frozenset] = {}
        self.ok: dict[FullType, _Node] = {}
        self.failed: dict[FullType, int] = {}
        self.consistent: dict[FullType, bool] = {}
        self.path: set[FullType] = set()
        self.cycle_cuts = 0
        self.explored = 0

    # -- helpers
    def _self_excluded(self, t: OneType) -> bool:
        """A node of type t would be its own forbidden witness for a <= 0 conjunct."""
        return any(op == "<=" and c == 0 and holds_qf(chi_i, t, t, O.EQUAL)
                   for op, c, chi_i in self.phi.conjuncts)

    def allowed(self, alpha: OneType, o: Order) -> frozenset:
        """1-types b that may sit in position o of alpha according to chi."""
        key = (alpha, o)
        r = self._allowed.get(key)
        if r is None:
            chi = self.phi.chi
            ok = (_eval_against(chi, alpha, "x", o, self.masks, len(self.universe))
                  & _eval_against(chi, alpha, "y", o.inverse, self.masks, len(self.universe)))
            r = frozenset(self.universe[i] for i in np.flatnonzero(ok))
            self._allowed[key] = r
        return r

    def single(self, t: OneType) -> KMultiset:
        return KMultiset(self.k, {t: cut(self.k, 1)})

    def ordered(self, types: frozenset) -> list[OneType]:
        return [t for t in self.universe if t in types]

    def is_consistent(self, a: FullType) -> bool:
        r = self.consistent.get(a)
        if r is None:
            r = is_phi_consistent(self.phi, a)
            self.consistent[a] = r
        return r

    def fits(self, alpha: OneType, o: Order, m: KMultiset) -> bool:
        allowed = self.allowed(alpha, o)
        return all(t in allowed for t in m.support())

    # -- node expansion
    def solve(self, a: FullType, depth_left: int) -> _Node | None:
        self.deadline.check()
        self.explored += 1
        hit = self.ok.get(a)
        if hit is not None and hit.height <= depth_left:
            return hit
        if self.failed.get(a, -1) >= depth_left:
            return None
        if not self.is_consistent(a):
            self.failed[a] = sys.maxsize
            return None
        if not a[O.DOWN] and not a[O.DEEP_DOWN]:
            node = _Node(a.alpha, [], 0)
            self.ok[a] = node
            return node
        if depth_left == 0 or (a[O.DEEP_DOWN] and depth_left == 1):
            self.failed[a] = max(self.failed.get(a, -1), depth_left)
            return None
        if a in self.path:
            self.cycle_cuts += 1
            return None
        cuts_before = self.cycle_cuts
        self.path.add(a)
        try:
            for kids in self.children_options(a, depth_left):
                nodes = []
                for c in kids:
                    r = self.solve(c, depth_left - 1)
                    if r is None:
                        break
                    nodes.append(r)
                else:
                    node = _Node(a.alpha, nodes, 1 + max(n.height for n in nodes))
                    self.ok[a] = node
                    return node
        finally:
            self.path.discard(a)
        if self.cycle_cuts == cuts_before:
            self.failed[a] = max(self.failed.get(a, -1), depth_left)
        return None

    def sequences(self, a: FullType) -> Iterator[tuple[OneType, ...]]:
        """Orderings of children 1-types matching the parent's Down component."""
        k = self.k
        down = a[O.DOWN]
        finite = {t: v for t, v in down.items() if v is not INF}
        infinite = [t for t, v in down.items() if v is INF]
        base = sum(finite.values())
        max_deg = self.bounds.max_degree
        lo = base + (k + 1) * len(infinite)
        hi = max_deg if infinite else base
        for n in range(lo, min(hi, max_deg) + 1):
            extra = n - lo
            for add in _compositions(extra, len(infinite)):
                counts = dict(finite)
                for t, e in zip(infinite, add):
                    counts[t] = k + 1 + e
                items = [t for t, c in counts.items() for _ in range(c)]
                yield from _distinct_permutations(items)

    def children_options(self, a: FullType, depth_left: int) -> Iterator[list[FullType]]:
        k = self.k
        e = _empty(k)
        alpha = a.alpha
        upper = mset_union(a[O.UP], a[O.DEEP_UP])
        outside = mset_union_all(k, (a[O.FREE], a[O.LEFT], a[O.RIGHT], a[O.FAR_LEFT], a[O.FAR_RIGHT]))
        target = a[O.DEEP_DOWN]
        for seq in self.sequences(a):
            self.deadline.check()
            n = len(seq)
            eqs = [self.single(t) for t in seq]
            lefts = [eqs[i - 1] if i > 0 else e for i in range(n)]
            rights = [eqs[i + 1] if i < n - 1 else e for i in range(n)]
            far_lefts = [e] * n
            for i in range(2, n):
                far_lefts[i] = mset_union(far_lefts[i - 1], eqs[i - 2])
            far_rights = [e] * n
            for i in range(n - 3, -1, -1):
                far_rights[i] = mset_union(far_rights[i + 1], eqs[i + 2])
            fixed_ok = all(
                self.fits(t, O.UP, a[O.EQUAL]) and self.fits(t, O.DEEP_UP, upper)
                and self.fits(t, O.LEFT, lefts[i]) and self.fits(t, O.RIGHT, rights[i])
                and self.fits(t, O.FAR_LEFT, far_lefts[i]) and self.fits(t, O.FAR_RIGHT, far_rights[i])
                and self.fits(t, O.FREE, outside)
                for i, t in enumerate(seq))
            if not fixed_ok:
                continue
            for downs, deeps in self.below_splits(seq, target, depth_left - 1):
                self.deadline.check()
                belows = [mset_union(d, dd) for d, dd in zip(downs, deeps)]
                kids = []
                for i, t in enumerate(seq):
                    others = mset_union_all(k, (b for j, b in enumerate(belows) if j != i))
                    free = mset_union(outside, others)
                    if not self.fits(t, O.FREE, free):
                        break
                    c = FullType(k, {O.EQUAL: eqs[i], O.UP: a[O.EQUAL], O.DEEP_UP: upper,
                                     O.LEFT: lefts[i], O.FAR_LEFT: far_lefts[i],
                                     O.RIGHT: rights[i], O.FAR_RIGHT: far_rights[i],
                                     O.DOWN: downs[i], O.DEEP_DOWN: deeps[i], O.FREE: free})
                    if not self.is_consistent(c):
                        break
                    kids.append(c)
                else:
                    yield kids

    def below_splits(self, seq: tuple, target: KMultiset, child_depth: int
                     ) -> Iterator[tuple[list[KMultiset], list[KMultiset]]]:
        """Down and DeepDown per child whose combined union equals target."""
        k = self.k
        n = len(seq)
        if not target:
            yield [KMultiset(k)] * n, [KMultiset(k)] * n
            return
        if child_depth == 0:
            return
        types = list(target.support())
        # slot j < n is child j's Down, slot n + j its DeepDown
        slot_ok = []
        for t in types:
            row = [t in self.allowed(seq[j], O.DOWN) for j in range(n)]
            row += [child_depth >= 2 and t in self.allowed(seq[j], O.DEEP_DOWN) for j in range(n)]
            slot_ok.append(row)
        live = [[j for j in range(2 * n) if slot_ok[i][j]] for i in range(len(types))]

        def rec(i: int, acc: list[dict]) -> Iterator[tuple[list, list]]:
            if i == len(types):
                downs = [KMultiset(k, acc[j]) for j in range(n)]
                deeps = [KMultiset(k, acc[n + j]) for j in range(n)]
                if all(downs[j] or not deeps[j] for j in range(n)):
                    yield downs, deeps
                return
            t = types[i]
            slots = live[i]
            for values in _split_counts(target[t], len(slots), k):
                for j, v in zip(slots, values):
                    if v != 0:
                        acc[j][t] = v
                yield from rec(i + 1, acc)
                for j in slots:
                    acc[j].pop(t, None)

        yield from rec(0, [dict() for _ in range(2 * n)])

    def roots(self) -> Iterator[FullType]:
        k = self.k
        e = _empty(k)
        depth = self.bounds.max_depth
        cap = len(self.universe) * (k + 1)
        max_down = 0 if depth == 0 else min(cap, self.bounds.max_degree)
        max_deep = 0 if depth <= 1 else cap
        for total in range(0, max_down + max_deep + 1):
            for wd in range(0, min(total, max_down) + 1):
                wdd = total - wd
                if wdd > max_deep or (wdd > 0 and wd == 0):
                    continue
                for alpha in self.universe:
                    downs = self.ordered(self.allowed(alpha, O.DOWN))
                    deeps = self.ordered(self.allowed(alpha, O.DEEP_DOWN))
                    for d in _multisets_by_weight(k, downs, wd):
                        if sum(v for v in d.values() if v is not INF) + \
                                sum(k + 1 for v in d.values() if v is INF) > self.bounds.max_degree:
                            continue
                        for dd in _multisets_by_weight(k, deeps, wdd):
                            self.deadline.check()
                            yield FullType(k, {O.EQUAL: self.single(alpha), O.DOWN: KMultiset(k, d),
                                               O.DEEP_DOWN: KMultiset(k, dd)})


def _eval_against(chi, alpha: OneType, fixed: str, order: Order,
                  masks: dict[str, np.ndarray], n: int) -> np.ndarray:
    """Truth of binary-free chi for every universe type at the other variable.

    The variable named fixed has 1-type alpha; order is the position of y
    relative to x.
    """
    def go(g) -> np.ndarray | bool:
        if isinstance(g, Const):
            return g.value
        if isinstance(g, Unary):
            return g.sym in alpha.unary if g.var == fixed else masks[g.sym]
        if isinstance(g, Nav):
            return g.v1 != g.v2 and order.nav_truth(g.kind, g.v1 == "x")
        if isinstance(g, Eq):
            return g.v1 == g.v2 or order is O.EQUAL
        if isinstance(g, Not):
            v = go(g.arg)
            return ~v if isinstance(v, np.ndarray) else not v
        if isinstance(g, (And, Or, Implies)):
            a, b = go(g.left), go(g.right)
            if isinstance(g, Implies):
                a = ~a if isinstance(a, np.ndarray) else not a
            return a & b if isinstance(g, And) else a | b
        raise C2Error(f"unexpected atom in chi: {g!r}")

    r = go(chi)
    return r if isinstance(r, np.ndarray) else np.full(n, bool(r))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for v in range(total + 1):
        for rest in _compositions(total - v, parts - 1):
            yield (v,) + rest


def _to_tree(node: _Node, sig: Signature) -> Tree:
    def nested(n: _Node):
        return (n.alpha.unary, [nested(c) for c in n.children])

    return Tree.from_nested(nested(node), sig)


def sat_c2(phi: NormalFormC2, bounds: C2Bounds | None = None,
           timeout: float | None = None) -> Verdict:
    """Search for a finite tree model of phi within bounds."""
    if used_signature(phi).binary:
        raise C2Error("the C2 procedure needs a signature without common binary symbols")
    bounds = bounds or c2_bounds(phi)
    deadline = Deadline(timeout)
    search = _Search(phi, bounds, deadline)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        for root in search.roots():
            node = search.solve(root, bounds.max_depth)
            if node is not None:
                tree = _to_tree(node, Signature(phi.sig.unary, ()))
                if not model_check(tree, phi.to_formula()):
                    raise C2Error("internal error: reconstructed tree is not a model")
                return Verdict(Outcome.SAT, bounds, tree, _stats(search, deadline))
    except Timeout:
        return Verdict(Outcome.TIMEOUT, bounds, None, _stats(search, deadline))
    finally:
        sys.setrecursionlimit(old_limit)
    outcome = Outcome.UNSAT_PROVED if bounds.mode is Mode.SOUND else Outcome.UNSAT_WITHIN_BOUNDS
    return Verdict(outcome, bounds, None, _stats(search, deadline))


def _stats(search: _Search, deadline: Deadline) -> dict:
    return {"nodes_explored": search.explored, "full_types_cached": len(search.consistent),
            "seconds": round(deadline.elapsed(), 3)}


# ---------------------------------------------------------------- model surgery

def _rebuild(t: Tree, order: list[int], parent_of: dict[int, int]) -> Tree:
    index = {old: new for new, old in enumerate(order)}
    parents = [-1 if parent_of[o] == -1 else index[parent_of[o]] for o in order]
    labels = [t.labels[o] for o in order]
    return Tree(parents, labels, None, t.sig)


def cut_model(t: Tree, u: int, v: int, phi: NormalFormC2) -> Tree:
    """Replace the subtree at u by the subtree at v (v strictly below u)."""
    if not t.is_descendant(u, v):
        raise C2Error(f"node {v} is not strictly below node {u}")
    k = phi.C
    if reduce(phi, full_type(t, k, u)) != reduce(phi, full_type(t, k, v)):
        raise C2Error("nodes have different reduced types")
    end_u, end_v = t.subtree_end[u], t.subtree_end[v]
    order = list(range(u)) + list(range(v, end_v)) + list(range(end_u, t.n))
    parent_of = {w: t.parents[w] for w in order}
    parent_of[v] = t.parents[u]
    return _rebuild(t, order, parent_of)


def marking(t: Tree, parent: int, phi: NormalFormC2) -> set[int]:
    """Children of parent kept as witnesses during degree reduction.

    For each 1-type, the first min(C, |U|) children of that type and the
    first min(C, |U_below|) children with a strict descendant of that type;
    the first and last child are always marked.
    """
    k = phi.C
    kids = list(t.children[parent])
    if not kids:
        return set()
    marked = {kids[0], kids[-1]}
    ones = t.one_types
    for alpha in sorted(set(ones), key=lambda a: a.index):
        own = [c for c in kids if ones[c] == alpha]
        below = [c for c in kids if any(ones[w] == alpha for w in range(c + 1, t.subtree_end[c]))]
        marked.update(own[:k])
        marked.update(below[:k])
    return marked


def horizontal_cut(t: Tree, parent: int, i: int, j: int, marked: set[int],
                   phi: NormalFormC2) -> Tree:
    """Remove the children of parent from i (inclusive) to j (exclusive) with their subtrees."""
    kids = list(t.children[parent])
    if i not in kids or j not in kids:
        raise C2Error("i and j must be children of parent")
    a, b = kids.index(i), kids.index(j)
    if a >= b:
        raise C2Error("i must come before j")
    if i in marked or j in marked:
        raise C2Error("i and j must be unmarked")
    if any(c in marked for c in kids[a + 1:b]):
        raise C2Error("a marked child lies between i and j")
    k = phi.C
    if horizontal(full_type(t, k, i)) != horizontal(full_type(t, k, j)):
        raise C2Error("i and j have different horizontal types")
    removed = set()
    for c in kids[a:b]:
        removed.update(range(c, t.subtree_end[c]))
    order = [w for w in range(t.n) if w not in removed]
    return _rebuild(t, order, {w: t.parents[w] for w in order})


def horizontal_cut_candidates(t: Tree, parent: int, phi: NormalFormC2) -> list[tuple[int, int]]:
    """All (i, j) pairs admissible for horizontal_cut at parent."""
    marked = marking(t, parent, phi)
    kids = list(t.children[parent])
    k = phi.C
    hts = {c: horizontal(full_type(t, k, c)) for c in kids}
    out = []
    for a, i in enumerate(kids):
        if i in marked:
            continue
        for j in kids[a + 1:]:
            if j in marked:
                break
            if hts[i] == hts[j]:
                out.append((i, j))
    return out
