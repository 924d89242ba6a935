"""Explicit finite ordered trees, relative positions and the tree file format."""

from __future__ import annotations

import enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .formula_core import Order, Signature
from .type_system import OneType, TwoType


class TreeError(Exception):
    """Malformed tree text or invalid tree construction."""


class Position(enum.Enum):
    """Sixteen positions of a node w relative to a node v."""

    STRICT_DESCENDANT = "StrictDescendant"
    DESCENDANT_OR_SELF = "DescendantOrSelf"
    FOLLOWING_SIBLING_SUBTREE_INCL = "FollowingSiblingSubtreeIncl"
    DESCENDANT_OF_FOLLOWING_SIBLING = "DescendantOfFollowingSibling"
    PRECEDING_SIBLING_SUBTREE_INCL = "PrecedingSiblingSubtreeIncl"
    DESCENDANT_OF_PRECEDING_SIBLING = "DescendantOfPrecedingSibling"
    CHILD = "Child"
    DEEP_DESCENDANT = "DeepDescendant"
    ANCESTOR = "Ancestor"
    DEEP_ANCESTOR = "DeepAncestor"
    FOLLOWING_SIBLING = "FollowingSibling"
    PRECEDING_SIBLING = "PrecedingSibling"
    FAR_FOLLOWING_SIBLING = "FarFollowingSibling"
    FAR_PRECEDING_SIBLING = "FarPrecedingSibling"
    SIBLING_SUBTREE = "SiblingSubtree"
    ANCESTOR_SIBLING_SUBTREE = "AncestorSiblingSubtree"

    def __str__(self) -> str:
        return self.value


POSITIONS: tuple[Position, ...] = tuple(Position)


class Tree:
    """A finite ordered tree with preorder node numbering.

    parents[i] is the parent of node i (-1 for the root, which must be 0).
    Children of a node are ordered by index.  labels[i] is the set of unary
    symbols true at i; edges maps each common binary symbol to its set of
    ordered pairs.
    """

    def __init__(self, parents: Sequence[int], labels: Sequence[Iterable[str]] | None = None,
                 edges: Mapping[str, Iterable[tuple[int, int]]] | None = None,
                 sig: Signature | None = None):
        n = len(parents)
        if n == 0:
            raise TreeError("trees must have at least one node")
        self.parents = tuple(int(p) for p in parents)
        self.n = n
        self.sig = sig if sig is not None else Signature()
        labels = labels if labels is not None else [()] * n
        if len(labels) != n:
            raise TreeError("one label set per node required")
        self.labels = tuple(frozenset(l) for l in labels)
        self.edges = {r: frozenset((int(a), int(b)) for a, b in (edges or {}).get(r, ()))
                      for r in self.sig.binary}
        self._validate(edges or {})

    # ---------------------------------------------------------------- validation
    def _validate(self, edges: Mapping) -> None:
        n = self.n
        roots = [i for i, p in enumerate(self.parents) if p == -1]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        for i, p in enumerate(self.parents):
            if p != -1 and not 0 <= p < n:
                raise TreeError(f"node {i}: dangling parent {p}")
            if p == i:
                raise TreeError(f"node {i}: cycle (node is its own parent)")
        for i in range(n):
            seen = set()
            j = i
            while j != -1:
                if j in seen:
                    raise TreeError(f"node {i}: cycle in parent links")
                seen.add(j)
                j = self.parents[j]
        if roots[0] != 0:
            raise TreeError("root must be node 0 (preorder numbering)")
        order = []
        stack = [0]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        if order != list(range(n)):
            raise TreeError("node numbering is not a preorder of the tree")
        un = set(self.sig.unary)
        for i, l in enumerate(self.labels):
            bad = l - un
            if bad:
                raise TreeError(f"node {i}: unknown symbol {sorted(bad)[0]!r}")
        for r in edges:
            if r not in self.sig.binary:
                raise TreeError(f"unknown symbol {r!r}")
        for r, pairs in self.edges.items():
            for a, b in pairs:
                if not (0 <= a < n and 0 <= b < n):
                    raise TreeError(f"edge {r} {a} {b}: node out of range")

    # ---------------------------------------------------------------- structure
    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in range(self.n)]
        for i, p in enumerate(self.parents):
            if p >= 0:
                ch[p].append(i)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def depth(self) -> tuple[int, ...]:
        d = [0] * self.n
        for i in range(1, self.n):
            d[i] = d[self.parents[i]] + 1
        return tuple(d)

    @cached_property
    def sibling_index(self) -> tuple[int, ...]:
        idx = [0] * self.n
        for c in self.children:
            for k, v in enumerate(c):
                idx[v] = k
        return tuple(idx)

    @cached_property
    def subtree_end(self) -> tuple[int, ...]:
        """Exclusive end of each node's preorder interval."""
        end = list(range(1, self.n + 1))
        for i in range(self.n - 1, 0, -1):
            p = self.parents[i]
            end[p] = max(end[p], end[i])
        return tuple(end)

    def height(self) -> int:
        return max(self.depth)

    def max_degree(self) -> int:
        return max(len(c) for c in self.children)

    def is_descendant(self, u: int, v: int) -> bool:
        """v is a strict descendant of u."""
        return u < v < self.subtree_end[u]

    def ancestors(self, v: int) -> list[int]:
        out = []
        p = self.parents[v]
        while p != -1:
            out.append(p)
            p = self.parents[p]
        return out

    def _check(self, *nodes: int) -> None:
        for v in nodes:
            if not 0 <= v < self.n:
                raise TreeError(f"node {v} out of range")

    # ---------------------------------------------------------------- relations
    @cached_property
    def nav_matrices(self) -> dict[str, np.ndarray]:
        """Boolean n x n matrices M with M[u, v] = kind(u, v)."""
        n = self.n
        child = np.zeros((n, n), dtype=bool)
        desc = np.zeros((n, n), dtype=bool)
        nxt = np.zeros((n, n), dtype=bool)
        fol = np.zeros((n, n), dtype=bool)
        for v in range(1, n):
            child[self.parents[v], v] = True
        for u in range(n):
            desc[u, u + 1:self.subtree_end[u]] = True
        for c in self.children:
            for i, a in enumerate(c):
                if i + 1 < len(c):
                    nxt[a, c[i + 1]] = True
                for b in c[i + 1:]:
                    fol[a, b] = True
        return {"child": child, "descendant": desc, "next": nxt, "following": fol}

    @cached_property
    def order_matrix(self) -> tuple[tuple[Order, ...], ...]:
        return tuple(tuple(self._order(u, v) for v in range(self.n)) for u in range(self.n))

    def _order(self, u: int, v: int) -> Order:
        if u == v:
            return Order.EQUAL
        if self.parents[v] == u:
            return Order.DOWN
        if self.parents[u] == v:
            return Order.UP
        if self.is_descendant(u, v):
            return Order.DEEP_DOWN
        if self.is_descendant(v, u):
            return Order.DEEP_UP
        if self.parents[u] == self.parents[v]:
            d = self.sibling_index[v] - self.sibling_index[u]
            if d == 1:
                return Order.RIGHT
            if d == -1:
                return Order.LEFT
            return Order.FAR_RIGHT if d > 0 else Order.FAR_LEFT
        return Order.FREE

    def order_of(self, u: int, v: int) -> Order:
        self._check(u, v)
        return self.order_matrix[u][v]

    def in_position(self, pos: Position, v: int, w: int) -> bool:
        self._check(v, w)
        return _POSITION_TEST[pos](self, v, w)

    # ---------------------------------------------------------------- types
    def one_type_of(self, v: int) -> OneType:
        self._check(v)
        loops = frozenset(r for r in self.sig.binary if (v, v) in self.edges[r])
        return OneType(self.sig, self.labels[v], loops)

    @cached_property
    def one_types(self) -> tuple[OneType, ...]:
        return tuple(self.one_type_of(v) for v in range(self.n))

    def two_type_of(self, u: int, v: int) -> TwoType:
        self._check(u, v)
        if u == v:
            raise TreeError("two_type_of requires distinct nodes")
        cross = tuple(((u, v) in self.edges[r], (v, u) in self.edges[r]) for r in self.sig.binary)
        return TwoType(self.one_types[u], self.one_types[v], self.order_of(u, v), cross)

    # ---------------------------------------------------------------- misc
    def with_labels(self, labels: Sequence[Iterable[str]], edges=None, sig: Signature | None = None) -> "Tree":
        return Tree(self.parents, labels, edges, sig or self.sig)

    def frame(self) -> "Tree":
        return Tree(self.parents)

    def __eq__(self, other):
        return isinstance(other, Tree) and (self.parents, self.labels, self.sig) == \
            (other.parents, other.labels, other.sig) and self.edges == other.edges

    def __hash__(self):
        return hash((self.parents, self.labels))

    def __repr__(self) -> str:
        return f"Tree(parents={list(self.parents)}, labels={[sorted(l) for l in self.labels]})"

    @classmethod
    def from_nested(cls, nested, sig: Signature | None = None) -> "Tree":
        """Build from (labels, [children...]) pairs in preorder."""
        parents: list[int] = []
        labels: list[Iterable[str]] = []

        def go(node, parent):
            lab, kids = node
            idx = len(parents)
            parents.append(parent)
            labels.append(lab)
            for k in kids:
                go(k, idx)

        go(nested, -1)
        return cls(parents, labels, None, sig)

    def subtree_nested(self, v: int):
        return (self.labels[v], [self.subtree_nested(c) for c in self.children[v]])


# ---------------------------------------------------------------- positions

def _sib(t: Tree, a: int, b: int) -> int:
    """Sibling offset of b relative to a, 0 if not siblings."""
    if a == b or t.parents[a] == -1 or t.parents[a] != t.parents[b]:
        return 0
    return t.sibling_index[b] - t.sibling_index[a]


def _in_sibling_subtree(t: Tree, v: int, w: int, sign: int, include_self: bool) -> bool:
    """w lies (strictly, unless include_self) below a sibling s of v with sign(offset)."""
    for s in ([w] if include_self else []) + t.ancestors(w):
        d = _sib(t, v, s)
        if d != 0 and (d > 0) == (sign > 0):
            return True
    return False


def _anc_sib_subtree(t: Tree, v: int, w: int) -> bool:
    for a in t.ancestors(v):
        for s in [w] + t.ancestors(w):
            if _sib(t, a, s) != 0:
                return True
    return False


_POSITION_TEST = {
    Position.STRICT_DESCENDANT: lambda t, v, w: t.is_descendant(v, w),
    Position.DESCENDANT_OR_SELF: lambda t, v, w: v == w or t.is_descendant(v, w),
    Position.FOLLOWING_SIBLING_SUBTREE_INCL: lambda t, v, w: _in_sibling_subtree(t, v, w, +1, True),
    Position.DESCENDANT_OF_FOLLOWING_SIBLING: lambda t, v, w: _in_sibling_subtree(t, v, w, +1, False),
    Position.PRECEDING_SIBLING_SUBTREE_INCL: lambda t, v, w: _in_sibling_subtree(t, v, w, -1, True),
    Position.DESCENDANT_OF_PRECEDING_SIBLING: lambda t, v, w: _in_sibling_subtree(t, v, w, -1, False),
    Position.CHILD: lambda t, v, w: t.parents[w] == v,
    Position.DEEP_DESCENDANT: lambda t, v, w: t.is_descendant(v, w) and t.parents[w] != v,
    Position.ANCESTOR: lambda t, v, w: t.is_descendant(w, v),
    Position.DEEP_ANCESTOR: lambda t, v, w: t.is_descendant(w, v) and t.parents[v] != w,
    Position.FOLLOWING_SIBLING: lambda t, v, w: _sib(t, v, w) > 0,
    Position.PRECEDING_SIBLING: lambda t, v, w: _sib(t, v, w) < 0,
    Position.FAR_FOLLOWING_SIBLING: lambda t, v, w: _sib(t, v, w) > 1,
    Position.FAR_PRECEDING_SIBLING: lambda t, v, w: _sib(t, v, w) < -1,
    Position.SIBLING_SUBTREE: lambda t, v, w: _in_sibling_subtree(t, v, w, +1, True)
    or _in_sibling_subtree(t, v, w, -1, True),
    Position.ANCESTOR_SIBLING_SUBTREE: _anc_sib_subtree,
}


# ---------------------------------------------------------------- file format

def save(t: Tree) -> str:
    lines = [f"n={t.n}"]
    for i in range(t.n):
        labs = [s for s in t.sig.unary if s in t.labels[i]]
        lines.append(f"{t.parents[i]} :" + ("" if not labs else " " + " ".join(labs)))
    for r in t.sig.binary:
        for a, b in sorted(t.edges[r]):
            lines.append(f"edge {r} {a} {b}")
    return "\n".join(lines) + "\n"


def load(text: str, sig: Signature | None = None) -> Tree:
    sig = sig if sig is not None else Signature()
    lines = [l.strip() for l in text.splitlines()]
    lines = [l for l in lines if l and not l.startswith("#")]
    if not lines:
        raise TreeError("empty tree text")
    head = lines[0]
    if not head.startswith("n="):
        raise TreeError(f"malformed line 1: {head!r} (expected n=<count>)")
    try:
        n = int(head[2:])
    except ValueError:
        raise TreeError(f"malformed line 1: {head!r}") from None
    if n <= 0:
        raise TreeError("trees must have at least one node")
    if len(lines) < 1 + n:
        raise TreeError(f"expected {n} node lines, found {len(lines) - 1}")
    parents: list[int] = []
    labels: list[list[str]] = []
    for k, line in enumerate(lines[1:1 + n], start=2):
        left, sep, right = line.partition(":")
        if not sep:
            raise TreeError(f"malformed line {k}: {line!r}")
        try:
            p = int(left.strip())
        except ValueError:
            raise TreeError(f"malformed line {k}: {line!r}") from None
        if p < -1 or p >= n:
            raise TreeError(f"line {k}: dangling parent {p}")
        parents.append(p)
        labs = right.split()
        for s in labs:
            if s not in sig.unary:
                raise TreeError(f"line {k}: unknown symbol {s!r}")
        labels.append(labs)
    edges: dict[str, set] = {r: set() for r in sig.binary}
    for k, line in enumerate(lines[1 + n:], start=2 + n):
        parts = line.split()
        if len(parts) != 4 or parts[0] != "edge":
            raise TreeError(f"malformed line {k}: {line!r}")
        r = parts[1]
        if r not in sig.binary:
            raise TreeError(f"line {k}: unknown symbol {r!r}")
        try:
            a, b = int(parts[2]), int(parts[3])
        except ValueError:
            raise TreeError(f"malformed line {k}: {line!r}") from None
        if not (0 <= a < n and 0 <= b < n):
            raise TreeError(f"line {k}: edge endpoint out of range")
        edges[r].add((a, b))
    return Tree(parents, labels, edges, sig)
