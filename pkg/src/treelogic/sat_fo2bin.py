"""Finite satisfiability for FO2 over trees with common binary relations.

The alternating algorithm is realized as a deterministic search in two
phases.  First a fragment F of global free witnesses is guessed: a top part
of the tree closed under parent and siblings, with all 1-types and all
2-types between its members.  Then the tree is expanded below every leaf of
F.  Existential guesses become backtracking, universal branches become a
conjunction over all children.

Guessed 2-types always carry the navigational atoms of their position, so
only the cross atoms of common binary symbols are guessed.  Among the 2-types
available for a pair, only those whose set of witnessed conjuncts is maximal
are tried; a 2-type witnessing fewer conjuncts is never needed.

Promised 2-types are not guessed up front.  Each expanded subtree reports
the 2-types it realizes with the ancestors, and pending DeepDown witness
obligations are handed down to the children that must realize them.

Pairs in free position outside F are not assigned a 2-type during the
search.  Instead the sets of 1-types below different children are kept
pairwise compatible: some free 2-type joining them satisfies chi in both
directions.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .formula_core import Order, Signature
from .normalizer import NormalFormFO2, used_signature
from .oracle import enumerate_frames
from .semantics import model_check, two_type_holds
from .tree_model import Tree
from .type_system import OneType, TwoType, cross_options, enumerate_one_types, invert
from .verdict import Deadline, Mode, Outcome, Timeout, Verdict

O = Order

# positions whose witnesses are in memory when a node is inspected
UPPER_SIBLING_FREE = (O.UP, O.DEEP_UP, O.RIGHT, O.LEFT, O.FAR_RIGHT, O.FAR_LEFT, O.FREE)


class FO2Error(Exception):
    pass


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class Bounds:
    max_depth: int
    max_degree: int
    max_fset: int
    mode: Mode = Mode.BOUNDED


def alpha_size(phi: NormalFormFO2) -> int:
    """Number of 1-types over the symbols occurring in phi."""
    sig = used_signature(phi)
    return 2 ** (len(sig.unary) + len(sig.binary))


def f_bound(m: int, n_alpha: int) -> int:
    """Depth and degree bound as a function of m and the number of 1-types."""
    return 96 * m ** 3 * n_alpha ** 3


def fset_bound(m: int, n_alpha: int) -> int:
    return 3 * (m + 1) ** 3 * f_bound(m, n_alpha) ** 4 * n_alpha


def bound_f(phi: NormalFormFO2) -> int:
    return f_bound(phi.m, alpha_size(phi))


def bound_fset(phi: NormalFormFO2) -> int:
    return fset_bound(phi.m, alpha_size(phi))


def sound_bounds(phi: NormalFormFO2) -> Bounds:
    f = bound_f(phi)
    return Bounds(f, f, bound_fset(phi), Mode.SOUND)


# ---------------------------------------------------------------- records and the helper checks

@dataclass
class NodeRecord:
    """What the algorithm keeps about one node.

    two_type_to[w] is the 2-type of (this node, w).  promised[u] holds the
    2-types of (u, d) over descendants d of this node, for each ancestor u.
    """

    one_type: OneType
    two_type_to: dict[int, TwoType] = field(default_factory=dict)
    promised: dict[int, frozenset] = field(default_factory=dict)


@dataclass
class PartialTree:
    """Nodes currently in memory: parent links, ordered children, records and F."""

    parent: dict[int, int] = field(default_factory=dict)
    children: dict[int, list[int]] = field(default_factory=dict)
    records: dict[int, NodeRecord] = field(default_factory=dict)
    fset: frozenset = frozenset()

    def add(self, v: int, parent: int, record: NodeRecord) -> None:
        self.parent[v] = parent
        self.records[v] = record
        self.children.setdefault(v, [])
        if parent != -1:
            self.children.setdefault(parent, []).append(v)

    def ancestors(self, v: int) -> list[int]:
        out = []
        p = self.parent[v]
        while p != -1:
            out.append(p)
            p = self.parent[p]
        return out

    def siblings(self, v: int) -> list[int]:
        p = self.parent[v]
        if p == -1:
            return []
        return [w for w in self.children[p] if w != v]

    def two_type(self, v: int, w: int) -> TwoType | None:
        """2-type of (v, w), read from either record."""
        beta = self.records[v].two_type_to.get(w)
        if beta is not None:
            return beta
        other = self.records[w].two_type_to.get(v)
        return invert(other) if other is not None else None

    def known_partners(self, v: int) -> list[int]:
        """Ancestors, siblings and F members of v."""
        seen = set()
        out = []
        for w in itertools.chain(self.ancestors(v), self.siblings(v), sorted(self.fset)):
            if w != v and w not in seen:
                seen.add(w)
                out.append(w)
        return out


def _triggered(phi: NormalFormFO2, alpha: OneType, theta: Iterable[Order]) -> list[int]:
    wanted = set(theta)
    return [i for i, (lam, th, _) in enumerate(phi.conjuncts) if th in wanted and lam in alpha.unary]


def _witnesses(phi: NormalFormFO2, i: int, beta: TwoType) -> bool:
    _, theta, chi_i = phi.conjuncts[i]
    return beta.order is theta and two_type_holds(chi_i, beta)


def check_context(v: int, ctx: PartialTree) -> bool:
    """Records of v agree with its siblings, with F and with the promises above it."""
    rec = ctx.records[v]
    for w in ctx.siblings(v):
        mine, theirs = rec.two_type_to.get(w), ctx.records[w].two_type_to.get(v)
        if mine is not None and theirs is not None and theirs != invert(mine):
            return False
    if v in ctx.fset:
        for w in ctx.fset:
            if w == v:
                continue
            mine, theirs = rec.two_type_to.get(w), ctx.records[w].two_type_to.get(v)
            if mine is not None and theirs is not None and theirs != invert(mine):
                return False
    u = ctx.parent[v]
    if u == -1:
        return True
    promised = ctx.records[u].promised
    for w in ctx.ancestors(u):
        beta = rec.two_type_to.get(w)
        if beta is None or invert(beta) not in promised.get(w, frozenset()):
            return False
    return True


def check_upper_sibling_free(v: int, ctx: PartialTree, phi: NormalFormFO2) -> bool:
    """Every triggered conjunct positioned above, beside or free has a witness in memory."""
    alpha = ctx.records[v].one_type
    partners = ctx.known_partners(v)
    for i in _triggered(phi, alpha, UPPER_SIBLING_FREE):
        if not any((b := ctx.two_type(v, w)) is not None and _witnesses(phi, i, b) for w in partners):
            return False
    return True


def check_lower_witnesses(v: int, ctx: PartialTree, phi: NormalFormFO2) -> bool:
    """Down witnesses among the children, DeepDown witnesses among their promises."""
    alpha = ctx.records[v].one_type
    kids = ctx.children.get(v, [])
    for i in _triggered(phi, alpha, (O.DOWN,)):
        if not any(_witnesses(phi, i, invert(ctx.records[w].two_type_to[v])) for w in kids):
            return False
    for i in _triggered(phi, alpha, (O.DEEP_DOWN,)):
        if not any(_witnesses(phi, i, b) for w in kids
                   for b in ctx.records[w].promised.get(v, frozenset())):
            return False
    return True


def check_promises(v: int, ctx: PartialTree) -> bool:
    """Promises of v toward each ancestor are exactly what its children realize or promise."""
    rec = ctx.records[v]
    kids = ctx.children.get(v, [])
    for u in ctx.ancestors(v):
        union: set[TwoType] = set()
        for w in kids:
            union.add(invert(ctx.records[w].two_type_to[u]))
            union.update(ctx.records[w].promised.get(u, frozenset()))
        if rec.promised.get(u, frozenset()) != frozenset(union):
            return False
    return True


def free_compatible(chi, a: OneType, b: OneType) -> TwoType | None:
    """A free 2-type joining a and b that satisfies chi in both directions."""
    for c in cross_options(a.sig):
        beta = TwoType(a, b, O.FREE, c)
        if two_type_holds(chi, beta) and two_type_holds(chi, invert(beta)):
            return beta
    return None


def check_universal(v: int, ctx: PartialTree, phi: NormalFormFO2) -> bool:
    """Recorded 2-types of v satisfy chi both ways, and nodes promised below different
    children of v can be joined by a free 2-type satisfying chi."""
    chi = phi.chi
    for w in ctx.known_partners(v):
        beta = ctx.two_type(v, w)
        if beta is None:
            continue
        if not two_type_holds(chi, beta) or not two_type_holds(chi, invert(beta)):
            return False
    kids = ctx.children.get(v, [])
    below = {w: {b.right for b in ctx.records[w].promised.get(v, frozenset())} for w in kids}
    for wi in kids:
        for wj in kids:
            if wi == wj:
                continue
            for a in below[wi]:
                for a2 in below[wj] | {ctx.records[wj].one_type}:
                    if free_compatible(chi, a2, a) is None:
                        return False
    return True


def run_checks(v: int, ctx: PartialTree, phi: NormalFormFO2) -> bool:
    return (check_context(v, ctx) and check_upper_sibling_free(v, ctx, phi)
            and check_lower_witnesses(v, ctx, phi) and check_promises(v, ctx)
            and check_universal(v, ctx, phi))


def records_from_tree(t: Tree, fset: Iterable[int] = ()) -> PartialTree:
    """The records a run would guess for the labeled tree t with free-witness set fset."""
    fset = frozenset(fset)
    ctx = PartialTree(fset=fset)
    for v in range(t.n):
        rec = NodeRecord(t.one_type_of(v))
        partners = set(t.ancestors(v))
        p = t.parents[v]
        if p != -1:
            partners.update(t.children[p])
        if v in fset:
            partners.update(fset)
        for w in list(fset):
            if not t.is_descendant(w, v) and not t.is_descendant(v, w):
                partners.add(w)
        partners.discard(v)
        for w in partners:
            rec.two_type_to[w] = t.two_type_of(v, w)
        for u in t.ancestors(v):
            rec.promised[u] = frozenset(t.two_type_of(u, d) for d in range(v + 1, t.subtree_end[v]))
        ctx.add(v, p, rec)
    return ctx


def harvest_fset(t: Tree, phi: NormalFormFO2) -> frozenset:
    """Free witnesses picked in a model, closed under parent and siblings."""
    chosen: set[int] = set()
    for v in range(t.n):
        for i in _triggered(phi, t.one_type_of(v), (O.FREE,)):
            for w in range(t.n):
                if w != v and _witnesses(phi, i, t.two_type_of(v, w)):
                    chosen.add(w)
                    break
    closed: set[int] = set()
    todo = list(chosen)
    if chosen:
        todo.append(0)
    while todo:
        w = todo.pop()
        if w in closed:
            continue
        closed.add(w)
        p = t.parents[w]
        if p != -1:
            todo.append(p)
            todo.extend(t.children[p])
    return frozenset(closed) if closed else frozenset({0})


# ---------------------------------------------------------------- search

@dataclass
class _Kid:
    one_type: OneType
    ups: tuple          # option for (kid, path[j]) for every node j on the path
    lefts: tuple        # option for (kid, earlier sibling p) for every p
    sub: "_Sub | None" = None


@dataclass
class _Sub:
    kids: list
    below: frozenset    # 1-types of the strict descendants


_LEAF = _Sub([], frozenset())


class _Search:
    def __init__(self, phi: NormalFormFO2, bounds: Bounds, deadline: Deadline):
        self.phi = phi
        self.bounds = bounds
        self.deadline = deadline
        self.sig = used_signature(phi)
        # fewest atoms first: fresh predicates are rarely needed
        self.universe = sorted((t for t in enumerate_one_types(self.sig) if _equal_ok(phi.chi, t)),
                               key=lambda t: (len(t.unary) + len(t.loops), t.index))
        self.depth = bounds.max_depth
        self._options: dict = {}
        self._fc: dict = {}
        self._free: dict = {}
        self._ok: dict = {}
        self._fail: dict = {}
        self.explored = 0
        self.by_theta = {o: [i for i, c in enumerate(phi.conjuncts) if c[1] is o] for o in O}

    # -- cached helpers
    def trig(self, alpha: OneType, theta: Order) -> frozenset:
        return frozenset(i for i in self.by_theta[theta] if self.phi.conjuncts[i][0] in alpha.unary)

    def options(self, a: OneType, o: Order, b: OneType) -> list[tuple[TwoType, frozenset, frozenset]]:
        """Maximal 2-types of (a, b) at position o satisfying chi both ways.

        Each entry carries the conjuncts it witnesses for a and, through its
        inverse, for b.
        """
        key = (a, o, b)
        r = self._options.get(key)
        if r is not None:
            return r
        cands = []
        for c in cross_options(self.sig):
            beta = TwoType(a, b, o, c)
            inv = invert(beta)
            if not (two_type_holds(self.phi.chi, beta) and two_type_holds(self.phi.chi, inv)):
                continue
            mine = frozenset(i for i in self.trig(a, o) if _witnesses(self.phi, i, beta))
            theirs = frozenset(i for i in self.trig(b, o.inverse) if _witnesses(self.phi, i, inv))
            cands.append((beta, mine, theirs))
        r = [c for c in cands
             if not any(d is not c and c[1] <= d[1] and c[2] <= d[2] and (c[1], c[2]) != (d[1], d[2])
                        for d in cands)]
        # keep one representative per effect
        seen = set()
        r = [c for c in r if (c[1], c[2]) not in seen and not seen.add((c[1], c[2]))]
        self._options[key] = r
        return r

    def fc(self, a: OneType, b: OneType) -> TwoType | None:
        key = (a, b)
        if key not in self._fc:
            self._fc[key] = free_compatible(self.phi.chi, a, b)
        return self._fc[key]

    def compatible(self, a: OneType, b: OneType) -> bool:
        return self.fc(a, b) is not None

    def free_assign(self, alpha: OneType, members: frozenset | None) -> dict | None:
        """2-types from alpha to each free F member type covering alpha's Free conjuncts.

        members None means free requirements are waived (relaxed search).
        """
        if members is None:
            return {}
        key = (alpha, members)
        if key in self._free:
            return self._free[key]
        need = self.trig(alpha, O.FREE)
        types = sorted(members, key=lambda t: t.index)
        opts = [self.options(alpha, O.FREE, t) for t in types]
        result = None
        if all(opts):
            for combo in itertools.product(*opts):
                covered = frozenset().union(*(c[1] for c in combo)) if combo else frozenset()
                if need <= covered:
                    result = {t: c[0] for t, c in zip(types, combo)}
                    break
        elif not types:
            result = {} if not need else None
        self._free[key] = result
        return result

    # -- expansion below a node
    def expand(self, path: tuple, obligations: frozenset, members: frozenset | None,
               allowed: frozenset, depth_left: int) -> _Sub | None:
        """A subtree below the last node of path, or None.

        obligations are pairs (j, i): conjunct i of path[j] with position
        DeepDown still needs a witness strictly below the last node.  The
        strict descendants only use 1-types from allowed.
        """
        self.deadline.check()
        self.explored += 1
        key = (path, obligations, members)
        for d, below, sub in self._ok.get(key, ()):
            if d <= depth_left and below <= allowed:
                return sub
        for d, failed in self._fail.get(key, ()):
            if d >= depth_left and allowed <= failed:
                return None
        sub = self._expand(path, obligations, members, allowed, depth_left)
        if sub is None:
            self._fail.setdefault(key, []).append((depth_left, allowed))
        else:
            self._ok.setdefault(key, []).append((_height(sub), sub.below, sub))
        return sub

    def _expand(self, path, obligations, members, allowed, depth_left) -> _Sub | None:
        dv = len(path) - 1
        v = path[-1]
        down = self.trig(v, O.DOWN)
        own_deep = frozenset((dv, i) for i in self.trig(v, O.DEEP_DOWN))
        if not down and not obligations and not own_deep:
            return _LEAF
        if depth_left == 0 or (own_deep and depth_left == 1):
            return None
        for k in range(1, self.bounds.max_degree + 1):
            r = self._pick(path, obligations | own_deep, down, members, allowed, depth_left, k, [])
            if r is not None:
                return r
        return None

    def _pick(self, path, obligations, down, members, allowed, depth_left, k, kids) -> _Sub | None:
        i = len(kids)
        if i == k:
            return self._finish(path, obligations, down, members, allowed, depth_left, kids)
        dv = len(path) - 1
        for t in self.universe:
            if t not in allowed or self.free_assign(t, members) is None:
                continue
            up_opts = [self.options(t, O.UP if j == dv else O.DEEP_UP, path[j]) for j in range(dv + 1)]
            left_opts = [self.options(t, O.LEFT if p == i - 1 else O.FAR_LEFT, kids[p].one_type)
                         for p in range(i)]
            if not all(up_opts) or not all(left_opts):
                continue
            need_up = self.trig(t, O.UP) | self.trig(t, O.DEEP_UP)
            need_left = self.trig(t, O.LEFT) | self.trig(t, O.FAR_LEFT)
            for ups in itertools.product(*up_opts):
                if not need_up <= frozenset().union(*(u[1] for u in ups)):
                    continue
                for lefts in itertools.product(*left_opts):
                    self.deadline.check()
                    if not need_left <= frozenset().union(*(x[1] for x in lefts)):
                        continue
                    kids.append(_Kid(t, ups, lefts))
                    r = self._pick(path, obligations, down, members, allowed, depth_left, k, kids)
                    kids.pop()
                    if r is not None:
                        return r
        return None

    def _finish(self, path, obligations, down, members, allowed, depth_left, kids) -> _Sub | None:
        dv = len(path) - 1
        k = len(kids)
        # Right / FarRight witnesses come from later siblings
        for p, kid in enumerate(kids):
            need = self.trig(kid.one_type, O.RIGHT) | self.trig(kid.one_type, O.FAR_RIGHT)
            got = frozenset().union(*(kids[q].lefts[p][2] for q in range(p + 1, k)))
            if not need <= got:
                return None
        if not down <= frozenset().union(*(kid.ups[dv][2] for kid in kids)):
            return None
        pending = []
        for j, i in sorted(obligations):
            if j < dv and any(i in kid.ups[j][2] for kid in kids):
                continue
            pending.append((j, i))
        if pending and depth_left < 2:
            return None
        seen = set()
        for choice in itertools.product(range(k), repeat=len(pending)):
            per_kid = tuple(frozenset(o for o, c in zip(pending, choice) if c == q) for q in range(k))
            if per_kid in seen:
                continue
            seen.add(per_kid)
            subs = self._below(path, per_kid, members, allowed, depth_left, kids, 0, [])
            if subs is not None:
                out = [_Kid(kid.one_type, kid.ups, kid.lefts, s) for kid, s in zip(kids, subs)]
                below = frozenset(kid.one_type for kid in kids).union(*(s.below for s in subs))
                return _Sub(out, below)
        return None

    def _below(self, path, per_kid, members, allowed, depth_left, kids, q, done) -> list | None:
        """Expand kids[q:] keeping types below different kids freely compatible."""
        k = len(kids)
        if q == k:
            return list(done)
        t = kids[q].one_type
        base = frozenset(a for a in allowed
                         if all(self.compatible(a, kids[j].one_type) for j in range(k) if j != q)
                         and all(self.compatible(a, b) for s in done for b in s.below))
        tried: list[frozenset] = []
        for sub_allowed in _subsets_desc(base, last=(q == k - 1)):
            if any(r <= sub_allowed for r in tried):
                continue
            s = self.expand(path + (t,), per_kid[q], members, sub_allowed, depth_left - 1)
            if s is None:
                if sub_allowed == base:
                    return None  # subsets of a failed set fail too
                continue
            tried.append(s.below)
            done.append(s)
            r = self._below(path, per_kid, members, allowed, depth_left, kids, q + 1, done)
            done.pop()
            if r is not None:
                return r
        return None

    # -- the fragment F
    def fragments(self) -> Iterator[tuple[Tree, tuple, dict]]:
        """Candidate F: frame, 1-types and pairwise 2-types, smallest first."""
        b = self.bounds
        if b.max_fset < 1:
            return
        for frame in enumerate_frames(b.max_fset):
            if frame.height() > self.depth or frame.max_degree() > b.max_degree:
                continue
            for types in itertools.product(self.universe, repeat=frame.n):
                self.deadline.check()
                yield from self._fragment_pairs(frame, types)

    def _fragment_pairs(self, frame: Tree, types: tuple) -> Iterator[tuple[Tree, tuple, dict]]:
        n = frame.n
        pairs = [(a, c) for a in range(n) for c in range(a + 1, n)]
        opts = []
        for a, c in pairs:
            o = frame.order_of(a, c)
            opt = self.options(types[a], o, types[c])
            if not opt:
                return
            opts.append(opt)
        for combo in itertools.product(*opts):
            self.deadline.check()
            got = [set() for _ in range(n)]
            betas = {}
            for (a, c), (beta, mine, theirs) in zip(pairs, combo):
                betas[(a, c)] = beta
                betas[(c, a)] = invert(beta)
                got[a] |= mine
                got[c] |= theirs
            ok = True
            for v in range(n):
                need = frozenset().union(*(self.trig(types[v], o) for o in UPPER_SIBLING_FREE))
                if frame.children[v]:
                    need |= self.trig(types[v], O.DOWN)
                if not need <= got[v]:
                    ok = False
                    break
            if ok:
                yield frame, types, betas

    def try_fragment(self, frame: Tree, types: tuple, betas: dict) -> dict | None:
        """Expand every leaf of F; returns leaf -> subtree on success."""
        leaves = [v for v in range(frame.n) if not frame.children[v]]
        # DeepDown needs of F nodes not met inside F become obligations of leaves below
        pending = []
        for u in range(frame.n):
            if not frame.children[u]:
                continue
            for i in self.trig(types[u], O.DEEP_DOWN):
                if any(_witnesses(self.phi, i, betas[(u, w)]) for w in range(u + 1, frame.subtree_end[u])):
                    continue
                cands = [l for l in leaves if frame.is_descendant(u, l)]
                if not cands:
                    return None
                pending.append((u, i, cands))
        paths = {l: tuple(types[a] for a in reversed(frame.ancestors(l))) + (types[l],) for l in leaves}
        members = {l: frozenset(types[w] for w in range(frame.n)
                                if w != l and not frame.is_descendant(w, l)) for l in leaves}
        seen = set()
        for choice in itertools.product(*(c for _, _, c in pending)):
            per_leaf = {l: frozenset((frame.depth[u], i) for (u, i, _), c in zip(pending, choice) if c == l)
                        for l in leaves}
            key = tuple(per_leaf[l] for l in leaves)
            if key in seen:
                continue
            seen.add(key)
            subs = self._leaves(frame, leaves, paths, per_leaf, members, 0, [])
            if subs is not None:
                return dict(zip(leaves, subs))
        return None

    def _leaves(self, frame, leaves, paths, per_leaf, members, q, done) -> list | None:
        if q == len(leaves):
            return list(done)
        l = leaves[q]
        base = frozenset(a for a in self.universe
                         if all(self.compatible(a, b) for s in done for b in s.below))
        tried: list[frozenset] = []
        depth_left = self.depth - frame.depth[l]
        for allowed in _subsets_desc(base, last=(q == len(leaves) - 1)):
            if any(r <= allowed for r in tried):
                continue
            s = self.expand(paths[l], per_leaf[l], members[l], allowed, depth_left)
            if s is None:
                if allowed == base:
                    return None
                continue
            tried.append(s.below)
            done.append(s)
            r = self._leaves(frame, leaves, paths, per_leaf, members, q + 1, done)
            done.pop()
            if r is not None:
                return r
        return None

    def relaxed_possible(self) -> bool:
        """Search with free witnesses waived; failure rules out every F."""
        for t in self.universe:
            if any(self.trig(t, o) for o in UPPER_SIBLING_FREE):
                continue
            if self.expand((t,), frozenset(), None, frozenset(self.universe), self.depth):
                return True
        return False


def _equal_ok(chi, t: OneType) -> bool:
    from .semantics import holds_qf

    return holds_qf(chi, t, t, O.EQUAL)


def _height(sub: _Sub) -> int:
    return 0 if not sub.kids else 1 + max(_height(k.sub) for k in sub.kids)


def _subsets_desc(base: frozenset, last: bool) -> Iterator[frozenset]:
    """Subsets of base, largest first; only base itself when last."""
    yield base
    if last:
        return
    items = sorted(base, key=lambda t: t.index)
    for size in range(len(items) - 1, -1, -1):
        for combo in itertools.combinations(items, size):
            yield frozenset(combo)


# ---------------------------------------------------------------- assembly

def _assemble(search: _Search, frame: Tree, types: tuple, betas: dict, subs: dict,
              sig: Signature) -> tuple[Tree, frozenset]:
    """Labeled tree from F and the expansions below its leaves."""
    parents: list[int] = []
    node_type: list[OneType] = []
    rel: dict[tuple[int, int], TwoType] = {}
    f_ids: dict[int, int] = {}
    home: dict[int, int] = {}   # non-F node -> the F leaf it hangs below

    def add(parent: int, t: OneType) -> int:
        parents.append(parent)
        node_type.append(t)
        return len(parents) - 1

    def grow(node: int, path_ids: list[int], sub: _Sub, leaf: int) -> None:
        ids: list[int] = []
        for kid in sub.kids:
            c = add(node, kid.one_type)
            home[c] = leaf
            for j, opt in enumerate(kid.ups):
                rel[(c, path_ids[j])] = opt[0]
            for p, opt in enumerate(kid.lefts):
                rel[(c, ids[p])] = opt[0]
            ids.append(c)
            grow(c, path_ids + [c], kid.sub, leaf)

    def walk_f(v: int, parent: int, path_ids: list[int]) -> None:
        me = add(parent, types[v])
        f_ids[v] = me
        for c in frame.children[v]:
            walk_f(c, me, path_ids + [me])
        if not frame.children[v]:
            grow(me, path_ids + [me], subs[v], v)

    walk_f(0, -1, [])
    for (a, c), beta in betas.items():
        rel[(f_ids[a], f_ids[c])] = beta
    for d, leaf in home.items():
        members = [f_ids[w] for w in range(frame.n) if w != leaf and not frame.is_descendant(w, leaf)]
        assign = search.free_assign(node_type[d], frozenset(node_type[w] for w in members))
        for w in members:
            rel[(d, w)] = assign[node_type[w]]
    n = len(parents)
    edges: dict[str, list] = {r: [] for r in sig.binary}
    for v in range(n):
        for r in node_type[v].loops:
            edges[r].append((v, v))
    for v in range(n):
        for w in range(v + 1, n):
            beta = rel.get((v, w))
            if beta is None and (w, v) in rel:
                beta = invert(rel[(w, v)])
            if beta is None:
                beta = search.fc(node_type[v], node_type[w])
                if beta is None:
                    raise FO2Error("internal error: no free 2-type for an unrecorded pair")
            for r, (fw, bw) in zip(beta.sig.binary, beta.cross):
                if fw:
                    edges[r].append((v, w))
                if bw:
                    edges[r].append((w, v))
    tree = Tree(parents, [t.unary for t in node_type], edges, sig)
    return tree, frozenset(f_ids.values())


def sat_fo2bin(phi: NormalFormFO2, bounds: Bounds | None = None,
               timeout: float | None = None) -> Verdict:
    """Search for a finite tree model of phi within bounds."""
    bounds = bounds or sound_bounds(phi)
    deadline = Deadline(timeout)
    search = _Search(phi, bounds, deadline)
    sig = used_signature(phi)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        # iterative deepening keeps witnesses shallow; memo entries stay valid across rounds
        if search.relaxed_possible():
            for depth in range(bounds.max_depth + 1):
                search.depth = depth
                found = _first_model(search, phi)
                if found is not None:
                    tree, fset = found
                    stats = _stats(search, deadline)
                    stats["fset_size"] = len(fset)
                    return Verdict(Outcome.SAT, bounds, tree, stats)
    except Timeout:
        return Verdict(Outcome.TIMEOUT, bounds, None, _stats(search, deadline))
    finally:
        sys.setrecursionlimit(old_limit)
    outcome = Outcome.UNSAT_PROVED if bounds.mode is Mode.SOUND else Outcome.UNSAT_WITHIN_BOUNDS
    return Verdict(outcome, bounds, None, _stats(search, deadline))


def _first_model(search: _Search, phi: NormalFormFO2) -> tuple[Tree, frozenset] | None:
    for frame, types, betas in search.fragments():
        subs = search.try_fragment(frame, types, betas)
        if subs is None:
            continue
        tree, fset = _assemble(search, frame, types, betas, subs, phi.sig)
        if not model_check(tree, phi.to_formula()):
            raise FO2Error("internal error: assembled tree is not a model")
        return tree, fset
    return None


def _stats(search: _Search, deadline: Deadline) -> dict:
    return {"nodes_explored": search.explored, "seconds": round(deadline.elapsed(), 3)}
