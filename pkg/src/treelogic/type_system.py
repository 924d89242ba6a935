"""Atomic 1-types, 2-types and k-multisets with saturating counts."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

from .formula_core import NON_EQUAL_ORDERS, Order, Signature


class TypeError_(Exception):
    """Raised on incompatible type operations (e.g. cutoff mismatch)."""


# ---------------------------------------------------------------- counts with infinity

class Infinity:
    """The saturated count value.  A singleton, compares above every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "∞"

    __str__ = __repr__

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("infinity")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()
CountValue = Union[int, Infinity]


def cut(k: int, i: CountValue) -> CountValue:
    """Saturate i at k: values above k become INF."""
    if i is INF:
        return INF
    if i < 0:
        raise ValueError("counts are non-negative")
    return i if i <= k else INF


def add_counts(a: CountValue, b: CountValue) -> CountValue:
    if a is INF or b is INF:
        return INF
    return a + b


def count_min(a: CountValue, b: CountValue) -> CountValue:
    if a is INF:
        return b
    if b is INF:
        return a
    return min(a, b)


def count_leq(a: CountValue, b: CountValue) -> bool:
    """a <= b in the extended order; INF <= n is false for finite n."""
    if b is INF:
        return True
    if a is INF:
        return False
    return a <= b


# ---------------------------------------------------------------- 1-types

@dataclass(frozen=True, order=False)
class OneType:
    """Unary atoms plus the common binaries R with R(x, x), over sig."""

    sig: Signature
    unary: frozenset
    loops: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "unary", frozenset(self.unary))
        object.__setattr__(self, "loops", frozenset(self.loops))
        if not self.unary <= set(self.sig.unary) or not self.loops <= set(self.sig.binary):
            raise TypeError_("1-type uses symbols outside its signature")
        object.__setattr__(self, "_index", self._compute_index())
        object.__setattr__(self, "_h", hash((self.sig, self._index)))

    def _compute_index(self) -> int:
        bits = [s in self.unary for s in self.sig.unary] + [r in self.loops for r in self.sig.binary]
        idx = 0
        for b in bits:
            idx = (idx << 1) | int(b)
        return idx

    @property
    def index(self) -> int:
        """Position in the canonical (big-endian bitstring) order."""
        return self._index  # type: ignore[attr-defined]

    def __hash__(self):
        return self._h  # type: ignore[attr-defined]

    def __eq__(self, other):
        return isinstance(other, OneType) and self._index == other._index and self.sig == other.sig

    def __lt__(self, other: "OneType") -> bool:
        return self.index < other.index

    def has(self, sym: str) -> bool:
        return sym in self.unary

    def atoms(self) -> list[str]:
        return sorted(list(self.unary) + [f"{r}(x,x)" for r in self.loops])

    def __str__(self) -> str:
        atoms = self.atoms()
        return "{" + ", ".join(atoms) + "}" if atoms else "∅"

    __repr__ = __str__


@lru_cache(maxsize=None)
def enumerate_one_types(sig: Signature) -> tuple[OneType, ...]:
    n_u, n_b = len(sig.unary), len(sig.binary)
    out = []
    for idx in range(1 << (n_u + n_b)):
        bits = [(idx >> (n_u + n_b - 1 - i)) & 1 for i in range(n_u + n_b)]
        un = frozenset(s for s, b in zip(sig.unary, bits[:n_u]) if b)
        lo = frozenset(r for r, b in zip(sig.binary, bits[n_u:]) if b)
        out.append(OneType(sig, un, lo))
    return tuple(out)


def one_type_from_index(sig: Signature, idx: int) -> OneType:
    return enumerate_one_types(sig)[idx]


# ---------------------------------------------------------------- 2-types

@dataclass(frozen=True)
class TwoType:
    """Type of a pair of distinct nodes (x, y)."""

    left: OneType
    right: OneType
    order: Order
    cross: tuple[tuple[bool, bool], ...] = ()

    def __post_init__(self):
        if self.order is Order.EQUAL:
            raise TypeError_("2-types relate distinct elements; order Equal is not allowed")
        if self.left.sig != self.right.sig:
            raise TypeError_("2-type endpoints must share a signature")
        cross = tuple((bool(a), bool(b)) for a, b in self.cross)
        if not cross:
            cross = tuple((False, False) for _ in self.left.sig.binary)
        if len(cross) != len(self.left.sig.binary):
            raise TypeError_("cross atoms must list one pair per common binary symbol")
        object.__setattr__(self, "cross", cross)

    @property
    def sig(self) -> Signature:
        return self.left.sig

    def holds(self, sym: str, forward: bool = True) -> bool:
        """R(x,y) if forward else R(y,x)."""
        i = self.sig.binary.index(sym)
        return self.cross[i][0 if forward else 1]

    def __str__(self) -> str:
        atoms = []
        for r, (a, b) in zip(self.sig.binary, self.cross):
            if a:
                atoms.append(f"{r}(x,y)")
            if b:
                atoms.append(f"{r}(y,x)")
        cross = ", ".join(atoms) if atoms else "∅"
        return f"⟨{self.left} | {self.order} | {cross} | {self.right}⟩"

    __repr__ = __str__


def invert(beta: TwoType) -> TwoType:
    return TwoType(beta.right, beta.left, beta.order.inverse, tuple((b, a) for a, b in beta.cross))


def restrict(beta: TwoType, var: str) -> OneType:
    if var == "x":
        return beta.left
    if var == "y":
        return beta.right
    raise TypeError_(f"bad variable {var!r}")


def cross_options(sig: Signature) -> Iterator[tuple[tuple[bool, bool], ...]]:
    """All cross-atom assignments in canonical order."""
    n = len(sig.binary)
    for idx in range(1 << (2 * n)):
        bits = [(idx >> (2 * n - 1 - i)) & 1 for i in range(2 * n)]
        yield tuple((bool(bits[2 * i]), bool(bits[2 * i + 1])) for i in range(n))


def enumerate_two_types(sig: Signature, orders: Iterable[Order] = NON_EQUAL_ORDERS) -> Iterator[TwoType]:
    ones = enumerate_one_types(sig)
    for o in orders:
        for a in ones:
            for b in ones:
                for c in cross_options(sig):
                    yield TwoType(a, b, o, c)


# ---------------------------------------------------------------- k-multisets

class KMultiset:
    """Multiset of 1-types with counts in {0..k, INF}; absent keys count 0."""

    __slots__ = ("k", "_items", "_h")

    def __init__(self, k: int, counts: Mapping[OneType, CountValue] | Iterable = ()):
        if k < 0:
            raise TypeError_("cutoff must be non-negative")
        self.k = k
        pairs = counts.items() if isinstance(counts, Mapping) else counts
        items = {}
        for t, v in pairs:
            if v is not INF and (not isinstance(v, int) or v < 0 or v > k):
                raise TypeError_(f"count {v!r} outside {{0..{k}, ∞}}")
            if v != 0:
                items[t] = v
        self._items = tuple(sorted(items.items(), key=lambda p: p[0].index))
        self._h = hash((k, self._items))

    @classmethod
    def from_counts(cls, k: int, counts: Mapping[OneType, int]) -> "KMultiset":
        return cls(k, {t: cut(k, v) for t, v in counts.items()})

    @classmethod
    def single(cls, k: int, t: OneType) -> "KMultiset":
        return cls(k, {t: cut(k, 1)})

    def __getitem__(self, t: OneType) -> CountValue:
        for s, v in self._items:
            if s == t:
                return v
        return 0

    def items(self) -> tuple[tuple[OneType, CountValue], ...]:
        return self._items

    def support(self) -> tuple[OneType, ...]:
        return tuple(t for t, _ in self._items)

    def __iter__(self):
        return iter(self.support())

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def is_empty(self) -> bool:
        return not self._items

    def singleton(self) -> OneType | None:
        """The element if this is exactly {t} with count 1, else None."""
        if len(self._items) == 1 and self._items[0][1] == 1:
            return self._items[0][0]
        return None

    def total(self) -> CountValue:
        s: CountValue = 0
        for _, v in self._items:
            s = add_counts(s, v)
        return s

    def __eq__(self, other):
        return isinstance(other, KMultiset) and self._h == other._h and self.k == other.k \
            and self._items == other._items

    def __hash__(self):
        return self._h

    def __str__(self) -> str:
        if not self._items:
            return "[]"
        return "[" + ", ".join(f"{t}:{v}" for t, v in self._items) + "]"

    __repr__ = __str__


def mset_union(a: KMultiset, b: KMultiset) -> KMultiset:
    if a.k != b.k:
        raise TypeError_(f"cutoff mismatch: {a.k} vs {b.k}")
    if not b._items:
        return a
    if not a._items:
        return b
    out: dict[OneType, CountValue] = dict(a._items)
    for t, v in b._items:
        out[t] = cut(a.k, add_counts(out.get(t, 0), v))
    return KMultiset(a.k, out)


def mset_union_all(k: int, parts: Iterable[KMultiset]) -> KMultiset:
    acc = KMultiset(k)
    for p in parts:
        acc = mset_union(acc, p)
    return acc


def mset_intersect(a: KMultiset, b: KMultiset) -> KMultiset:
    if a.k != b.k:
        raise TypeError_(f"cutoff mismatch: {a.k} vs {b.k}")
    bd = dict(b._items)
    return KMultiset(a.k, {t: count_min(v, bd[t]) for t, v in a._items if t in bd})


def enumerate_multisets(k: int, universe: Iterable[OneType], max_total: int | None = None,
                        allow_inf: bool = True) -> Iterator[KMultiset]:
    """All k-multisets over universe, smaller totals first within each prefix.

    max_total bounds the sum of finite counts (an INF entry counts as k+1).
    """
    elems = list(universe)
    values: list[CountValue] = list(range(k + 1)) + ([INF] if allow_inf else [])

    def weight(v: CountValue) -> int:
        return k + 1 if v is INF else v

    def rec(i: int, budget: int | None, acc: dict) -> Iterator[KMultiset]:
        if i == len(elems):
            yield KMultiset(k, acc)
            return
        for v in values:
            w = weight(v)
            if budget is not None and w > budget:
                continue
            if v != 0:
                acc[elems[i]] = v
            yield from rec(i + 1, None if budget is None else budget - w, acc)
            acc.pop(elems[i], None)

    yield from rec(0, max_total, {})
