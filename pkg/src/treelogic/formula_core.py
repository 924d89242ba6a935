"""Signatures, formula ASTs, s-expression syntax and order formulas.

Formulas are immutable trees of small node classes.  Each node caches its
structural hash so that large shared formula DAGs (as produced by the
counting translation) can be used as dictionary keys cheaply.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

VARS = ("x", "y")
NAV_KINDS = ("child", "descendant", "next", "following")
COUNT_OPS = (">=", "<=", "=")

_KEYWORDS = frozenset(
    ["and", "or", "not", "implies", "exists", "forall", "count>=", "count<=",
     "count=", "true", "false", "=", "x", "y", *NAV_KINDS]
)


class FormulaError(Exception):
    """Raised for ill-formed formulas or signatures."""


class ParseError(FormulaError):
    def __init__(self, message: str, line: int, col: int, expected: Iterable[str] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        text = f"{message} at line {line}, column {col}"
        if self.expected:
            text += f" (expected {' or '.join(self.expected)})"
        super().__init__(text)


# ---------------------------------------------------------------- signature

@dataclass(frozen=True)
class Signature:
    unary: tuple[str, ...] = ()
    binary: tuple[str, ...] = ()
    navigational: tuple[str, ...] = field(default=NAV_KINDS, init=False)

    def __post_init__(self):
        object.__setattr__(self, "unary", tuple(self.unary))
        object.__setattr__(self, "binary", tuple(self.binary))
        names = list(self.unary) + list(self.binary)
        if len(set(names)) != len(names):
            raise FormulaError("symbol names must be unique across the signature")
        for name in names:
            if name in _KEYWORDS or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
                raise FormulaError(f"invalid symbol name {name!r}")

    def extend(self, unary: Iterable[str] = (), binary: Iterable[str] = ()) -> "Signature":
        return Signature(self.unary + tuple(unary), self.binary + tuple(binary))

    def restrict(self, unary: Iterable[str], binary: Iterable[str] = ()) -> "Signature":
        """Sub-signature keeping declaration order."""
        u, b = set(unary), set(binary)
        return Signature(tuple(s for s in self.unary if s in u),
                         tuple(s for s in self.binary if s in b))

    def fresh(self, stem: str, taken: Iterable[str] = ()) -> str:
        used = set(self.unary) | set(self.binary) | set(taken)
        i = 0
        while f"{stem}{i}" in used:
            i += 1
        return f"{stem}{i}"

    def to_text(self) -> str:
        return f"unary: {' '.join(self.unary)}\nbinary: {' '.join(self.binary)}\n".replace(": \n", ":\n")

    @classmethod
    def from_text(cls, text: str) -> "Signature":
        unary: list[str] = []
        binary: list[str] = []
        seen = set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, rest = line.partition(":")
            key = key.strip()
            if not sep or key not in ("unary", "binary") or key in seen:
                raise FormulaError(f"malformed signature line: {raw!r}")
            seen.add(key)
            (unary if key == "unary" else binary).extend(rest.split())
        return cls(tuple(unary), tuple(binary))


# ---------------------------------------------------------------- AST nodes

class Formula:
    __slots__ = ("_hash",)

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __hash__(self) -> int:
        return self._hash

    def __init_subclass__(cls, **kw):
        # defining __eq__ in a subclass drops the inherited __hash__
        super().__init_subclass__(**kw)
        cls.__hash__ = Formula.__hash__

    def __repr__(self) -> str:
        return pretty(self)

    # convenience constructors
    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)


class Const(Formula):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = bool(value)
        self._hash = hash(("const", self.value))

    def __eq__(self, other):
        return isinstance(other, Const) and other.value == self.value


TRUE = Const(True)
FALSE = Const(False)


class Unary(Formula):
    __slots__ = ("sym", "var")

    def __init__(self, sym: str, var: str):
        self.sym, self.var = sym, var
        self._hash = hash(("u", sym, var))

    def __eq__(self, other):
        return self is other or (isinstance(other, Unary) and (self.sym, self.var) == (other.sym, other.var))


class Binary(Formula):
    """Atom over a common (uninterpreted) binary symbol."""
    __slots__ = ("sym", "v1", "v2")

    def __init__(self, sym: str, v1: str, v2: str):
        self.sym, self.v1, self.v2 = sym, v1, v2
        self._hash = hash(("b", sym, v1, v2))

    def __eq__(self, other):
        return self is other or (isinstance(other, Binary)
                                 and (self.sym, self.v1, self.v2) == (other.sym, other.v1, other.v2))


class Nav(Formula):
    __slots__ = ("kind", "v1", "v2")

    def __init__(self, kind: str, v1: str, v2: str):
        if kind not in NAV_KINDS:
            raise FormulaError(f"unknown navigational relation {kind!r}")
        self.kind, self.v1, self.v2 = kind, v1, v2
        self._hash = hash(("n", kind, v1, v2))

    def __eq__(self, other):
        return self is other or (isinstance(other, Nav)
                                 and (self.kind, self.v1, self.v2) == (other.kind, other.v1, other.v2))


class Eq(Formula):
    __slots__ = ("v1", "v2")

    def __init__(self, v1: str, v2: str):
        self.v1, self.v2 = v1, v2
        self._hash = hash(("eq", v1, v2))

    def __eq__(self, other):
        return self is other or (isinstance(other, Eq) and (self.v1, self.v2) == (other.v1, other.v2))


class Not(Formula):
    __slots__ = ("arg",)

    def __init__(self, arg: Formula):
        self.arg = arg
        self._hash = hash(("not", arg._hash))

    def children(self):
        return (self.arg,)

    def __eq__(self, other):
        return self is other or (isinstance(other, Not) and self._hash == other._hash and self.arg == other.arg)


class _BinOp(Formula):
    __slots__ = ("left", "right")
    tag = ""

    def __init__(self, left: Formula, right: Formula):
        self.left, self.right = left, right
        self._hash = hash((self.tag, left._hash, right._hash))

    def children(self):
        return (self.left, self.right)

    def __eq__(self, other):
        return self is other or (type(other) is type(self) and self._hash == other._hash
                                 and self.left == other.left and self.right == other.right)


class And(_BinOp):
    __slots__ = ()
    tag = "and"


class Or(_BinOp):
    __slots__ = ()
    tag = "or"


class Implies(_BinOp):
    __slots__ = ()
    tag = "implies"


class _Quant(Formula):
    __slots__ = ("var", "body")
    tag = ""

    def __init__(self, var: str, body: Formula):
        self.var, self.body = var, body
        self._hash = hash((self.tag, var, body._hash))

    def children(self):
        return (self.body,)

    def __eq__(self, other):
        return self is other or (type(other) is type(self) and self._hash == other._hash
                                 and self.var == other.var and self.body == other.body)


class Exists(_Quant):
    __slots__ = ()
    tag = "exists"


class Forall(_Quant):
    __slots__ = ()
    tag = "forall"


class Count(Formula):
    """Counting quantifier: op is '>=', '<=' or '='."""
    __slots__ = ("op", "n", "var", "body")

    def __init__(self, op: str, n: int, var: str, body: Formula):
        if op not in COUNT_OPS:
            raise FormulaError(f"unknown counting operator {op!r}")
        if not isinstance(n, int) or n < 0:
            raise FormulaError("negative count")
        self.op, self.n, self.var, self.body = op, n, var, body
        self._hash = hash(("count", op, n, var, body._hash))

    def children(self):
        return (self.body,)

    def __eq__(self, other):
        return self is other or (isinstance(other, Count) and self._hash == other._hash
                                 and (self.op, self.n, self.var) == (other.op, other.n, other.var)
                                 and self.body == other.body)


ATOMS = (Const, Unary, Binary, Nav, Eq)
QUANTIFIERS = (Exists, Forall, Count)


def _balanced(items: list, op) -> Formula:
    # balanced nesting keeps long normal forms shallow for the recursive evaluators
    if len(items) == 1:
        return items[0]
    mid = (len(items) + 1) // 2
    return op(_balanced(items[:mid], op), _balanced(items[mid:], op))


def conj(parts: Iterable[Formula]) -> Formula:
    """Balanced conjunction; TRUE for the empty list."""
    items = list(parts)
    return _balanced(items, And) if items else TRUE


def disj(parts: Iterable[Formula]) -> Formula:
    """Balanced disjunction; FALSE for the empty list."""
    items = list(parts)
    return _balanced(items, Or) if items else FALSE


def other_var(v: str) -> str:
    return "y" if v == "x" else "x"


# ---------------------------------------------------------------- traversal

def walk(f: Formula) -> Iterator[Formula]:
    """All distinct sub-formula objects (DAG-aware, by identity)."""
    seen: set[int] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        yield g
        stack.extend(g.children())


def tree_size(f: Formula) -> int:
    """Number of AST nodes counted as a tree (shared parts counted each time)."""
    memo: dict[int, int] = {}

    def go(g: Formula) -> int:
        key = id(g)
        if key not in memo:
            memo[key] = 1 + sum(go(c) for c in g.children())
        return memo[key]

    return go(f)


def free_vars(f: Formula) -> frozenset[str]:
    memo: dict[int, frozenset[str]] = {}

    def go(g: Formula) -> frozenset[str]:
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Unary):
            r = frozenset([g.var])
        elif isinstance(g, (Binary, Nav, Eq)):
            r = frozenset([g.v1, g.v2])
        elif isinstance(g, Const):
            r = frozenset()
        elif isinstance(g, QUANTIFIERS):
            r = go(g.body) - {g.var}
        else:
            r = frozenset().union(*(go(c) for c in g.children()))
        memo[key] = r
        return r

    return go(f)


def symbols(f: Formula) -> tuple[frozenset[str], frozenset[str]]:
    """(unary symbols, common binary symbols) occurring in f."""
    un, bi = set(), set()
    for g in walk(f):
        if isinstance(g, Unary):
            un.add(g.sym)
        elif isinstance(g, Binary):
            bi.add(g.sym)
    return frozenset(un), frozenset(bi)


def has_counting(f: Formula) -> bool:
    return any(isinstance(g, Count) for g in walk(f))


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, QUANTIFIERS) for g in walk(f))


def swap_vars(f: Formula) -> Formula:
    """Rename x to y and y to x everywhere, bound occurrences included."""
    memo: dict[int, Formula] = {}
    sw = {"x": "y", "y": "x"}

    def go(g: Formula) -> Formula:
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Const):
            r = g
        elif isinstance(g, Unary):
            r = Unary(g.sym, sw[g.var])
        elif isinstance(g, Binary):
            r = Binary(g.sym, sw[g.v1], sw[g.v2])
        elif isinstance(g, Nav):
            r = Nav(g.kind, sw[g.v1], sw[g.v2])
        elif isinstance(g, Eq):
            r = Eq(sw[g.v1], sw[g.v2])
        elif isinstance(g, Not):
            r = Not(go(g.arg))
        elif isinstance(g, _BinOp):
            r = type(g)(go(g.left), go(g.right))
        elif isinstance(g, Count):
            r = Count(g.op, g.n, sw[g.var], go(g.body))
        elif isinstance(g, _Quant):
            r = type(g)(sw[g.var], go(g.body))
        else:  # pragma: no cover
            raise FormulaError(f"unknown node {g!r}")
        memo[key] = r
        return r

    return go(f)


def validate(f: Formula, sig: Signature) -> None:
    """Check variables and symbol resolution against sig."""
    un, bi = set(sig.unary), set(sig.binary)
    for g in walk(f):
        vs: tuple[str, ...] = ()
        if isinstance(g, Unary):
            if g.sym not in un:
                raise FormulaError(f"unknown unary symbol {g.sym!r}")
            vs = (g.var,)
        elif isinstance(g, Binary):
            if g.sym not in bi:
                raise FormulaError(f"unknown binary symbol {g.sym!r}")
            vs = (g.v1, g.v2)
        elif isinstance(g, (Nav, Eq)):
            vs = (g.v1, g.v2)
        elif isinstance(g, QUANTIFIERS):
            vs = (g.var,)
        for v in vs:
            if v not in VARS:
                raise FormulaError(f"bad variable {v!r}")


def classify(f: Formula) -> str:
    counting = has_counting(f)
    binary = bool(symbols(f)[1])
    if counting and binary:
        return "c2-with-common-binary"
    if counting:
        return "c2"
    if binary:
        return "fo2-with-common-binary"
    return "pure-fo2"


# ---------------------------------------------------------------- printing

def pretty(f: Formula) -> str:
    memo: dict[int, str] = {}

    def go(g: Formula) -> str:
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Const):
            s = "true" if g.value else "false"
        elif isinstance(g, Unary):
            s = f"({g.sym} {g.var})"
        elif isinstance(g, Binary):
            s = f"({g.sym} {g.v1} {g.v2})"
        elif isinstance(g, Nav):
            s = f"({g.kind} {g.v1} {g.v2})"
        elif isinstance(g, Eq):
            s = f"(= {g.v1} {g.v2})"
        elif isinstance(g, Not):
            s = f"(not {go(g.arg)})"
        elif isinstance(g, _BinOp):
            s = f"({g.tag} {go(g.left)} {go(g.right)})"
        elif isinstance(g, Count):
            s = f"(count{g.op} {g.n} {g.var} {go(g.body)})"
        elif isinstance(g, _Quant):
            s = f"({g.tag} {g.var} {go(g.body)})"
        else:  # pragma: no cover
            raise FormulaError(f"unknown node {g!r}")
        memo[key] = s
        return s

    return go(f)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"(\()|(\))|(-?\d+)|(count>=|count<=|count=|=|[A-Za-z_][A-Za-z0-9_']*)")


@dataclass
class _Tok:
    kind: str  # '(' ')' 'num' 'word' 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {ch!r}", line, col)
        kind = "(" if m.group(1) else ")" if m.group(2) else "num" if m.group(3) else "word"
        toks.append(_Tok(kind, m.group(0), line, col))
        col += m.end() - pos
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.toks = _tokenize(text)
        self.i = 0
        self.unary = set(sig.unary)
        self.binary = set(sig.binary)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, expected: str) -> _Tok:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"syntax error near {t.text or 'end of input'!r}", t.line, t.col, [expected])
        return t

    def var(self) -> str:
        t = self.next()
        if t.kind != "word" or t.text not in VARS:
            if t.kind in ("word", "num"):
                raise ParseError(f"bad variable {t.text!r}", t.line, t.col, ["x", "y"])
            raise ParseError(f"syntax error near {t.text or 'end of input'!r}", t.line, t.col, ["x", "y"])
        return t.text

    def formula(self) -> Formula:
        t = self.next()
        if t.kind == "word" and t.text in ("true", "false"):
            return TRUE if t.text == "true" else FALSE
        if t.kind != "(":
            raise ParseError(f"syntax error near {t.text or 'end of input'!r}", t.line, t.col,
                             ["'('", "true", "false"])
        head = self.next()
        if head.kind != "word":
            raise ParseError(f"syntax error near {head.text or 'end of input'!r}", head.line, head.col,
                             ["connective", "quantifier", "symbol"])
        h = head.text
        if h in ("and", "or", "implies"):
            a = self.formula()
            b = self.formula()
            node: Formula = {"and": And, "or": Or, "implies": Implies}[h](a, b)
        elif h == "not":
            node = Not(self.formula())
        elif h in ("exists", "forall"):
            v = self.var()
            node = (Exists if h == "exists" else Forall)(v, self.formula())
        elif h.startswith("count"):
            num = self.next()
            if num.kind != "num":
                raise ParseError(f"syntax error near {num.text or 'end of input'!r}", num.line, num.col,
                                 ["natural number"])
            n = int(num.text)
            if n < 0:
                raise ParseError("negative count", num.line, num.col, ["natural number"])
            v = self.var()
            node = Count(h[5:], n, v, self.formula())
        elif h == "=":
            node = Eq(self.var(), self.var())
        elif h in NAV_KINDS:
            node = Nav(h, self.var(), self.var())
        elif h in ("x", "y", "true", "false"):
            raise ParseError(f"syntax error near {h!r}", head.line, head.col,
                             ["connective", "quantifier", "symbol"])
        else:
            v1 = self.var()
            if self.peek().kind == ")":
                if h not in self.unary:
                    raise ParseError(f"unknown symbol {h!r}", head.line, head.col)
                node = Unary(h, v1)
            else:
                v2 = self.var()
                if h not in self.binary:
                    raise ParseError(f"unknown symbol {h!r}", head.line, head.col)
                node = Binary(h, v1, v2)
        self.expect(")", "')'")
        return node


def parse(text: str, sig: Signature) -> Formula:
    p = _Parser(text, sig)
    f = p.formula()
    t = p.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col, ["end of input"])
    return f


# ---------------------------------------------------------------- order formulas

class Order(enum.Enum):
    """The ten mutually exclusive relative positions of a pair (x, y)."""

    DOWN = "Down"
    UP = "Up"
    DEEP_DOWN = "DeepDown"
    DEEP_UP = "DeepUp"
    RIGHT = "Right"
    LEFT = "Left"
    FAR_RIGHT = "FarRight"
    FAR_LEFT = "FarLeft"
    FREE = "Free"
    EQUAL = "Equal"

    def __str__(self) -> str:
        return self.value

    @property
    def inverse(self) -> "Order":
        return _INVERSE[self]

    @property
    def index(self) -> int:
        return _ORDER_INDEX[self]

    def formula(self) -> Formula:
        """The defining quantifier-free formula over x, y."""
        return _ORDER_FORMULA[self]

    def nav_truth(self, kind: str, forward: bool) -> bool:
        """Truth of kind(x,y) (forward) or kind(y,x) under this order."""
        if self is Order.EQUAL:
            return False
        o = self if forward else self.inverse
        return kind in _NAV_TRUE[o]


ORDERS: tuple[Order, ...] = tuple(Order)
NON_EQUAL_ORDERS: tuple[Order, ...] = tuple(o for o in ORDERS if o is not Order.EQUAL)
_ORDER_INDEX = {o: i for i, o in enumerate(ORDERS)}

_INVERSE = {
    Order.DOWN: Order.UP, Order.UP: Order.DOWN,
    Order.DEEP_DOWN: Order.DEEP_UP, Order.DEEP_UP: Order.DEEP_DOWN,
    Order.RIGHT: Order.LEFT, Order.LEFT: Order.RIGHT,
    Order.FAR_RIGHT: Order.FAR_LEFT, Order.FAR_LEFT: Order.FAR_RIGHT,
    Order.FREE: Order.FREE, Order.EQUAL: Order.EQUAL,
}

# navigational atoms kind(x, y) that hold under each order
_NAV_TRUE = {
    Order.DOWN: {"child", "descendant"},
    Order.DEEP_DOWN: {"descendant"},
    Order.RIGHT: {"next", "following"},
    Order.FAR_RIGHT: {"following"},
    Order.UP: set(), Order.DEEP_UP: set(), Order.LEFT: set(), Order.FAR_LEFT: set(),
    Order.FREE: set(),
}


def _build_order_formulas() -> dict[Order, Formula]:
    x, y = "x", "y"
    no_nav = conj([Not(Eq(x, y)), Not(Nav("descendant", x, y)), Not(Nav("descendant", y, x)),
                   Not(Nav("following", x, y)), Not(Nav("following", y, x))])
    return {
        Order.DOWN: Nav("child", x, y),
        Order.UP: Nav("child", y, x),
        Order.DEEP_DOWN: And(Nav("descendant", x, y), Not(Nav("child", x, y))),
        Order.DEEP_UP: And(Nav("descendant", y, x), Not(Nav("child", y, x))),
        Order.RIGHT: Nav("next", x, y),
        Order.LEFT: Nav("next", y, x),
        Order.FAR_RIGHT: And(Nav("following", x, y), Not(Nav("next", x, y))),
        Order.FAR_LEFT: And(Nav("following", y, x), Not(Nav("next", y, x))),
        Order.FREE: no_nav,
        Order.EQUAL: Eq(x, y),
    }


_ORDER_FORMULA = _build_order_formulas()


def order_from_formula(f: Formula) -> Order | None:
    for o, g in _ORDER_FORMULA.items():
        if g == f:
            return o
    return None


def entailment_matrix() -> dict[Order, dict[str, bool]]:
    """Which navigational atoms (and equality) each order makes true.

    Keys of the inner dict are 'child', 'descendant', 'next', 'following'
    (forward direction, i.e. kind(x,y)) and the reversed ones suffixed with
    '^-1', plus '='.
    """
    out = {}
    for o in ORDERS:
        row = {k: o.nav_truth(k, True) for k in NAV_KINDS}
        row.update({k + "^-1": o.nav_truth(k, False) for k in NAV_KINDS})
        row["="] = o is Order.EQUAL
        out[o] = row
    return out
