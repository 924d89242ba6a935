"""Scott-style normal forms for FO2 (with common binaries) and for C2.

Both conversions work on the negation normal form of the input sentence.
Each maximal quantified subformula is replaced by a fresh unary predicate
P and a requirement "P(x) implies the subformula" is emitted.  In negation
normal form the only negative contexts are bodies of ``count<=``; a quantified
part there is replaced by the negated name of its dual.  So every name occurs
positively and the one-directional requirement keeps satisfiability over
every tree frame.

Requirements become normal-form conjuncts as follows.

FO2, existential ``P(x) -> exists y psi``: the set of order formulas under
which psi can hold is computed by substituting the navigational atoms; a
single candidate yields one conjunct, several candidates get one fresh
selector predicate each plus the clause ``P(x) -> S_1(x) or ... or S_r(x)``.

C2: ``P(x) -> count<= n y psi`` becomes ``forall x count<= n y (P(x) and psi)``,
``P(x) -> count>= 1 y psi`` becomes ``forall x count>= 1 y (not P(x) or psi)``.
A guarded ``count>= n`` with n >= 2 has no size-independent encoding of that
shape (any such conjunct forces at least n nodes), so it is first rewritten
into an equivalent counting-free formula by :func:`treelogic.c2_to_fo2.translate`
and then normalized like any other FO2 requirement.

Output size, counted as a tree of AST nodes, stays within
``SIZE_FACTOR * |f|**2`` for inputs without such guarded bounds.  The
worst ratio measured on random sentences is 112, reached by ``exists x A(x)``
(2 nodes in, 448 out).  Guarded bounds n >= 2 go through the translation
and can exceed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formula_core import (FALSE, TRUE, And, Binary, Const, Count, Eq, Exists, Forall, Formula,
                      FormulaError, Implies, Nav, Not, ORDERS, Or, Order, Signature, Unary, conj,
                      disj, free_vars, has_counting, is_quantifier_free, order_from_formula,
                      other_var, swap_vars, symbols)

SIZE_FACTOR = 120


class NormalizationError(FormulaError):
    pass


# ---------------------------------------------------------------- result types

@dataclass(frozen=True)
class NormalFormFO2:
    """forall x y chi  and  forall x (lambda_i(x) -> exists y (theta_i and chi_i))."""

    chi: Formula
    conjuncts: tuple[tuple[str, Order, Formula], ...]
    sig: Signature = field(default_factory=Signature)

    @property
    def m(self) -> int:
        return len(self.conjuncts)

    def to_formula(self) -> Formula:
        parts = [Forall("x", Forall("y", self.chi))]
        for lam, theta, chi_i in self.conjuncts:
            parts.append(Forall("x", Implies(Unary(lam, "x"),
                                             Exists("y", And(theta.formula(), chi_i)))))
        return conj(parts)


@dataclass(frozen=True)
class NormalFormC2:
    """forall x y chi  and  forall x count(op_i, C_i) y chi_i."""

    chi: Formula
    conjuncts: tuple[tuple[str, int, Formula], ...]
    sig: Signature = field(default_factory=Signature)

    @property
    def m(self) -> int:
        return len(self.conjuncts)

    @property
    def C(self) -> int:
        return max((c for _, c, _ in self.conjuncts), default=0)

    def to_formula(self) -> Formula:
        parts = [Forall("x", Forall("y", self.chi))]
        for op, c, chi_i in self.conjuncts:
            parts.append(Forall("x", Count(op, c, "y", chi_i)))
        return conj(parts)


def used_signature(nf) -> Signature:
    """Restriction of nf.sig to the symbols that occur in nf."""
    un, bi = symbols(nf.to_formula())
    if isinstance(nf, NormalFormFO2):
        un = un | {lam for lam, _, _ in nf.conjuncts}
    return nf.sig.restrict(un, bi)


# ---------------------------------------------------------------- recognizers

def _flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _flatten_and(f.left) + _flatten_and(f.right)
    return [f]


def as_nf_fo2(f: Formula, sig: Signature) -> NormalFormFO2 | None:
    """Read f as an FO2 normal form if it already has that shape."""
    chis: list[Formula] = []
    conjs: list[tuple[str, Order, Formula]] = []
    for part in _flatten_and(f):
        if isinstance(part, Forall) and part.var == "x" and isinstance(part.body, Forall) \
                and part.body.var == "y" and is_quantifier_free(part.body.body):
            chis.append(part.body.body)
            continue
        if isinstance(part, Forall) and part.var == "x" and isinstance(part.body, Implies):
            lam, rhs = part.body.left, part.body.right
            if isinstance(lam, Unary) and lam.var == "x" and isinstance(rhs, Exists) and rhs.var == "y" \
                    and isinstance(rhs.body, And):
                theta = order_from_formula(rhs.body.left)
                if theta is not None and is_quantifier_free(rhs.body.right):
                    conjs.append((lam.sym, theta, rhs.body.right))
                    continue
        return None
    if not chis:
        chis = [TRUE]
    if len(chis) > 1:
        return None
    return NormalFormFO2(chis[0], tuple(conjs), sig)


def as_nf_c2(f: Formula, sig: Signature) -> NormalFormC2 | None:
    """Read f as a C2 normal form if it already has that shape."""
    chis: list[Formula] = []
    conjs: list[tuple[str, int, Formula]] = []
    for part in _flatten_and(f):
        if isinstance(part, Forall) and part.var == "x" and isinstance(part.body, Forall) \
                and part.body.var == "y" and is_quantifier_free(part.body.body):
            chis.append(part.body.body)
            continue
        if isinstance(part, Forall) and part.var == "x" and isinstance(part.body, Count) \
                and part.body.var == "y" and part.body.op in (">=", "<=") \
                and is_quantifier_free(part.body.body):
            conjs.append((part.body.op, part.body.n, part.body.body))
            continue
        return None
    if len(chis) > 1:
        return None
    return NormalFormC2(chis[0] if chis else TRUE, tuple(conjs), sig)


# ---------------------------------------------------------------- helpers

def simplify(f: Formula) -> Formula:
    """Constant folding for quantifier-free formulas."""
    if isinstance(f, Not):
        a = simplify(f.arg)
        if isinstance(a, Const):
            return FALSE if a.value else TRUE
        return Not(a)
    if isinstance(f, (And, Or, Implies)):
        a, b = simplify(f.left), simplify(f.right)
        if isinstance(f, Implies):
            if isinstance(a, Const):
                return b if a.value else TRUE
            if isinstance(b, Const):
                return TRUE if b.value else simplify(Not(a))
            return Implies(a, b)
        absorbing = FALSE if isinstance(f, And) else TRUE
        for u, w in ((a, b), (b, a)):
            if isinstance(u, Const):
                return absorbing if u == absorbing else w
        return type(f)(a, b)
    return f


def substitute_order(f: Formula, theta: Order) -> Formula:
    """Replace navigational and equality atoms between x and y by their truth under theta."""
    if isinstance(f, Nav):
        if f.v1 == f.v2:
            return FALSE
        return TRUE if theta.nav_truth(f.kind, f.v1 == "x") else FALSE
    if isinstance(f, Eq):
        return TRUE if f.v1 == f.v2 or theta is Order.EQUAL else FALSE
    if isinstance(f, Binary) and theta is Order.EQUAL:
        return Binary(f.sym, "x", "x")
    if isinstance(f, Unary) and theta is Order.EQUAL:
        return Unary(f.sym, "x")
    if isinstance(f, Not):
        return Not(substitute_order(f.arg, theta))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(substitute_order(f.left, theta), substitute_order(f.right, theta))
    if isinstance(f, (Exists, Forall, Count)):
        raise NormalizationError("substitute_order expects a quantifier-free formula")
    return f


def possible_orders(psi: Formula) -> list[tuple[Order, Formula]]:
    """Orders under which quantifier-free psi is not trivially false, with the simplified body."""
    out = []
    for o in ORDERS:
        s = simplify(substitute_order(psi, o))
        if s != FALSE:
            out.append((o, s))
    return out


def nnf(f: Formula, counting: bool, negate: bool = False) -> Formula:
    """Negation normal form.  With counting=True, exists/forall become count>=1 / count<=0."""
    if isinstance(f, Const):
        return Const(f.value != negate)
    if isinstance(f, (Unary, Binary, Nav, Eq)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.arg, counting, not negate)
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right), counting, negate)
    if isinstance(f, (And, Or)):
        a, b = nnf(f.left, counting, negate), nnf(f.right, counting, negate)
        is_and = isinstance(f, And) != negate
        return And(a, b) if is_and else Or(a, b)
    if isinstance(f, Exists):
        if counting:
            return nnf(Count(">=", 1, f.var, f.body), counting, negate)
        return Forall(f.var, nnf(f.body, counting, True)) if negate else Exists(f.var, nnf(f.body, counting))
    if isinstance(f, Forall):
        if counting:
            return nnf(Count("<=", 0, f.var, Not(f.body)), counting, negate)
        return Exists(f.var, nnf(f.body, counting, True)) if negate else Forall(f.var, nnf(f.body, counting))
    if isinstance(f, Count):
        if f.op == "=":
            return nnf(And(Count(">=", f.n, f.var, f.body), Count("<=", f.n, f.var, f.body)),
                       counting, negate)
        op, n = f.op, f.n
        if negate:
            if op == ">=":
                if n == 0:
                    return FALSE
                op, n = "<=", n - 1
            else:
                op, n = ">=", n + 1
        if op == ">=" and n == 0:
            return TRUE
        return Count(op, n, f.var, nnf(f.body, counting))
    raise NormalizationError(f"unknown node {f!r}")  # pragma: no cover


# ---------------------------------------------------------------- the conversion engine

class _Builder:
    def __init__(self, sig: Signature, counting: bool):
        self.sig = sig
        self.counting = counting
        self.fresh: list[str] = []
        self.clauses: list[Formula] = []
        self.fo2_conjuncts: list[tuple[str, Order, Formula]] = []
        self.c2_conjuncts: list[tuple[str, int, Formula]] = []
        self.memo: dict[Formula, str] = {}
        self.top: str | None = None

    def new_symbol(self, stem: str) -> str:
        name = self.sig.fresh(stem, self.fresh)
        self.fresh.append(name)
        return name

    def always(self) -> str:
        """A unary predicate forced true everywhere (guard for unguarded requirements)."""
        if self.top is None:
            self.top = self.new_symbol("T")
            self.clauses.append(Unary(self.top, "x"))
        return self.top

    # -- abstraction of quantified subformulas
    def abstract(self, f: Formula, positive: bool = True) -> Formula:
        """Quantifier-free version of NNF formula f with fresh names for quantified parts.

        A quantified part at negative polarity (inside the body of a count<=)
        is replaced by the negation of a name for its dual.
        """
        if isinstance(f, (Exists, Forall, Count)):
            if not positive:
                return Not(self.abstract(nnf(f, self.counting, negate=True)))
            free = other_var(f.var)
            std = f if f.var == "y" else swap_vars(f)
            name = self.memo.get(std)
            if name is None:
                name = self.new_symbol("P")
                self.memo[std] = name
                self.require(name, std)
            return Unary(name, free)
        if isinstance(f, Const) and not positive:
            return f
        if isinstance(f, Not):
            return Not(self.abstract(f.arg, positive))
        if isinstance(f, (And, Or)):
            return type(f)(self.abstract(f.left, positive), self.abstract(f.right, positive))
        return f

    # -- requirement guard(x) -> q where q quantifies y
    def require(self, guard: str | None, q: Formula) -> None:
        body = self.abstract(q.body, not (isinstance(q, Count) and q.op == "<="))
        g = Unary(guard, "x") if guard is not None else None
        if isinstance(q, Forall):
            self.clauses.append(body if g is None else Or(Not(g), body))
        elif isinstance(q, Exists):
            self._require_exists(guard, body)
        else:
            self._require_count(guard, q, body)

    def _require_exists(self, guard: str | None, body: Formula) -> None:
        lam = guard if guard is not None else self.always()
        options = possible_orders(body)
        if not options:
            self.clauses.append(Not(Unary(lam, "x")))
            return
        if len(options) == 1:
            theta, chi_i = options[0]
            self._add_exists(lam, theta, chi_i)
            return
        selectors = []
        for theta, chi_i in options:
            s = self.new_symbol("S")
            selectors.append(Unary(s, "x"))
            self._add_exists(s, theta, chi_i)
        guard_atom = Unary(lam, "x")
        self.clauses.append(Or(Not(guard_atom), disj(selectors)))
        # selectors are exclusive and only set under the guard; this keeps the
        # number of realizable 1-types linear in the number of options
        for i, s in enumerate(selectors):
            self.clauses.append(Or(Not(s), guard_atom))
            for s2 in selectors[i + 1:]:
                self.clauses.append(Or(Not(s), Not(s2)))

    def _add_exists(self, lam: str, theta: Order, chi_i: Formula) -> None:
        if theta is Order.EQUAL:
            # a witness equal to x is a constraint on x alone
            self.clauses.append(Or(Not(Unary(lam, "x")), chi_i))
        else:
            self.fo2_conjuncts.append((lam, theta, chi_i))

    def _require_count(self, guard: str | None, q: Count, body: Formula) -> None:
        op, n = q.op, q.n
        if guard is None:
            self.c2_conjuncts.append((op, n, body))
            return
        g = Unary(guard, "x")
        if op == "<=":
            self.c2_conjuncts.append(("<=", n, And(g, body)))
        elif n == 1:
            self.c2_conjuncts.append((">=", 1, Or(Not(g), body)))
        elif n >= 2:
            from .c2_to_fo2 import translate
            plain = nnf(translate(Count(">=", n, "y", body)), counting=True)
            self.clauses.append(Or(Not(g), self.abstract(plain)))

    # -- top level: the sentence must hold (at every x)
    def assert_top(self, f: Formula) -> None:
        if isinstance(f, And):
            self.assert_top(f.left)
            self.assert_top(f.right)
        elif isinstance(f, Const) and f.value:
            return
        elif isinstance(f, (Exists, Forall, Count)):
            std = f if f.var == "y" else swap_vars(f)
            if isinstance(std, Count) and std.op == "<=" and std.n == 0:
                std = Forall("y", nnf(std.body, self.counting, negate=True))
            if isinstance(std, Forall):
                # forall y phi(y) holds iff phi holds at every node
                self.assert_top(swap_vars(std.body) if "y" in free_vars(std.body) else std.body)
            else:
                self.require(None, std)
        else:
            self.clauses.append(self.abstract(f))

    def chi(self) -> Formula:
        return conj(self.clauses) if self.clauses else TRUE


def _check_sentence(f: Formula) -> None:
    fv = free_vars(f)
    if fv:
        raise NormalizationError(f"input must be a sentence; free variable(s) {', '.join(sorted(fv))}")


def to_nf_fo2(f: Formula, sig: Signature) -> tuple[NormalFormFO2, Signature]:
    if has_counting(f):
        raise NormalizationError("counting quantifier present; use the C2 normal form")
    _check_sentence(f)
    ready = as_nf_fo2(f, sig)
    if ready is not None:
        return ready, sig
    b = _Builder(sig, counting=False)
    b.assert_top(nnf(f, counting=False))
    sig2 = sig.extend(b.fresh)
    return NormalFormFO2(simplify(b.chi()), tuple(b.fo2_conjuncts), sig2), sig2


def to_nf_c2(f: Formula, sig: Signature) -> tuple[NormalFormC2, Signature]:
    if symbols(f)[1]:
        raise NormalizationError("common binary atoms present; C2 normal form needs a signature without them")
    _check_sentence(f)
    ready = as_nf_c2(f, sig)
    if ready is not None:
        return ready, sig
    b = _Builder(sig, counting=True)
    b.assert_top(nnf(f, counting=True))
    sig2 = sig.extend(b.fresh)
    if b.fo2_conjuncts:  # pragma: no cover - counting mode never emits them
        raise NormalizationError("internal error: FO2 conjunct in C2 mode")
    return NormalFormC2(simplify(b.chi()), tuple(b.c2_conjuncts), sig2), sig2
