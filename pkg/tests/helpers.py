"""Shared fixtures and an independent reference evaluator for the tests."""

from treelogic.formula_core import (And, Binary, Const, Count, Eq, Exists, Forall, Implies, Nav, Not,
                                    Or, Signature, Unary, parse)
from treelogic.normalizer import NormalFormC2
from treelogic.tree_model import Tree

GB = Signature(("green", "black"))
GREEN_BLACK_PHI = NormalFormC2(
    Const(True),
    (("<=", 3, parse("(and (green x) (and (black y) (or (or (child x y) (child y x)) "
                     "(or (next x y) (next y x)))))", GB)),),
    GB,
)


def green_black_tree() -> Tree:
    """u (node 2) is green with a black child and black siblings on both sides;
    v (node 4) is a green child of u with two black children."""
    return Tree.from_nested(((), [
        (("black",), []),
        (("green",), [
            (("black",), []),
            (("green",), [(("black",), []), (("black",), [])]),
        ]),
        (("black",), []),
    ]), GB)


GB_U, GB_V = 2, 4


def star(k: int) -> Tree:
    """Root with k leaf children."""
    return Tree([-1] + [0] * k)


def _nav(t: Tree, kind: str, a: int, b: int) -> bool:
    if kind == "child":
        return t.parents[b] == a
    if kind == "descendant":
        p = t.parents[b]
        while p != -1:
            if p == a:
                return True
            p = t.parents[p]
        return False
    if t.parents[a] != t.parents[b] or a == b:
        return False
    sibs = t.children[t.parents[a]] if t.parents[a] >= 0 else (0,)
    i, j = sibs.index(a), sibs.index(b)
    return j == i + 1 if kind == "next" else j > i


def naive_eval(t: Tree, f, env: dict) -> bool:
    """Direct recursive evaluation, written independently of the library evaluator."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Unary):
        return f.sym in t.labels[env[f.var]]
    if isinstance(f, Binary):
        return (env[f.v1], env[f.v2]) in t.edges[f.sym]
    if isinstance(f, Nav):
        return _nav(t, f.kind, env[f.v1], env[f.v2])
    if isinstance(f, Eq):
        return env[f.v1] == env[f.v2]
    if isinstance(f, Not):
        return not naive_eval(t, f.arg, env)
    if isinstance(f, And):
        return naive_eval(t, f.left, env) and naive_eval(t, f.right, env)
    if isinstance(f, Or):
        return naive_eval(t, f.left, env) or naive_eval(t, f.right, env)
    if isinstance(f, Implies):
        return not naive_eval(t, f.left, env) or naive_eval(t, f.right, env)
    if isinstance(f, Exists):
        return any(naive_eval(t, f.body, {**env, f.var: w}) for w in range(t.n))
    if isinstance(f, Forall):
        return all(naive_eval(t, f.body, {**env, f.var: w}) for w in range(t.n))
    if isinstance(f, Count):
        n = sum(naive_eval(t, f.body, {**env, f.var: w}) for w in range(t.n))
        return {">=": n >= f.n, "<=": n <= f.n, "=": n == f.n}[f.op]
    raise TypeError(f)
