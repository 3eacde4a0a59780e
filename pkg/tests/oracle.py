"""Slow, obviously-correct reference implementations used by the tests."""
from __future__ import annotations

import itertools

from affine_reasoner.syntax import And, App, Atom, Const, Exists, Falsum, Forall, Imp, Or, Var


def term_value(t, n, funcs, consts, env):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Const):
        return consts[t.name]
    assert isinstance(t, App)
    args = tuple(term_value(a, n, funcs, consts, env) for a in t.args)
    return funcs[t.fn][args]


def holds(f, n, funcs, preds, consts, env=None):
    """Tarskian truth with dictionaries for tables; Con must already be expanded."""
    env = env or {}
    if isinstance(f, Falsum):
        return False
    if isinstance(f, Atom):
        args = tuple(term_value(a, n, funcs, consts, env) for a in f.args)
        return args in preds[f.pred]
    if isinstance(f, And):
        return holds(f.left, n, funcs, preds, consts, env) and holds(f.right, n, funcs, preds, consts, env)
    if isinstance(f, Or):
        return holds(f.left, n, funcs, preds, consts, env) or holds(f.right, n, funcs, preds, consts, env)
    if isinstance(f, Imp):
        return (not holds(f.left, n, funcs, preds, consts, env)) or holds(f.right, n, funcs, preds, consts, env)
    quant = all if isinstance(f, Forall) else any
    assert isinstance(f, (Forall, Exists))
    return quant(holds(f.body, n, funcs, preds, consts, {**env, f.var: d}) for d in range(n))


def interpretations(n, consts=(), order="documented"):
    """All (rev, Undir, constants) triples of size ``n``.

    ``documented``: rev as displacement vectors in lexicographic order, Undir as
    a binary counter whose least significant bit is cell (0,0), constants
    innermost.  ``reverse``: the same space walked backwards in every coordinate.
    """
    cells = [(i, j) for i in range(n) for j in range(n)]
    revs = [tuple((i + d[i]) % n for i in range(n)) for d in itertools.product(range(n), repeat=n)]
    undirs = []
    for k in range(2 ** (n * n)):
        undirs.append(frozenset(c for b, c in enumerate(cells) if k >> b & 1))
    const_values = list(itertools.product(range(n), repeat=len(consts)))
    if order == "reverse":
        revs, undirs, const_values = revs[::-1], undirs[::-1], const_values[::-1]
    for r in revs:
        for u in undirs:
            for cv in const_values:
                yield {"rev": {(i,): r[i] for i in range(n)}}, {"Undir": set(u)}, dict(zip(consts, cv)), r, u


def first_model(satisfy, falsify, sizes, consts=(), order="documented"):
    for n in range(sizes[0], sizes[1] + 1):
        for funcs, preds, cs, r, u in interpretations(n, consts, order):
            if all(holds(f, n, funcs, preds, cs) for f in satisfy) and \
                    not any(holds(f, n, funcs, preds, cs) for f in falsify):
                return n, r, sorted(u), cs
    return None


def random_closed_formula(rng, depth=3, names=("x", "y", "z")):
    """A closed formula over Undir and rev with connective depth at most ``depth``."""
    from affine_reasoner.syntax import FALSE

    def term(bound):
        t = Var(rng.choice(bound))
        while rng.random() < 0.25:
            t = App("rev", (t,))
        return t

    def go(d, bound):
        free = [v for v in names if v not in bound]
        if free and (not bound or rng.random() < 0.35):
            q = Forall if rng.random() < 0.5 else Exists
            v = free[0]
            return q(v, go(d, bound + [v]))
        if d == 0 or rng.random() < 0.2:
            if rng.random() < 0.05:
                return FALSE
            return Atom("Undir", (term(bound), term(bound)))
        op = rng.choice([And, Or, Imp, Imp])
        return op(go(d - 1, bound), go(d - 1, bound))

    return go(depth, [])
