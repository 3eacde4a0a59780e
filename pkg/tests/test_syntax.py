import pytest
from hypothesis import given, settings, strategies as st

from affine_reasoner.corpus import AXIOM_SOURCE
from affine_reasoner.syntax import (
    DEFAULT_DEFS,
    FALSE,
    And,
    App,
    ArityError,
    Atom,
    DefinedPredicate,
    DefinitionError,
    Forall,
    Imp,
    Or,
    ParseError,
    ShadowingError,
    UnifyFailure,
    UnknownSymbolError,
    Var,
    apply_subst,
    atoms,
    expand_defs,
    free_vars,
    parse_formula,
    print_formula,
    unify,
)

l, m, n = Var("l"), Var("m"), Var("n")


def U(a, b):
    return Atom("Undir", (a, b))


def rev(t):
    return App("rev", (t,))


def test_negation_is_implication_to_false():
    assert parse_formula("forall l. ~Undir(l,l)") == Forall("l", Imp(U(l, l), FALSE))


def test_sym_ast():
    f = parse_formula("forall l. forall m. (Undir(l,rev(m)) -> Undir(m,rev(l)))")
    assert f == Forall("l", Forall("m", Imp(U(l, rev(m)), U(m, rev(l)))))


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse_formula("Undir(l)")
    with pytest.raises(ArityError):
        parse_formula("Undir(rev(l,m),l)")


def test_unknown_symbol_and_syntax_errors():
    with pytest.raises(UnknownSymbolError):
        parse_formula("Foo(l,m)")
    with pytest.raises(ParseError) as e:
        parse_formula("Undir(l,m) &")
    assert e.value.pos == 12
    assert e.value.expected


def test_shadowing_rejected():
    with pytest.raises(ShadowingError):
        parse_formula("forall l. forall l. Undir(l,l)")


def test_precedence():
    f = parse_formula("~Undir(l,m) & Undir(m,n) | Undir(l,n) -> Undir(n,n) -> false")
    assert f == Imp(Or(And(Imp(U(l, m), FALSE), U(m, n)), U(l, n)), Imp(U(n, n), FALSE))
    assert parse_formula("Undir(l,m) <-> Undir(m,l)") == And(Imp(U(l, m), U(m, l)), Imp(U(m, l), U(l, m)))
    # quantifier scope runs to the right as far as possible
    assert parse_formula("forall l. Undir(l,l) | Undir(l,m)") == Forall("l", Or(U(l, l), U(l, m)))


def test_comments_ignored():
    assert parse_formula("Undir(l,m)  # trailing") == U(l, m)


def test_print_i8_and_false():
    f = parse_formula(AXIOM_SOURCE["I.8"])
    assert print_formula(f) == "forall l. forall m. (Undir(l,m) | Undir(l,rev(m)))"
    assert print_formula(FALSE) == "false"


@pytest.mark.parametrize("name", sorted(AXIOM_SOURCE))
def test_round_trip_corpus(name):
    f = parse_formula(AXIOM_SOURCE[name])
    assert parse_formula(print_formula(f)) == f


def test_subst_examples():
    assert apply_subst({"n": rev(n)}, U(m, rev(n))) == U(m, rev(rev(n)))
    f = parse_formula("forall l. Undir(l,m)")
    assert apply_subst({}, f) == f
    captured = apply_subst({"l": m}, parse_formula("forall m. Undir(l,m)"))
    assert captured == Forall("m'", U(m, Var("m'")))
    assert print_formula(captured) == "forall m'. Undir(m,m')"


def test_unify_examples():
    s = unify(U(l, rev(m)), U(rev(n), rev(rev(n))))
    assert s == {"l": rev(n), "m": rev(n)}
    fail = unify(l, rev(l))
    assert not fail and isinstance(fail, UnifyFailure) and fail.kind == "occurs"
    s = unify(U(l, m), U(m, l))
    assert s == {"l": m}
    assert apply_subst(s, U(l, m)) == apply_subst(s, U(m, l)) == U(m, m)


def test_unify_clash():
    r = unify(rev(l), App("ln", (l, m)))
    assert not r and r.kind == "clash"


def test_expand_con():
    assert expand_defs(parse_formula("Con(l,m)"), DEFAULT_DEFS) == parse_formula("Undir(l,m) & Undir(l,rev(m))")
    plain = parse_formula(AXIOM_SOURCE["I.6"])
    assert expand_defs(plain, DEFAULT_DEFS) == plain


def test_expand_con_form_of_i7():
    con_form = parse_formula(
        "forall l. forall m. forall n. (Con(l,m) -> Con(l,n) | Con(m,n))"
    )
    assert expand_defs(con_form, DEFAULT_DEFS) == parse_formula(AXIOM_SOURCE["I.7"])


def test_recursive_and_missing_definitions():
    loop = DefinedPredicate("Con", ("l", "m"), parse_formula("Con(m,l)"))
    with pytest.raises(DefinitionError):
        expand_defs(parse_formula("Con(l,m)"), [loop])
    with pytest.raises(DefinitionError):
        expand_defs(parse_formula("Con(l,m)"), [])


def test_free_vars():
    assert free_vars(U(l, rev(m))) == {"l", "m"}
    assert free_vars(parse_formula(AXIOM_SOURCE["I.6"])) == set()
    assert free_vars(parse_formula("forall l. Undir(l,m)")) == {"m"}


# ---------------------------------------------------------------------------
# properties

NAMES = ["l", "m", "n", "k"]


def terms(depth=3):
    leaf = st.sampled_from(NAMES).map(Var)
    return st.recursive(leaf, lambda sub: st.one_of(
        sub.map(lambda t: App("rev", (t,))),
        st.tuples(sub, sub).map(lambda p: App("ln", p)),
    ), max_leaves=6)


def formulas():
    atom = st.tuples(terms(), terms()).map(lambda p: U(*p))
    base = st.one_of(atom, st.just(FALSE))

    def extend(sub):
        return st.one_of(
            st.tuples(sub, sub).map(lambda p: And(*p)),
            st.tuples(sub, sub).map(lambda p: Or(*p)),
            st.tuples(sub, sub).map(lambda p: Imp(*p)),
            st.tuples(st.sampled_from(NAMES), sub).map(lambda p: Forall(*p)),
        )

    return st.recursive(base, extend, max_leaves=6)


def _no_shadowing(f, bound=()):
    if isinstance(f, Forall):
        return f.var not in bound and _no_shadowing(f.body, bound + (f.var,))
    if isinstance(f, (And, Or, Imp)):
        return _no_shadowing(f.left, bound) and _no_shadowing(f.right, bound)
    return True


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_round_trip_random(f):
    if _no_shadowing(f):
        assert parse_formula(print_formula(f)) == f


@settings(max_examples=300, deadline=None)
@given(terms(), terms())
def test_unifier_is_idempotent_mgu(a, b):
    s = unify(a, b)
    if not s:
        return
    assert apply_subst(s, a) == apply_subst(s, b)
    for k, v in s.items():
        assert apply_subst(s, v) == v
        assert k not in free_vars(v)


@settings(max_examples=200, deadline=None)
@given(formulas(), st.sampled_from(NAMES), terms())
def test_subst_never_captures(f, x, t):
    g = apply_subst({x: t}, f)
    expected = free_vars(f) - {x}
    if x in free_vars(f):
        expected |= free_vars(t)
    assert free_vars(g) == expected


@settings(max_examples=100, deadline=None)
@given(formulas())
def test_expand_defs_idempotent(f):
    g = expand_defs(And(f, Atom("Con", (l, m))), DEFAULT_DEFS)
    assert expand_defs(g, DEFAULT_DEFS) == g
    assert all(a.pred != "Con" for a in atoms(g))
