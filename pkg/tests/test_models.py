import random

import numpy as np
import pytest

from affine_reasoner.models import (
    Exhausted,
    Found,
    Interpretation,
    SearchQuery,
    SizeCapError,
    check_model,
    count_interpretations,
    evaluate,
    format_interpretation,
    parse_interpretation,
    search,
)
from affine_reasoner.syntax import DEFAULT_DEFS, SIGNATURE, expand_defs, parse_formula

from oracle import first_model, holds

FIVE = ["I.5", "I.6", "I.7", "I.8", "SYM"]

# N=0, E=1, S=2, W=3; rev swaps opposite directions, Undir is disequality
COMPASS = Interpretation.make(4, [2, 3, 0, 1], [(i, j) for i in range(4) for j in range(4) if i != j])
CYCLE3 = Interpretation.make(3, [1, 2, 0], [(i, j) for i in range(3) for j in range(3) if i != j])
M2_MODEL = Interpretation.make(2, [0, 1], [(0, 1)])


def as_dicts(m):
    funcs = {"rev": {(i,): v for i, v in enumerate(m.rev_table)}}
    return funcs, {"Undir": set(m.undir_pairs())}, dict(m.constants)


def test_compass_satisfies_all_five(ax):
    funcs, preds, consts = as_dicts(COMPASS)
    for name in FIVE:
        assert evaluate(ax[name], COMPASS)
        assert holds(expand_defs(ax[name], DEFAULT_DEFS), 4, funcs, preds, consts)
    assert all(c.holds for c in check_model(COMPASS, [(k, ax[k]) for k in FIVE]))


def test_m2_interpretation(ax):
    assert evaluate(ax["I.5"], M2_MODEL)
    assert not evaluate(ax["I.6"], M2_MODEL)
    (report,) = check_model(M2_MODEL, [("I.6", ax["I.6"])])
    assert report.witness == {"l": 0, "m": 1, "n": 0}


def test_tautology_everywhere():
    f = parse_formula("forall l. Undir(l,l) | ~Undir(l,l)")
    rng = random.Random(0)
    for _ in range(30):
        n = rng.randint(1, 3)
        m = Interpretation.make(n, [rng.randrange(n) for _ in range(n)],
                                [(i, j) for i in range(n) for j in range(n) if rng.random() < 0.5])
        assert evaluate(f, m)


def test_free_variable_needs_env():
    f = parse_formula("Undir(l,m)")
    with pytest.raises(ValueError):
        evaluate(f, M2_MODEL)
    assert evaluate(f, M2_MODEL, {"l": 0, "m": 1})


def test_search_m2(ax):
    r = search(SearchQuery([ax["I.5"]], [ax["I.6"]], 1, 2))
    assert isinstance(r, Found) and r.size == 2
    assert r.interpretation.rev_table == (0, 1)
    assert r.interpretation.undir_pairs() == [(0, 1)]
    assert r.witnesses == ({"l": 0, "m": 1, "n": 0},)


def test_search_m3(ax):
    r = search(SearchQuery([ax["I.5"], ax["I.6"], ax["I.8"]], [ax["SYM"]], 1, 3))
    assert isinstance(r, Found) and r.size == 3
    assert r.interpretation == CYCLE3
    assert r.witnesses == ({"l": 0, "m": 1},)
    # Undir(0,rev(1)) holds and Undir(1,rev(0)) does not
    assert CYCLE3.undir_table[0, 2] and not CYCLE3.undir_table[1, 1]


def test_unsatisfiable_query_exhausts(ax):
    sig = SIGNATURE.with_constants("c")
    r = search(SearchQuery([ax["I.5"], parse_formula("Undir(c,c)", sig)], (), 1, 2))
    assert isinstance(r, Exhausted)
    assert r.scanned == count_interpretations(1, {"rev": 1}, {"Undir": 2}, 1) + \
        count_interpretations(2, {"rev": 1}, {"Undir": 2}, 1) == 2 + 128


def test_cycle_falsifies_i7(ax):
    (report,) = check_model(CYCLE3, [("I.7", ax["I.7"])])
    assert not report.holds
    assert report.witness == {"l": 0, "m": 1, "n": 0}
    assert check_model(CYCLE3, []) == []


def test_size_cap():
    f = parse_formula("forall l. Undir(l,l)")
    with pytest.raises(SizeCapError):
        SearchQuery([f], (), 1, 5)
    SearchQuery([f], (), 1, 5, cap=5)


def test_serialization_round_trip():
    text = format_interpretation(CYCLE3)
    assert text == "size=3\nrev: 0->1 1->2 2->0\nundir: {(0,1),(0,2),(1,0),(1,2),(2,0),(2,1)}"
    assert parse_interpretation(text) == CYCLE3
    with_const = Interpretation.make(3, [0, 1, 2], [], {"c0": 2})
    assert "const: c0=2" in format_interpretation(with_const)
    assert parse_interpretation(format_interpretation(with_const)) == with_const


def test_serialized_model_checks(ax):
    m = parse_interpretation("size=2\nrev: 0->0 1->1\nundir: {(0,1)}\n")
    assert [c.holds for c in check_model(m, [("I.5", ax["I.5"]), ("I.6", ax["I.6"])])] == [True, False]


@pytest.mark.parametrize("satisfy,falsify,sizes", [
    (["I.5"], ["I.6"], (1, 2)),
    (["I.5", "I.6", "I.8"], ["SYM"], (1, 3)),
    (FIVE, [], (1, 3)),
    (["I.5", "I.6"], ["I.7"], (1, 3)),
    (["I.5", "I.8"], ["I.6"], (1, 2)),
])
def test_first_model_matches_documented_order(ax, satisfy, falsify, sizes):
    """The reported model is the first one in the documented enumeration order."""
    sat = [expand_defs(ax[k], DEFAULT_DEFS) for k in satisfy]
    fal = [expand_defs(ax[k], DEFAULT_DEFS) for k in falsify]
    want = first_model(sat, fal, sizes)
    r = search(SearchQuery([ax[k] for k in satisfy], [ax[k] for k in falsify], *sizes))
    if want is None:
        assert isinstance(r, Exhausted)
    else:
        n, rev, undir, _ = want
        assert (r.size, r.interpretation.rev_table, r.interpretation.undir_pairs()) == (n, rev, undir)


def test_completeness_against_reverse_scanner(ax):
    """Exhausted/Found agrees with a scanner walking the space the other way round (sizes <= 2)."""
    names = sorted(ax)
    rng = random.Random(7)
    for _ in range(25):
        chosen = rng.sample(names, rng.randint(1, 4))
        cut = rng.randint(0, len(chosen))
        sat, fal = chosen[:cut], chosen[cut:]
        r = search(SearchQuery([ax[k] for k in sat], [ax[k] for k in fal], 1, 2))
        other = first_model([expand_defs(ax[k], DEFAULT_DEFS) for k in sat],
                            [expand_defs(ax[k], DEFAULT_DEFS) for k in fal], (1, 2), order="reverse")
        assert isinstance(r, Found) == (other is not None), (sat, fal)
        if isinstance(r, Found):
            funcs, preds, consts = as_dicts(r.interpretation)
            n = r.size
            assert all(holds(expand_defs(ax[k], DEFAULT_DEFS), n, funcs, preds, consts) for k in sat)
            assert not any(holds(expand_defs(ax[k], DEFAULT_DEFS), n, funcs, preds, consts) for k in fal)


def test_definitions_evaluate_like_their_expansion():
    forms = [parse_formula(t) for t in (
        "forall l. forall m. (Con(l,m) -> Con(m,l))",
        "forall l. exists m. Con(l,m) | Undir(m,l)",
        "forall l. forall m. forall n. (Con(l,m) -> Con(l,n) | Con(m,n))",
        "exists l. ~Con(l,rev(l))",
    )]
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randint(1, 3)
        m = Interpretation.make(n, [rng.randrange(n) for _ in range(n)],
                                [(i, j) for i in range(n) for j in range(n) if rng.random() < 0.6])
        for f in forms:
            assert evaluate(f, m) == evaluate(expand_defs(f, DEFAULT_DEFS), m, defs=())


@pytest.mark.parametrize("hi", [2, 3, 4])
def test_monotone_in_max_size(ax, hi):
    r = search(SearchQuery([ax["I.5"]], [ax["I.6"]], 1, hi))
    assert r.interpretation == M2_MODEL


def test_exhausted_counts(ax):
    r = search(SearchQuery([ax[k] for k in ("I.5", "I.6", "I.7", "I.8")], [ax["SYM"]], 1, 3))
    assert isinstance(r, Exhausted)
    assert r.scanned == sum(n ** n * 2 ** (n * n) for n in (1, 2, 3)) == 13890


def test_m1_search_and_table_shapes(ax):
    r = search(SearchQuery([ax[k] for k in FIVE], (), 1, 4))
    assert isinstance(r, Found)
    assert all(c.holds for c in check_model(r.interpretation, [(k, ax[k]) for k in FIVE]))
    assert r.interpretation.undir_table.dtype == np.bool_


def test_interpretation_validation():
    with pytest.raises(ValueError):
        Interpretation.make(2, [0, 2], [])
    with pytest.raises(ValueError):
        Interpretation(2, {"rev": np.zeros(2, dtype=np.int64)}, {})
