from dataclasses import replace

import pytest

from affine_reasoner.corpus import builtin_problems
from affine_reasoner.syntax import App
from affine_reasoner.prover import Inference, clausify, prove
from affine_reasoner.verify import ProofCheckError, check_refutation, verify_refutation


@pytest.fixture(scope="module")
def proofs():
    problems = builtin_problems()
    return {f"G{i}": prove(problems[f"G{i}"]).proofs for i in range(9)}


@pytest.fixture(scope="module")
def g6(proofs):
    (p,) = proofs["G6"]
    return p


def _swap(proof, index, clause):
    clauses = list(proof.clauses)
    clauses[index] = clause
    return replace(proof, clauses=tuple(clauses))


def _first_derived(proof, min_literals=1):
    return next(k for k, c in enumerate(proof.clauses)
                if c.inference.rule != "input" and len(c.literals) >= min_literals)


@pytest.mark.parametrize("name", [f"G{i}" for i in range(9)])
def test_every_goal_proof_checks(proofs, name):
    assert proofs[name]
    for p in proofs[name]:
        check_refutation(p)


def test_deleted_literal_is_caught_at_that_node(g6):
    k = _first_derived(g6, 2)
    c = g6.clauses[k]
    bad = _swap(g6, k, replace(c, literals=c.literals[1:]))
    with pytest.raises(ProofCheckError) as e:
        check_refutation(bad)
    assert e.value.clause_id == c.id


def test_non_empty_sink(g6):
    bad = replace(g6, clauses=g6.clauses[:-1])
    with pytest.raises(ProofCheckError, match="sink"):
        check_refutation(bad)


def test_wrong_inputs(g6, ax):
    others = clausify([("I.6", ax["I.6"])], ax["w1"])
    assert not verify_refutation(g6, others)


def test_unknown_rule(g6):
    k = _first_derived(g6)
    c = g6.clauses[k]
    bad = _swap(g6, k, replace(c, inference=replace(c.inference, rule="paramodulate")))
    with pytest.raises(ProofCheckError, match="unknown rule"):
        check_refutation(bad)


def test_tampered_substitution(g6):
    k = next(k for k, c in enumerate(g6.clauses) if c.inference.subst)
    c = g6.clauses[k]
    (var, term), *rest = c.inference.subst
    subst = ((var, App("rev", (term,))), *rest)
    bad = _swap(g6, k, replace(c, inference=replace(c.inference, subst=subst)))
    assert not verify_refutation(bad)


def test_missing_parent(g6):
    k = _first_derived(g6)
    c = g6.clauses[k]
    bad = _swap(g6, k, replace(c, inference=replace(c.inference, parents=(10_000,) + c.inference.parents[1:])))
    with pytest.raises(ProofCheckError, match="parent"):
        check_refutation(bad)


def test_forged_input(g6):
    c = g6.clauses[0]
    bad = _swap(g6, 0, replace(c, inference=Inference("input", name="made-up")))
    with pytest.raises(ProofCheckError) as e:
        check_refutation(bad)
    assert e.value.clause_id == c.id


def test_duplicate_id(g6):
    bad = replace(g6, clauses=(g6.clauses[0],) + g6.clauses)
    with pytest.raises(ProofCheckError, match="duplicate"):
        check_refutation(bad)


def test_empty_proof(g6):
    assert not verify_refutation(replace(g6, clauses=()))
