"""Independent re-checking of resolution proofs.

Nothing here calls the prover's inference code: each recorded step is
replayed from its parents with nothing but :func:`apply_subst`.  Soundness
only needs the recorded substitution to be *a* unifier, so most-generality
is not checked.
"""
from __future__ import annotations

from typing import Sequence

from .prover import Clause, Literal, RefutationProof
from .syntax import Atom, Var, apply_subst


class ProofCheckError(ValueError):
    def __init__(self, clause_id, reason: str):
        self.clause_id = clause_id
        self.reason = reason
        super().__init__(f"clause {clause_id}: {reason}")


def _instance(s: dict, lit: Literal) -> Literal:
    return Literal(lit.positive, apply_subst(s, lit.atom))


def _check_node(c: Clause, known: dict[int, Clause], inputs: Sequence[Clause]) -> None:
    inf = c.inference
    if inf.rule == "input":
        for d in inputs:
            if d.inference.name == inf.name and set(d.literals) == set(c.literals):
                return
        raise ProofCheckError(c.id, f"not an input clause of {inf.name}")

    for p in inf.parents:
        if p not in known:
            raise ProofCheckError(c.id, f"parent {p} missing or not earlier")
    sigma = dict(inf.subst)

    if inf.rule == "factor":
        if len(inf.parents) != 1 or len(inf.positions) != 2:
            raise ProofCheckError(c.id, "malformed factor record")
        parent = known[inf.parents[0]]
        i, j = inf.positions
        if not (0 <= i < len(parent.literals) and 0 <= j < len(parent.literals)) or i == j:
            raise ProofCheckError(c.id, "factor positions out of range")
        a, b = _instance(sigma, parent.literals[i]), _instance(sigma, parent.literals[j])
        if a != b:
            raise ProofCheckError(c.id, "factored literals are not identical under the substitution")
        expected = {_instance(sigma, lit) for lit in parent.literals}
    elif inf.rule == "resolve":
        if len(inf.parents) != 2 or len(inf.positions) != 2:
            raise ProofCheckError(c.id, "malformed resolution record")
        left, right = (known[p] for p in inf.parents)
        renaming = dict(inf.renaming)
        if len(set(renaming.values())) != len(renaming):
            raise ProofCheckError(c.id, "renaming is not injective")
        rho = {k: Var(v) for k, v in renaming.items()}
        right_lits = [_instance(rho, lit) for lit in right.literals]
        i, j = inf.positions
        if not (0 <= i < len(left.literals) and 0 <= j < len(right_lits)):
            raise ProofCheckError(c.id, "resolution positions out of range")
        a, b = _instance(sigma, left.literals[i]), _instance(sigma, right_lits[j])
        if a.positive == b.positive:
            raise ProofCheckError(c.id, "resolved literals have the same sign")
        if a.atom != b.atom:
            raise ProofCheckError(c.id, "substitution does not unify the resolved literals")
        expected = {_instance(sigma, lit) for k, lit in enumerate(left.literals) if k != i}
        expected |= {_instance(sigma, lit) for k, lit in enumerate(right_lits) if k != j}
    else:
        raise ProofCheckError(c.id, f"unknown rule {inf.rule!r}")

    if expected != set(c.literals):
        raise ProofCheckError(c.id, "recorded clause differs from the re-derived one")


def check_refutation(proof: RefutationProof, inputs: Sequence[Clause] | None = None) -> None:
    """Raise :class:`ProofCheckError` at the first node that does not re-derive."""
    inputs = proof.inputs if inputs is None else inputs
    if not proof.clauses:
        raise ProofCheckError(None, "empty proof")
    known: dict[int, Clause] = {}
    for c in proof.clauses:
        if c.id in known:
            raise ProofCheckError(c.id, "duplicate clause id")
        if any(not isinstance(lit.atom, Atom) for lit in c.literals):
            raise ProofCheckError(c.id, "literal is not an atom")
        _check_node(c, known, inputs)
        known[c.id] = c
    sink = proof.clauses[-1]
    if sink.literals:
        raise ProofCheckError(sink.id, "sink is not the empty clause")
    if any(not c.literals for c in proof.clauses[:-1]):
        raise ProofCheckError(sink.id, "more than one empty clause")


def verify_refutation(proof: RefutationProof, inputs: Sequence[Clause] | None = None) -> bool:
    try:
        check_refutation(proof, inputs)
    except ProofCheckError:
        return False
    return True
