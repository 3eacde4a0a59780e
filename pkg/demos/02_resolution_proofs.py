"""
Resolution proofs
=================

Clausify a problem, run the given-clause prover and re-check the refutation
with the independent verifier.
"""

from affine_reasoner.corpus import builtin_problems
from affine_reasoner.prover import ProverConfig, clausify, format_proof, prove
from affine_reasoner.verify import verify_refutation

g6 = builtin_problems()["G6"]   # SYM from I.5, I.6, I.8 and w2
for c in clausify(g6.axioms, g6.goal):
    print(f"{c.id:3}. {c}   [{c.inference.name}]")

result = prove(g6)
print(result.outcome, "generated", result.generated, "kept", result.kept)
(proof,) = result.proofs
print(format_proof(proof))
print("verified:", verify_refutation(proof))

# the equivalence of I.7 and its four conjuncts is split into five refutations
g8 = prove(builtin_problems()["G8"])
print("G8:", g8.outcome, "in", len(g8.parts), "parts")

# a tight budget runs out rather than guessing
print(prove(g6, ProverConfig(max_generated_clauses=100)).outcome)
