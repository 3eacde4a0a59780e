"""
Formulas and finite interpretations
===================================

Parse the axioms, evaluate them on a hand-built interpretation, then let the
exhaustive search find the smallest model of all five.
"""

from affine_reasoner.corpus import load_corpus
from affine_reasoner.models import Interpretation, SearchQuery, check_model, format_interpretation, search
from affine_reasoner.syntax import expand_defs, parse_formula, print_formula

registry = load_corpus()
for name in ("I.5", "I.6", "I.7", "I.8", "SYM"):
    print(f"{name:4} {print_formula(registry.axioms[name])}")

# Con is a definition, expanded on demand
con = parse_formula("forall l. forall m. (Con(l,m) -> Undir(l,m))")
print(print_formula(expand_defs(con, registry.definitions)))

# four compass directions: rev swaps opposites, Undir is "not the same direction"
compass = Interpretation.make(4, [2, 3, 0, 1], [(i, j) for i in range(4) for j in range(4) if i != j])
five = [(n, registry.axioms[n]) for n in ("I.5", "I.6", "I.7", "I.8", "SYM")]
for check in check_model(compass, five):
    print(check.name, "holds" if check.holds else f"fails at {check.witness}")

# the search walks sizes upward and stops at the first model
found = search(SearchQuery(tuple(f for _, f in five), (), 1, 4))
print(f"first model has size {found.size} after {found.scanned} interpretations")
print(format_interpretation(found.interpretation))
