"""
Countermodels and the full run
==============================

Small countermodels show which entailments fail; the corpus run ties the
prover, the model search and the kernel together.
"""

from affine_reasoner.corpus import axiom, builtin_problems, occurrence_statistic, report_to_text, run_all
from affine_reasoner.models import SearchQuery, format_interpretation, search

# I.5 alone does not give I.6
r = search(SearchQuery((axiom("I.5"),), (axiom("I.6"),), 1, 3))
print(format_interpretation(r.interpretation), "I.6 fails at", r.witnesses[0])

# I.5, I.6 and I.8 do not give SYM: a three-cycle for rev
m3 = builtin_problems()["M3"]
r = search(m3.query())
print(format_interpretation(r.interpretation), "SYM fails at", r.witnesses[0])

print(occurrence_statistic())
print(report_to_text(run_all()))
