"""
Constructive derivations
========================

Check the bundled natural-deduction scripts, list the axioms each one cites
and show the kernel catching a corrupted step.
"""

from dataclasses import replace

from affine_reasoner.corpus import builtin_problems, builtin_scripts
from affine_reasoner.nd import check_all, format_step, mutation_catalog, used_axioms

scripts = builtin_scripts()
problems = {name: p.axiom_map for name, p in builtin_problems().items()}

for name, report in check_all(scripts, problems).items():
    print(report, sorted(used_axioms(scripts[name])))

# w1 needs nothing beyond I.6
for step in scripts["S4"].steps:
    print(" ", format_step(step))

# swap the premises of one modus ponens step
s1 = scripts["S1"]
k = next(i for i, st in enumerate(s1.steps) if st.rule == "ImpElim")
bad = replace(s1, steps=s1.steps[:k] + (replace(s1.steps[k], premises=s1.steps[k].premises[::-1]),) + s1.steps[k + 1:])
print(check_all({**scripts, "S1": bad}, problems)["S1"])

# every single-step corruption in the catalog is rejected
survivors = [label for label, m in mutation_catalog(s1) if check_all({**scripts, "S1": m}, problems)["S1"].ok]
print(len(mutation_catalog(s1)), "mutations of S1,", len(survivors), "accepted")
