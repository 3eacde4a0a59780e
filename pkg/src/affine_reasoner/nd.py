"""Intuitionistic natural-deduction proof checking.

A script is a numbered list of steps.  Each step names its rule, the earlier
steps it uses (``premises``), an instantiation for axiom/quantifier rules and,
for ``ImpIntro``/``OrElim``, the hypotheses it discharges.  Every checked
line carries the set of hypotheses it depends on; once a hypothesis is
discharged, it and every line depending on it go out of scope.

There is no double-negation elimination and no excluded middle; ``ExFalso``
is the only way to leave ``false``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .syntax import (
    FALSE,
    And,
    App,
    Forall,
    Formula,
    FormulaError,
    Imp,
    Or,
    SIGNATURE,
    Signature,
    Term,
    Var,
    apply_subst,
    atoms,
    free_vars,
    parse_formula,
    parse_term,
    print_formula,
)

RULES = (
    "Hypothesis",
    "AxiomInstance",
    "ImpElim",
    "ImpIntro",
    "AndIntro",
    "AndElimLeft",
    "AndElimRight",
    "OrIntroLeft",
    "OrIntroRight",
    "OrElim",
    "NegElim",
    "ExFalso",
    "ForallIntro",
    "ForallElim",
)

_ARITY = {
    "Hypothesis": 0,
    "AxiomInstance": 0,
    "ImpElim": 2,
    "ImpIntro": 1,
    "AndIntro": 2,
    "AndElimLeft": 1,
    "AndElimRight": 1,
    "OrIntroLeft": 1,
    "OrIntroRight": 1,
    "OrElim": 3,
    "NegElim": 2,
    "ExFalso": 1,
    "ForallIntro": 1,
    "ForallElim": 1,
}
_DISCHARGES = {"ImpIntro": 1, "OrElim": 2}

# failure reasons
BAD_PREMISE = "bad-premise"
MISMATCH = "formula-mismatch"
EIGENVARIABLE = "eigenvariable"
UNDISCHARGED = "undischarged"
UNKNOWN_AXIOM = "unknown-axiom"
UNKNOWN_RULE = "unknown-rule"
GOAL_MISMATCH = "goal-mismatch"
LEMMA_CYCLE = "lemma-cycle"
MALFORMED = "malformed"


class KernelError(Exception):
    def __init__(self, step: int | None, reason: str, message: str):
        self.step = step
        self.reason = reason
        self.message = message
        super().__init__(f"step {step}: {reason}: {message}" if step is not None else f"{reason}: {message}")


class ScriptSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class NDStep:
    id: int
    formula: Formula
    rule: str
    premises: tuple[int, ...] = ()
    inst: tuple[tuple[str, Term], ...] = ()
    discharge: tuple[int, ...] = ()
    ref: str | None = None


@dataclass(frozen=True)
class NDScript:
    name: str
    problem: str
    goal: Formula
    steps: tuple[NDStep, ...]
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Lemma:
    """A checked script as seen by later scripts: its goal and the axioms it rests on."""

    name: str
    goal: Formula
    axioms: tuple[tuple[str, Formula], ...]


@dataclass(frozen=True)
class CheckReport:
    script: str
    ok: bool
    step: int | None = None
    reason: str | None = None
    message: str = ""

    def __str__(self):
        if self.ok:
            return f"{self.script}: ok"
        where = f" at step {self.step}" if self.step is not None else ""
        return f"{self.script}: rejected{where} ({self.reason}) {self.message}"


@dataclass
class _Line:
    formula: Formula
    deps: frozenset[int]


@dataclass
class Context:
    """What a step may refer to: the script's axioms and lemmas plus the checked prefix."""

    axioms: Mapping[str, Formula]
    lemmas: Mapping[str, Lemma] = field(default_factory=dict)
    lines: dict[int, _Line] = field(default_factory=dict)
    hypotheses: dict[int, Formula] = field(default_factory=dict)
    discharged: set[int] = field(default_factory=set)
    last_id: int = 0

    def live_hypotheses(self) -> list[Formula]:
        return [f for h, f in self.hypotheses.items() if h not in self.discharged]

    def premise(self, step: NDStep, pid: int) -> _Line:
        line = self.lines.get(pid)
        if line is None:
            raise KernelError(step.id, BAD_PREMISE, f"premise {pid} is not an earlier step")
        if line.deps & self.discharged:
            raise KernelError(step.id, BAD_PREMISE, f"premise {pid} depends on a discharged hypothesis")
        return line


def _instantiate(step: NDStep, f: Formula, inst: Sequence[tuple[str, Term]]) -> Formula:
    wanted = dict(inst)
    if len(wanted) != len(inst):
        raise KernelError(step.id, MALFORMED, "instantiation binds a variable twice")
    stripped = []
    while isinstance(f, Forall) and f.var in wanted and f.var not in stripped:
        stripped.append(f.var)
        f = f.body
    if set(stripped) != set(wanted):
        extra = sorted(set(wanted) - set(stripped))
        raise KernelError(step.id, MALFORMED, f"{extra} not in the leading quantifier block")
    return apply_subst(wanted, f)


def check_step(ctx: Context, step: NDStep) -> _Line:
    """Check one step against the context and record it; raise :class:`KernelError` on failure."""
    rule = step.rule
    if rule not in RULES:
        raise KernelError(step.id, UNKNOWN_RULE, f"no rule named {rule!r}")
    if step.id <= ctx.last_id:
        raise KernelError(step.id, MALFORMED, "step ids must increase")
    if len(step.premises) != _ARITY[rule]:
        raise KernelError(step.id, BAD_PREMISE, f"{rule} takes {_ARITY[rule]} premise(s), got {len(step.premises)}")
    if len(step.discharge) != _DISCHARGES.get(rule, 0):
        raise KernelError(step.id, UNDISCHARGED if len(step.discharge) < _DISCHARGES.get(rule, 0) else MALFORMED,
                          f"{rule} discharges {_DISCHARGES.get(rule, 0)} hypothesis(es), got {len(step.discharge)}")
    if step.inst and rule not in ("AxiomInstance", "ForallElim", "ForallIntro"):
        raise KernelError(step.id, MALFORMED, f"{rule} takes no instantiation")
    prem = [ctx.premise(step, p) for p in step.premises]
    deps: frozenset[int] = frozenset().union(*(p.deps for p in prem)) if prem else frozenset()
    f = step.formula

    def expect(conclusion: Formula, what: str = "conclusion") -> None:
        if conclusion != f:
            raise KernelError(step.id, MISMATCH, f"{what} is {print_formula(conclusion)}, step says {print_formula(f)}")

    if rule == "Hypothesis":
        deps = frozenset({step.id})
    elif rule == "AxiomInstance":
        if step.ref in ctx.lemmas:
            lemma = ctx.lemmas[step.ref]
            for name, formula in lemma.axioms:
                if ctx.axioms.get(name) != formula:
                    raise KernelError(step.id, UNKNOWN_AXIOM, f"lemma {step.ref} rests on {name}, not available here")
            base = lemma.goal
        elif step.ref in ctx.axioms:
            base = ctx.axioms[step.ref]
        else:
            raise KernelError(step.id, UNKNOWN_AXIOM, f"{step.ref!r} is neither an axiom of the problem nor a used lemma")
        expect(_instantiate(step, base, step.inst), "instance")
    elif rule == "ImpElim":
        imp, ant = prem
        if not isinstance(imp.formula, Imp):
            raise KernelError(step.id, BAD_PREMISE, "first premise is not an implication")
        if imp.formula.left != ant.formula:
            raise KernelError(step.id, BAD_PREMISE, "second premise is not the antecedent")
        expect(imp.formula.right)
    elif rule == "ImpIntro":
        (body,) = prem
        (h,) = step.discharge
        hyp = _discharge(ctx, step, h)
        expect(Imp(hyp, body.formula))
        deps = body.deps - {h}
    elif rule == "AndIntro":
        expect(And(prem[0].formula, prem[1].formula))
    elif rule in ("AndElimLeft", "AndElimRight"):
        (p,) = prem
        if not isinstance(p.formula, And):
            raise KernelError(step.id, BAD_PREMISE, "premise is not a conjunction")
        expect(p.formula.left if rule == "AndElimLeft" else p.formula.right)
    elif rule in ("OrIntroLeft", "OrIntroRight"):
        (p,) = prem
        if not isinstance(f, Or):
            raise KernelError(step.id, MISMATCH, "conclusion is not a disjunction")
        side = f.left if rule == "OrIntroLeft" else f.right
        if side != p.formula:
            raise KernelError(step.id, MISMATCH, "premise is not the introduced disjunct")
    elif rule == "OrElim":
        d, c1, c2 = prem
        h1, h2 = step.discharge
        if not isinstance(d.formula, Or):
            raise KernelError(step.id, BAD_PREMISE, "first premise is not a disjunction")
        if h1 == h2:
            raise KernelError(step.id, MALFORMED, "the two cases need distinct hypotheses")
        a = _hypothesis(ctx, step, h1)
        b = _hypothesis(ctx, step, h2)
        if a != d.formula.left or b != d.formula.right:
            raise KernelError(step.id, BAD_PREMISE, "case hypotheses do not match the disjuncts")
        expect(c1.formula, "first case")
        expect(c2.formula, "second case")
        deps = d.deps | (c1.deps - {h1}) | (c2.deps - {h2})
        if deps & {h1, h2}:
            raise KernelError(step.id, UNDISCHARGED, "a case hypothesis is still needed outside its case")
        ctx.discharged.update((h1, h2))
    elif rule == "NegElim":
        a, neg = prem
        if neg.formula != Imp(a.formula, FALSE):
            raise KernelError(step.id, BAD_PREMISE, "second premise is not the negation of the first")
        expect(FALSE)
    elif rule == "ExFalso":
        if prem[0].formula != FALSE:
            raise KernelError(step.id, BAD_PREMISE, "premise is not false")
    elif rule == "ForallIntro":
        (p,) = prem
        if not isinstance(f, Forall):
            raise KernelError(step.id, MISMATCH, "conclusion is not universally quantified")
        inst = dict(step.inst)
        if set(inst) - {f.var}:
            raise KernelError(step.id, MALFORMED, "only the bound variable may name an eigenvariable")
        eigen = inst.get(f.var, Var(f.var))
        if not isinstance(eigen, Var):
            raise KernelError(step.id, EIGENVARIABLE, f"eigenvariable {eigen} is not a variable")
        if eigen.name in free_vars(f):
            raise KernelError(step.id, EIGENVARIABLE, f"{eigen.name} is free in the conclusion")
        for h in ctx.live_hypotheses():
            if eigen.name in free_vars(h):
                raise KernelError(step.id, EIGENVARIABLE, f"{eigen.name} is free in the live hypothesis {print_formula(h)}")
        if p.formula != apply_subst({f.var: eigen}, f.body):
            raise KernelError(step.id, MISMATCH, "premise is not the conclusion's body at the eigenvariable")
    elif rule == "ForallElim":
        (p,) = prem
        if not isinstance(p.formula, Forall):
            raise KernelError(step.id, BAD_PREMISE, "premise is not universally quantified")
        inst = dict(step.inst)
        if set(inst) != {p.formula.var}:
            raise KernelError(step.id, MALFORMED, f"instantiate exactly {p.formula.var}")
        expect(apply_subst(inst, p.formula.body))

    line = _Line(f, deps)
    ctx.lines[step.id] = line
    if rule == "Hypothesis":
        ctx.hypotheses[step.id] = f
    ctx.last_id = step.id
    return line


def _hypothesis(ctx: Context, step: NDStep, h: int) -> Formula:
    if h not in ctx.hypotheses:
        raise KernelError(step.id, BAD_PREMISE, f"step {h} is not a hypothesis")
    if h in ctx.discharged:
        raise KernelError(step.id, BAD_PREMISE, f"hypothesis {h} was already discharged")
    return ctx.hypotheses[h]


def _discharge(ctx: Context, step: NDStep, h: int) -> Formula:
    f = _hypothesis(ctx, step, h)
    ctx.discharged.add(h)
    return f


def check_script(script: NDScript, axioms: Mapping[str, Formula],
                 lemmas: Mapping[str, Lemma] | None = None) -> CheckReport:
    """Check ``script`` against its problem's ``axioms`` and the already checked ``lemmas`` it uses."""
    lemmas = dict(lemmas or {})
    available = {}
    for name in script.uses:
        if name not in lemmas:
            return CheckReport(script.name, False, None, UNKNOWN_AXIOM, f"lemma {name} has not been checked")
        available[name] = lemmas[name]
    ctx = Context(dict(axioms), available)
    try:
        for step in script.steps:
            check_step(ctx, step)
        if not script.steps:
            raise KernelError(None, GOAL_MISMATCH, "script has no steps")
        last = script.steps[-1]
        for h in ctx.hypotheses:
            if h not in ctx.discharged:
                raise KernelError(h, UNDISCHARGED, "hypothesis is never discharged")
        if ctx.lines[last.id].deps:
            raise KernelError(last.id, UNDISCHARGED, "final step still depends on hypotheses")
        if last.formula != script.goal:
            raise KernelError(last.id, GOAL_MISMATCH, "final step is not the goal")
    except KernelError as e:
        return CheckReport(script.name, False, e.step, e.reason, e.message)
    return CheckReport(script.name, True)


def used_axioms(script: NDScript, lemmas: Mapping[str, Lemma] | None = None, transitive: bool = False) -> set[str]:
    """Axiom names cited by ``AxiomInstance`` steps (through cited lemmas when ``transitive``)."""
    lemmas = lemmas or {}
    out = set()
    for step in script.steps:
        if step.rule != "AxiomInstance":
            continue
        if step.ref in script.uses:
            if transitive:
                out |= {name for name, _ in lemmas[step.ref].axioms}
        else:
            out.add(step.ref)
    return out


def as_lemma(script: NDScript, axioms: Mapping[str, Formula], lemmas: Mapping[str, Lemma] | None = None) -> Lemma:
    names = used_axioms(script, lemmas, transitive=True)
    pool = dict(axioms)
    for name in script.uses:
        pool.update(dict((lemmas or {})[name].axioms))
    return Lemma(script.name, script.goal, tuple(sorted((n, pool[n]) for n in names)))


def check_all(scripts: Mapping[str, NDScript], problems: Mapping[str, Mapping[str, Formula]]) -> dict[str, CheckReport]:
    """Check scripts in dependency order; a cycle or a failed lemma fails its dependants."""
    reports: dict[str, CheckReport] = {}
    lemmas: dict[str, Lemma] = {}
    state: dict[str, int] = {}

    def visit(name: str, path: tuple[str, ...]) -> None:
        if name in reports:
            return
        if state.get(name) == 1:
            for n in path[path.index(name):]:
                reports[n] = CheckReport(n, False, None, LEMMA_CYCLE, " -> ".join(path[path.index(name):] + (name,)))
            return
        state[name] = 1
        script = scripts[name]
        for dep in script.uses:
            if dep not in scripts:
                reports[name] = CheckReport(name, False, None, UNKNOWN_AXIOM, f"unknown lemma {dep}")
                return
            visit(dep, path + (name,))
        if name in reports:
            return
        failed = [d for d in script.uses if not reports[d].ok]
        if failed:
            reports[name] = CheckReport(name, False, None, UNKNOWN_AXIOM, f"lemma {failed[0]} was rejected")
            return
        if script.problem not in problems:
            reports[name] = CheckReport(name, False, None, UNKNOWN_AXIOM, f"unknown problem {script.problem}")
            return
        axioms = problems[script.problem]
        reports[name] = check_script(script, axioms, lemmas)
        if reports[name].ok:
            lemmas[name] = as_lemma(script, axioms, lemmas)
        state[name] = 2

    for name in sorted(scripts):
        visit(name, ())
    return {name: reports[name] for name in sorted(reports)}


# ---------------------------------------------------------------------------
# Script files

_KEY = re.compile(r"(premises|inst|discharge)=")


def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _read_bracket(text: str, i: int, close: str) -> tuple[str, int]:
    end = text.find(close, i)
    if end < 0:
        raise ScriptSyntaxError(f"missing {close!r} in {text!r}")
    return text[i + 1:end], end + 1


def _parse_justification(text: str, signature: Signature):
    text = text.strip()
    if not text:
        raise ScriptSyntaxError("missing rule")
    words = text.split(None, 1)
    rule = words[0]
    rest = words[1] if len(words) > 1 else ""
    ref = None
    premises: tuple[int, ...] = ()
    discharge: tuple[int, ...] = ()
    inst: list[tuple[str, Term]] = []
    i = 0
    while i < len(rest):
        if rest[i].isspace():
            i += 1
            continue
        m = _KEY.match(rest, i)
        if m is None:
            j = i
            while j < len(rest) and not rest[j].isspace():
                j += 1
            if ref is not None:
                raise ScriptSyntaxError(f"unexpected {rest[i:j]!r}")
            ref = rest[i:j]
            i = j
            continue
        key = m.group(1)
        i = m.end()
        if key == "inst":
            body, i = _read_bracket(rest, i, "}")
            for item in _split_top(body):
                if ":=" not in item:
                    raise ScriptSyntaxError(f"bad binding {item!r}")
                var, term = item.split(":=", 1)
                inst.append((var.strip(), parse_term(term.strip(), signature)))
        else:
            body, i = _read_bracket(rest, i, "]")
            ids = tuple(int(x) for x in _split_top(body))
            if key == "premises":
                premises = ids
            else:
                discharge = ids
    return rule, ref, premises, tuple(inst), discharge


_STEP = re.compile(r"^\s*(\d+)\.\s*(.*)$")


def parse_script(text: str, signature: Signature = SIGNATURE) -> NDScript:
    name = problem = None
    goal = None
    uses: tuple[str, ...] = ()
    steps = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            m = _STEP.match(line)
            if m:
                if ";" not in m.group(2):
                    raise ScriptSyntaxError("step needs '; <rule>'")
                formula_text, just = m.group(2).split(";", 1)
                rule, ref, premises, inst, discharge = _parse_justification(just, signature)
                steps.append(NDStep(int(m.group(1)), parse_formula(formula_text, signature), rule,
                                    premises, inst, discharge, ref))
                continue
            key, _, value = line.partition(" ")
            value = value.strip()
            if key == "script":
                name = value
            elif key == "problem":
                problem = value
            elif key == "uses":
                uses = tuple(x.strip() for x in value.split(",") if x.strip())
            elif key == "goal":
                goal = parse_formula(value, signature)
            else:
                raise ScriptSyntaxError(f"unknown header {key!r}")
        except (FormulaError, ValueError) as e:
            raise ScriptSyntaxError(f"line {lineno}: {e}") from e
    if name is None or problem is None or goal is None:
        raise ScriptSyntaxError("script needs 'script', 'problem' and 'goal' headers")
    return NDScript(name, problem, goal, tuple(steps), uses)


def load_script(path: str | Path, signature: Signature = SIGNATURE) -> NDScript:
    return parse_script(Path(path).read_text(encoding="utf-8"), signature)


def format_step(step: NDStep) -> str:
    parts = [step.rule]
    if step.ref is not None:
        parts.append(step.ref)
    if step.premises:
        parts.append(f"premises=[{','.join(map(str, step.premises))}]")
    if step.inst:
        parts.append("inst={" + ", ".join(f"{k}:={v}" for k, v in step.inst) + "}")
    if step.discharge:
        parts.append(f"discharge=[{','.join(map(str, step.discharge))}]")
    return f"{step.id}. {print_formula(step.formula)} ; {' '.join(parts)}"


def format_script(script: NDScript) -> str:
    lines = [f"script {script.name}", f"problem {script.problem}"]
    if script.uses:
        lines.append(f"uses {','.join(script.uses)}")
    lines.append(f"goal {print_formula(script.goal)}")
    lines += [format_step(s) for s in script.steps]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Script transformations


def renumber(steps: Sequence[NDStep]) -> tuple[NDStep, ...]:
    """Number steps 1, 2, ... keeping premise and discharge references intact."""
    table = {s.id: k for k, s in enumerate(steps, 1)}
    return tuple(
        replace(s, id=table[s.id],
                premises=tuple(table.get(p, p) for p in s.premises),
                discharge=tuple(table.get(h, h) for h in s.discharge))
        for s in steps
    )


def expand_axiom_instances(script: NDScript, axioms: Mapping[str, Formula],
                           lemmas: Mapping[str, Lemma] | None = None) -> NDScript:
    """Replace each instantiating ``AxiomInstance`` by the bare axiom and a chain of ``ForallElim`` steps."""
    lemmas = lemmas or {}
    out: list[NDStep] = []
    remap: dict[int, int] = {}
    fresh = 0

    def new_id() -> int:
        nonlocal fresh
        fresh += 1
        return fresh

    for s in script.steps:
        s = replace(s, premises=tuple(remap[p] for p in s.premises),
                    discharge=tuple(remap[h] for h in s.discharge))
        if s.rule != "AxiomInstance" or not s.inst:
            sid = new_id()
            remap[s.id] = sid
            out.append(replace(s, id=sid))
            continue
        base = lemmas[s.ref].goal if s.ref in lemmas else axioms[s.ref]
        wanted = dict(s.inst)
        prev = new_id()
        out.append(NDStep(prev, base, "AxiomInstance", ref=s.ref))
        current = base
        for var in _binder_names(base)[:len(wanted)]:
            # an earlier elimination may have renamed this binder
            assert isinstance(current, Forall)
            term, binder = wanted[var], current.var
            current = apply_subst({binder: term}, current.body)
            sid = new_id()
            out.append(NDStep(sid, current, "ForallElim", (prev,), ((binder, term),)))
            prev = sid
        remap[s.id] = prev
    return replace(script, steps=renumber(out))


def _binder_names(f: Formula) -> list[str]:
    names = []
    while isinstance(f, Forall):
        names.append(f.var)
        f = f.body
    return names


# ---------------------------------------------------------------------------
# Mutation catalog


def _alter(f: Formula) -> Formula:
    """A different formula of the same shape: the first atom's last argument wrapped in rev()."""
    for a in atoms(f):
        if a.args:
            changed = type(a)(a.pred, a.args[:-1] + (App("rev", (a.args[-1],)),))
            return _replace_first_atom(f, a, changed)
    return Imp(f, FALSE)


def _replace_first_atom(f: Formula, old, new):
    done = [False]

    def go(g):
        if done[0]:
            return g
        if g == old:
            done[0] = True
            return new
        if isinstance(g, (And, Or, Imp)):
            left = go(g.left)
            return type(g)(left, go(g.right))
        if hasattr(g, "body"):
            return type(g)(g.var, go(g.body))
        return g

    return go(f)


def mutation_catalog(script: NDScript) -> list[tuple[str, NDScript]]:
    """Single-step corruptions of ``script``; a sound kernel must reject every one."""
    out = []
    steps = list(script.steps)
    formulas = {s.id: s.formula for s in steps}

    def variant(k: int, label: str, step: NDStep) -> None:
        changed = steps[:k] + [step] + steps[k + 1:]
        out.append((f"step {steps[k].id}: {label}", replace(script, steps=tuple(changed))))

    for k, s in enumerate(steps):
        if s.premises:
            variant(k, "drop a premise", replace(s, premises=s.premises[:-1]))
        if len(s.premises) >= 2:
            i, j = (1, 2) if s.rule == "OrElim" else (0, 1)
            if formulas[s.premises[i]] != formulas[s.premises[j]] or s.rule == "OrElim":
                p = list(s.premises)
                p[i], p[j] = p[j], p[i]
                variant(k, "swap premises", replace(s, premises=tuple(p)))
        if s.inst:
            (var, term), *rest = s.inst
            variant(k, "change a binding", replace(s, inst=((var, App("rev", (term,))),) + tuple(rest)))
        elif s.rule == "AxiomInstance":
            variant(k, "add a binding", replace(s, inst=(("l", App("rev", (Var("l"),))),)))
        if s.rule not in ("Hypothesis", "ExFalso"):
            variant(k, "alter the conclusion", replace(s, formula=_alter(s.formula)))
        if s.discharge:
            variant(k, "drop a discharge", replace(s, discharge=s.discharge[:-1]))
    return out
