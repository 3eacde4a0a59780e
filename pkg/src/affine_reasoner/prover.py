"""Clausification and a given-clause binary-resolution prover.

The calculus is binary resolution plus binary factoring, with tautology
deletion and forward/backward subsumption.  Every derived clause records the
parents, literal positions, renaming and unifier it came from, so a proof can
be re-checked by :mod:`affine_reasoner.verify` without calling back into this
module.
"""
from __future__ import annotations

import heapq
import re
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .syntax import (
    DEFAULT_DEFS,
    FALSE,
    And,
    App,
    Atom,
    Const,
    DefinedPredicate,
    Exists,
    Falsum,
    Forall,
    Formula,
    Imp,
    Or,
    Signature,
    SIGNATURE,
    Term,
    UnifyFailure,
    Var,
    disj,
    expand_defs,
    forall_all,
    free_vars,
    print_subst,
    subst_term,
    term_symbols,
    term_vars,
    unify,
)

SKOLEM = re.compile(r"^sk\d+$")
GOAL_NAME = "negated_goal"


class ClausifyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Clauses


@dataclass(frozen=True)
class Literal:
    positive: bool
    atom: Atom

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.atom)

    def __str__(self):
        text = str(self.atom)
        return text if self.positive else "~" + text


@dataclass(frozen=True)
class Inference:
    rule: str  # "input", "resolve" or "factor"
    name: str | None = None
    parents: tuple[int, ...] = ()
    positions: tuple[int, ...] = ()
    subst: tuple[tuple[str, Term], ...] = ()
    renaming: tuple[tuple[str, str], ...] = ()

    def __str__(self):
        if self.rule == "input":
            return f"input:{self.name}"
        return f"{self.rule}({','.join(map(str, self.parents))})"


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    inference: Inference = Inference("input")
    id: int | None = None

    @property
    def age(self) -> int | None:
        return self.id

    @cached_property
    def weight(self) -> int:
        return sum(1 + sum(_term_size(t) for t in lit.atom.args) for lit in self.literals)

    @cached_property
    def keys(self) -> frozenset[tuple[bool, str]]:
        return frozenset((lit.positive, lit.atom.pred) for lit in self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for lit in self.literals:
            for t in lit.atom.args:
                for v in term_vars(t):
                    seen.setdefault(v)
        return list(seen)

    def __len__(self):
        return len(self.literals)

    def __str__(self):
        return format_literals(self.literals)


def format_literals(lits: Sequence[Literal]) -> str:
    return " | ".join(map(str, lits)) if lits else "false"


def _term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + sum(_term_size(a) for a in t.args)
    return 1


def _dedup(lits: Iterable[Literal]) -> tuple[Literal, ...]:
    return tuple(dict.fromkeys(lits))


def _subst_literal(s: Mapping[str, Term], lit: Literal) -> Literal:
    return Literal(lit.positive, Atom(lit.atom.pred, tuple(subst_term(s, t) for t in lit.atom.args)))


def _shape(t: Term) -> str:
    if isinstance(t, Var):
        return "_"
    if isinstance(t, App):
        return f"{t.fn}({','.join(_shape(a) for a in t.args)})"
    return t.name


def variant_key(c: Clause) -> tuple[str, ...]:
    """Equal keys mean the clauses are renamings of each other.

    Literals are ordered by their variable-blind shape before variables are
    numbered, so some variants get different keys; equal keys are always variants.
    """
    lits = sorted(c.literals, key=lambda lit: (lit.positive, lit.atom.pred, tuple(_shape(t) for t in lit.atom.args)))
    names: dict[str, Term] = {}
    for lit in lits:
        for t in lit.atom.args:
            for v in term_vars(t):
                names.setdefault(v, Var(f"_{len(names)}"))
    return tuple(str(_subst_literal(names, lit)) for lit in lits)


def is_tautology(c: Clause) -> bool:
    pos = {lit.atom for lit in c.literals if lit.positive}
    return any(not lit.positive and lit.atom in pos for lit in c.literals)


def clause_formula(c: Clause) -> Formula:
    """The universal closure of the clause's disjunction."""
    body = disj(lit.atom if lit.positive else Imp(lit.atom, FALSE) for lit in c.literals)
    return forall_all(c.variables(), body)


# ---------------------------------------------------------------------------
# Clausification


@dataclass(frozen=True)
class _Lit:
    lit: Literal


@dataclass(frozen=True)
class _Top:
    pass


_TRUE = _Top()


def _nnf(f: Formula, positive: bool = True):
    if isinstance(f, Atom):
        return _Lit(Literal(positive, f))
    if isinstance(f, Falsum):
        return FALSE if positive else _TRUE
    if isinstance(f, And):
        op = And if positive else Or
        return _simplify(op, _nnf(f.left, positive), _nnf(f.right, positive))
    if isinstance(f, Or):
        op = Or if positive else And
        return _simplify(op, _nnf(f.left, positive), _nnf(f.right, positive))
    if isinstance(f, Imp):
        op = Or if positive else And
        return _simplify(op, _nnf(f.left, not positive), _nnf(f.right, positive))
    if isinstance(f, Forall):
        q = Forall if positive else Exists
    else:
        q = Exists if positive else Forall
    body = _nnf(f.body, positive)
    if body is FALSE or body is _TRUE:
        return body
    return q(f.var, body)


def _simplify(op, a, b):
    if op is And:
        if a is FALSE or b is FALSE:
            return FALSE
        if a is _TRUE:
            return b
        if b is _TRUE:
            return a
    else:
        if a is _TRUE or b is _TRUE:
            return _TRUE
        if a is FALSE:
            return b
        if b is FALSE:
            return a
    return op(a, b)


class _Skolemizer:
    def __init__(self):
        self.counter = 0

    def fresh(self, universals: list[str]) -> Term:
        name = f"sk{self.counter}"
        self.counter += 1
        if not universals:
            return Const(name)
        return App(name, tuple(Var(u) for u in universals))


def _rename_bound(f, used: dict[str, str], taken: set[str], env: Mapping[str, str]):
    """Give every binder a distinct upper-case clause-variable name."""
    if isinstance(f, _Lit):
        atom = f.lit.atom
        s = {k: Var(v) for k, v in env.items()}
        return _Lit(Literal(f.lit.positive, Atom(atom.pred, tuple(subst_term(s, t) for t in atom.args))))
    if isinstance(f, (And, Or)):
        return type(f)(_rename_bound(f.left, used, taken, env), _rename_bound(f.right, used, taken, env))
    if isinstance(f, (Forall, Exists)):
        base = f.var.upper()
        name = base
        k = 1
        while name in taken:
            name = f"{base}{k}"
            k += 1
        taken.add(name)
        return type(f)(name, _rename_bound(f.body, used, taken, {**env, f.var: name}))
    return f


def _skolemize(f, sk: _Skolemizer, universals: list[str], s: dict[str, Term]):
    if isinstance(f, _Lit):
        atom = f.lit.atom
        return _Lit(Literal(f.lit.positive, Atom(atom.pred, tuple(subst_term(s, t) for t in atom.args))))
    if isinstance(f, (And, Or)):
        return type(f)(_skolemize(f.left, sk, universals, s), _skolemize(f.right, sk, universals, s))
    if isinstance(f, Forall):
        return _skolemize(f.body, sk, universals + [f.var], s)
    if isinstance(f, Exists):
        return _skolemize(f.body, sk, universals, {**s, f.var: sk.fresh(universals)})
    return f


def _cnf(f) -> list[tuple[Literal, ...]]:
    if f is _TRUE:
        return []
    if f is FALSE:
        return [()]
    if isinstance(f, _Lit):
        return [(f.lit,)]
    if isinstance(f, And):
        return _cnf(f.left) + _cnf(f.right)
    left, right = _cnf(f.left), _cnf(f.right)
    out = []
    for a in left:
        for b in right:
            c = _dedup(a + b)
            if not is_tautology(Clause(c)):
                out.append(c)
    return out


def _check_input(name: str, f: Formula, signature: Signature) -> None:
    if free_vars(f):
        raise ClausifyError(f"{name} is not closed: free {sorted(free_vars(f))}")
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            if g.pred in signature.defined:
                raise ClausifyError(f"{name} still mentions the defined predicate {g.pred}")
            for t in g.args:
                for sym, _ in term_symbols(t):
                    if SKOLEM.match(sym):
                        raise ClausifyError(f"{name} uses the reserved Skolem name {sym}")
        elif isinstance(g, (And, Or, Imp)):
            stack += [g.left, g.right]
        elif isinstance(g, (Forall, Exists)):
            stack.append(g.body)


def clausify(axioms: Sequence[tuple[str, Formula]], goal: Formula | None,
             signature: Signature = SIGNATURE) -> list[Clause]:
    """Clauses for ``axioms`` together with the negation of ``goal``.

    NNF, then Skolemization of each existential over the universals that
    enclose it (``sk0``, ``sk1``, ... numbered across the whole problem), then
    dropping the universal prefix and distributing into CNF.  Clause ids
    start at 1 in input order.
    """
    sk = _Skolemizer()
    items = list(axioms)
    if goal is not None:
        items.append((GOAL_NAME, Imp(goal, FALSE)))
    out: list[Clause] = []
    for name, f in items:
        _check_input(name, f, signature)
        g = _nnf(f)
        g = _rename_bound(g, {}, set(), {})
        g = _skolemize(g, sk, [], {})
        for lits in _cnf(g):
            c = Clause(lits, Inference("input", name=name))
            if c not in out:
                out.append(c)
    return [replace(c, id=i) for i, c in enumerate(out, 1)]


# ---------------------------------------------------------------------------
# Inference rules


def rename_apart(c: Clause, avoid: Iterable[str]) -> tuple[Clause, dict[str, str]]:
    """Rename the variables of ``c`` that clash with ``avoid``."""
    avoid = set(avoid)
    mine = c.variables()
    taken = avoid | set(mine)
    renaming: dict[str, str] = {}
    for v in mine:
        if v in avoid:
            base = v.rstrip("0123456789") or v
            k = 1
            while f"{base}{k}" in taken:
                k += 1
            renaming[v] = f"{base}{k}"
            taken.add(renaming[v])
    if not renaming:
        return c, {}
    s = {k: Var(v) for k, v in renaming.items()}
    return replace(c, literals=tuple(_subst_literal(s, lit) for lit in c.literals)), renaming


def resolve(c1: Clause, c2: Clause, i: int, j: int) -> Clause | None:
    """Binary resolvent of ``c1`` on literal ``i`` with ``c2`` on literal ``j``, or None."""
    l1, l2 = c1.literals[i], c2.literals[j]
    if l1.positive == l2.positive or l1.atom.pred != l2.atom.pred:
        return None
    c2r, renaming = rename_apart(c2, c1.variables())
    sigma = unify(l1.atom, c2r.literals[j].atom)
    if isinstance(sigma, UnifyFailure):
        return None
    lits = [_subst_literal(sigma, x) for k, x in enumerate(c1.literals) if k != i]
    lits += [_subst_literal(sigma, x) for k, x in enumerate(c2r.literals) if k != j]
    inf = Inference(
        "resolve",
        parents=(c1.id, c2.id),
        positions=(i, j),
        subst=tuple(sigma.items()),
        renaming=tuple(renaming.items()),
    )
    return Clause(_dedup(lits), inf)


def factor(c: Clause) -> list[Clause]:
    """All binary factors of ``c``."""
    out = []
    lits = c.literals
    for i in range(len(lits)):
        for j in range(i + 1, len(lits)):
            a, b = lits[i], lits[j]
            if a.positive != b.positive or a.atom.pred != b.atom.pred:
                continue
            sigma = unify(a.atom, b.atom)
            if isinstance(sigma, UnifyFailure):
                continue
            new = _dedup(_subst_literal(sigma, x) for x in lits)
            out.append(Clause(new, Inference("factor", parents=(c.id,), positions=(i, j), subst=tuple(sigma.items()))))
    return out


def _match(pattern: Term, target: Term, s: dict[str, Term], trail: list[str]) -> bool:
    kind = type(pattern)
    if kind is Var:
        bound = s.get(pattern.name)
        if bound is None:
            s[pattern.name] = target
            trail.append(pattern.name)
            return True
        return bound == target
    if kind is Const:
        return pattern == target
    if type(target) is not App or target.fn != pattern.fn or len(target.args) != len(pattern.args):
        return False
    for p, t in zip(pattern.args, target.args):
        if not _match(p, t, s, trail):
            return False
    return True


def _match_literal(a: Literal, b: Literal, s: dict[str, Term]) -> list[str] | None:
    """Extend ``s`` so that ``a`` instantiates to ``b``; returns the bound names, or None (``s`` restored)."""
    if a.positive != b.positive or a.atom.pred != b.atom.pred:
        return None
    trail: list[str] = []
    for p, t in zip(a.atom.args, b.atom.args):
        if not _match(p, t, s, trail):
            for name in trail:
                del s[name]
            return None
    return trail


def subsumes(c1: Clause, c2: Clause) -> bool:
    """True iff some substitution maps every literal of ``c1`` onto a literal of ``c2``."""
    if not c1.keys <= c2.keys:
        return False
    candidates = []
    for lit in c1.literals:
        options = [t for t in c2.literals if _match_literal(lit, t, {}) is not None]
        if not options:
            return False
        candidates.append((lit, options))
    candidates.sort(key=lambda pair: len(pair[1]))
    s: dict[str, Term] = {}

    def go(k: int) -> bool:
        if k == len(candidates):
            return True
        lit, options = candidates[k]
        for target in options:
            trail = _match_literal(lit, target, s)
            if trail is None:
                continue
            if go(k + 1):
                return True
            for name in trail:
                del s[name]
        return False

    return go(0)


# ---------------------------------------------------------------------------
# Saturation


@dataclass(frozen=True)
class ProverConfig:
    max_generated_clauses: int = 50_000
    timeout_seconds: float = 10.0
    pick_ratio: tuple[int, int] = (1, 4)
    subsumption: bool = True
    split_goal: bool = True

    def __post_init__(self):
        if self.max_generated_clauses <= 0 or self.timeout_seconds <= 0:
            raise ValueError("prover limits must be positive")
        if len(self.pick_ratio) != 2 or min(self.pick_ratio) < 0 or sum(self.pick_ratio) <= 0:
            raise ValueError(f"bad pick ratio {self.pick_ratio}")


@dataclass(frozen=True)
class RefutationProof:
    clauses: tuple[Clause, ...]
    inputs: tuple[Clause, ...]

    @property
    def used_axioms(self) -> list[str]:
        names = {c.inference.name for c in self.clauses if c.inference.rule == "input"}
        return sorted(names)

    @property
    def sink(self) -> Clause:
        return self.clauses[-1]


@dataclass
class ProverResult:
    outcome: str  # "Refutation", "Saturated" or "ResourceOut"
    proof: RefutationProof | None
    generated: int
    kept: int
    seconds: float = field(compare=False, default=0.0)

    @property
    def refuted(self) -> bool:
        return self.outcome == "Refutation"


@dataclass
class ProveOutcome:
    """Result of :func:`prove`: one saturation run per conjunct of the split goal."""

    outcome: str
    parts: list[tuple[Formula, ProverResult]]

    @property
    def proofs(self) -> list[RefutationProof]:
        return [r.proof for _, r in self.parts if r.proof is not None]

    @property
    def generated(self) -> int:
        return sum(r.generated for _, r in self.parts)

    @property
    def kept(self) -> int:
        return sum(r.kept for _, r in self.parts)

    @property
    def seconds(self) -> float:
        return sum(r.seconds for _, r in self.parts)

    @property
    def refuted(self) -> bool:
        return self.outcome == "Refutation"


class _Passive:
    """Unprocessed clauses, selectable by age or by weight."""

    def __init__(self):
        self.by_age: list[tuple[int, Clause]] = []
        self.by_weight: list[tuple[int, int, Clause]] = []
        self.gone: set[int] = set()
        self.count = 0

    def push(self, c: Clause) -> None:
        heapq.heappush(self.by_age, (c.id, c))
        heapq.heappush(self.by_weight, (c.weight, c.id, c))
        self.count += 1

    def pop(self, oldest: bool) -> Clause:
        heap = self.by_age if oldest else self.by_weight
        while True:
            c = heapq.heappop(heap)[-1]
            if c.id not in self.gone:
                self.gone.add(c.id)
                self.count -= 1
                return c

    def __len__(self):
        return self.count


def saturate(clauses: Sequence[Clause], cfg: ProverConfig = ProverConfig()) -> ProverResult:
    start = time.perf_counter()
    by_id: dict[int, Clause] = {}
    passive = _Passive()
    active: list[Clause] = []
    next_id = max((c.id for c in clauses), default=0) + 1
    generated = kept = 0
    seen: set[tuple[str, ...]] = set()

    for c in clauses:
        by_id[c.id] = c
        if c.is_empty:
            return _finish(c, by_id, clauses, generated, kept, start)
        if not is_tautology(c):
            seen.add(variant_key(c))
            passive.push(c)

    age_picks, weight_picks = cfg.pick_ratio
    cycle = age_picks + weight_picks
    picks = 0
    while len(passive):
        oldest = (picks % cycle) < age_picks
        picks += 1
        given = passive.pop(oldest)
        if cfg.subsumption:
            if any(len(a) <= len(given) and subsumes(a, given) for a in active):
                continue
            active = [a for a in active if not (len(given) <= len(a) and subsumes(given, a))]
        active.append(given)
        new = factor(given)
        for other in active:
            for i in range(len(given.literals)):
                for j in range(len(other.literals)):
                    r = resolve(given, other, i, j)
                    if r is not None:
                        new.append(r)
        for c in new:
            c = replace(c, id=next_id)
            next_id += 1
            generated += 1
            by_id[c.id] = c
            if c.is_empty:
                return _finish(c, by_id, clauses, generated, kept, start)
            if is_tautology(c):
                continue
            key = variant_key(c)
            if key in seen:
                continue
            seen.add(key)
            if cfg.subsumption and any(len(a) <= len(c) and subsumes(a, c) for a in active):
                continue
            passive.push(c)
            kept += 1
        if generated >= cfg.max_generated_clauses or time.perf_counter() - start > cfg.timeout_seconds:
            return ProverResult("ResourceOut", None, generated, kept, time.perf_counter() - start)
    return ProverResult("Saturated", None, generated, kept, time.perf_counter() - start)


def _finish(empty: Clause, by_id, inputs, generated, kept, start) -> ProverResult:
    needed: set[int] = set()
    stack = [empty.id]
    while stack:
        cid = stack.pop()
        if cid in needed:
            continue
        needed.add(cid)
        stack.extend(by_id[cid].inference.parents)
    proof = RefutationProof(tuple(by_id[i] for i in sorted(needed)), tuple(inputs))
    return ProverResult("Refutation", proof, generated, kept, time.perf_counter() - start)


def split_goal(goal: Formula) -> list[Formula]:
    """Conjuncts of ``goal``, pushed through universal quantifiers and implication consequents.

    Uses ``A & B``, ``forall x. (A & B) == (forall x. A) & (forall x. B)`` and
    ``C -> A & B == (C -> A) & (C -> B)``; the goal holds iff every part does.
    """
    if isinstance(goal, And):
        return split_goal(goal.left) + split_goal(goal.right)
    if isinstance(goal, Forall):
        return [Forall(goal.var, g) for g in split_goal(goal.body)]
    if isinstance(goal, Imp) and goal.right != FALSE:
        parts = split_goal(goal.right)
        if len(parts) > 1:
            return [Imp(goal.left, g) for g in parts]
    return [goal]


def prove_formulas(axioms: Sequence[tuple[str, Formula]], goal: Formula,
                   cfg: ProverConfig = ProverConfig(),
                   defs: Iterable[DefinedPredicate] = DEFAULT_DEFS) -> ProveOutcome:
    defs = tuple(defs)
    axioms = [(name, expand_defs(f, defs)) for name, f in axioms]
    goal = expand_defs(goal, defs)
    goals = split_goal(goal) if cfg.split_goal else [goal]
    parts = []
    outcome = "Refutation"
    deadline = time.perf_counter() + cfg.timeout_seconds
    for g in goals:
        remaining = max(deadline - time.perf_counter(), 1e-3)
        r = saturate(clausify(axioms, g), replace(cfg, timeout_seconds=remaining))
        parts.append((g, r))
        if not r.refuted:
            outcome = r.outcome
            break
    return ProveOutcome(outcome, parts)


def prove(problem, cfg: ProverConfig = ProverConfig()) -> ProveOutcome:
    """Refutation attempt for a prove-kind problem (anything with ``axioms`` and ``goal``)."""
    if getattr(problem, "kind", "prove") != "prove":
        raise ValueError(f"{problem.name} is not a prove problem")
    return prove_formulas(problem.axioms, problem.goal, cfg)


# ---------------------------------------------------------------------------
# Output


def format_proof(proof: RefutationProof) -> str:
    lines = []
    for c in proof.clauses:
        inf = c.inference
        line = f"{c.id}. {c} [{inf}]"
        if inf.rule != "input":
            line += f" subst={print_subst(dict(inf.subst))}"
        lines.append(line)
    return "\n".join(lines)


def clause_to_dict(c: Clause) -> dict:
    inf = c.inference
    return {
        "id": c.id,
        "literals": [str(lit) for lit in c.literals],
        "rule": inf.rule,
        "name": inf.name,
        "parents": list(inf.parents),
        "positions": list(inf.positions),
        "subst": {k: str(v) for k, v in inf.subst},
        "renaming": dict(inf.renaming),
    }


def proof_to_dict(proof: RefutationProof) -> dict:
    return {
        "clauses": [clause_to_dict(c) for c in proof.clauses],
        "inputs": [clause_to_dict(c) for c in proof.inputs],
        "used_axioms": proof.used_axioms,
    }


def _parse_literal(text: str, signature: Signature) -> Literal:
    from .syntax import parse_formula

    positive = not text.startswith("~")
    f = parse_formula(text.lstrip("~"), _clause_signature(text, signature))
    return Literal(positive, f)


def _clause_signature(text: str, signature: Signature) -> Signature:
    names = re.findall(r"\bsk\d+\b", text)
    functions = dict(signature.functions)
    constants = list(signature.constants)
    for name in dict.fromkeys(names):
        m = re.search(rf"\b{name}\(", text)
        if m is None:
            constants.append(name)
        else:
            depth, k, arity = 0, m.end(), 1
            while k < len(text):
                ch = text[k]
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    if depth == 0:
                        break
                    depth -= 1
                elif ch == "," and depth == 0:
                    arity += 1
                k += 1
            functions[name] = arity
    return Signature(signature.predicates, tuple(functions.items()), tuple(dict.fromkeys(constants)), signature.defined)


def clause_from_dict(d: dict, signature: Signature = SIGNATURE) -> Clause:
    from .syntax import parse_term

    lits = tuple(_parse_literal(t, signature) for t in d["literals"])
    sig = _clause_signature(" ".join(d["literals"]) + " " + " ".join(d["subst"].values()), signature)
    inf = Inference(
        d["rule"],
        name=d.get("name"),
        parents=tuple(d.get("parents", ())),
        positions=tuple(d.get("positions", ())),
        subst=tuple((k, parse_term(v, sig)) for k, v in d.get("subst", {}).items()),
        renaming=tuple(d.get("renaming", {}).items()),
    )
    return Clause(lits, inf, d["id"])


def proof_from_dict(d: dict, signature: Signature = SIGNATURE) -> RefutationProof:
    return RefutationProof(
        tuple(clause_from_dict(c, signature) for c in d["clauses"]),
        tuple(clause_from_dict(c, signature) for c in d["inputs"]),
    )
