"""Terms, formulas, parsing/printing, substitution and unification.

Negation is not a connective of its own: ``~A`` is stored as ``A -> false``
and printed back as ``~A``.  ``A <-> B`` is parsed straight into
``(A -> B) & (B -> A)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union


# ---------------------------------------------------------------------------
# Errors


class FormulaError(ValueError):
    """Base class for everything the syntax layer rejects."""


class ParseError(FormulaError):
    def __init__(self, message: str, pos: int, expected: Iterable[str] = ()):
        self.pos = pos
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} at position {pos}; expected one of {', '.join(self.expected)}"
        else:
            message = f"{message} at position {pos}"
        super().__init__(message)


class ArityError(FormulaError):
    pass


class UnknownSymbolError(FormulaError):
    pass


class ShadowingError(FormulaError):
    pass


class DefinitionError(FormulaError):
    pass


# ---------------------------------------------------------------------------
# Signature


@dataclass(frozen=True)
class Signature:
    predicates: tuple[tuple[str, int], ...]
    functions: tuple[tuple[str, int], ...]
    constants: tuple[str, ...] = ()
    defined: tuple[str, ...] = ()

    def __post_init__(self):
        names = [p for p, _ in self.predicates] + [f for f, _ in self.functions] + list(self.constants)
        seen = set()
        for name in names:
            if name in seen:
                raise FormulaError(f"symbol {name!r} declared twice")
            seen.add(name)
        for name, arity in self.predicates + self.functions:
            if arity < 0:
                raise FormulaError(f"negative arity for {name!r}")
        if self.predicate_arity("Undir") != 2 or self.function_arity("rev") != 1:
            raise FormulaError("signature must declare Undir/2 and rev/1")
        for name in self.defined:
            if self.predicate_arity(name) is None:
                raise FormulaError(f"defined predicate {name!r} is not declared")

    def predicate_arity(self, name: str) -> int | None:
        return dict(self.predicates).get(name)

    def function_arity(self, name: str) -> int | None:
        return dict(self.functions).get(name)

    def is_constant(self, name: str) -> bool:
        return name in self.constants

    def with_constants(self, *names: str) -> "Signature":
        extra = tuple(n for n in names if n not in self.constants)
        return Signature(self.predicates, self.functions, self.constants + extra, self.defined)


SIGNATURE = Signature(
    predicates=(("Undir", 2), ("DiPt", 2), ("DiLn", 2), ("LApt", 2), ("LCon", 2), ("Con", 2)),
    functions=(("rev", 1), ("ln", 2), ("pt", 2), ("par", 2)),
    constants=(),
    defined=("Con",),
)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Term", ...]

    def __str__(self):
        return f"{self.fn}({','.join(map(str, self.args))})"


Term = Union[Var, Const, App]


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Falsum:
    pass


FALSE = Falsum()


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Imp:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Atom, Falsum, And, Or, Imp, Forall, Exists]
Quantifier = (Forall, Exists)
Binary = (And, Or, Imp)

Substitution = dict  # variable name -> Term


def Not(f: Formula) -> Imp:
    return Imp(f, FALSE)


def Iff(a: Formula, b: Formula) -> And:
    return And(Imp(a, b), Imp(b, a))


def is_negation(f: Formula) -> bool:
    return isinstance(f, Imp) and f.right == FALSE


def forall_all(names: Iterable[str], body: Formula) -> Formula:
    for name in reversed(list(names)):
        body = Forall(name, body)
    return body


def conj(fs: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; an empty list gives ``~false``."""
    fs = list(fs)
    if not fs:
        return Not(FALSE)
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


# ---------------------------------------------------------------------------
# Traversals


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, App):
        for a in t.args:
            yield from term_vars(a)


def occurs(name: str, t: Term) -> bool:
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, App):
        return any(occurs(name, a) for a in t.args)
    return False


def free_vars(f: Formula | Term) -> set[str]:
    if isinstance(f, (Var, Const, App)):
        return set(term_vars(f))
    if isinstance(f, Atom):
        return {v for a in f.args for v in term_vars(a)}
    if isinstance(f, Falsum):
        return set()
    if isinstance(f, Binary):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Quantifier):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def all_vars(f: Formula) -> set[str]:
    """Free and bound variable names."""
    if isinstance(f, Atom):
        return free_vars(f)
    if isinstance(f, Falsum):
        return set()
    if isinstance(f, Binary):
        return all_vars(f.left) | all_vars(f.right)
    return all_vars(f.body) | {f.var}


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Binary):
        yield from atoms(f.left)
        yield from atoms(f.right)
    elif isinstance(f, Quantifier):
        yield from atoms(f.body)


def count_predicate(f: Formula, pred: str) -> int:
    return sum(1 for a in atoms(f) if a.pred == pred)


def term_symbols(t: Term) -> Iterator[tuple[str, int]]:
    """(function name, arity) pairs, constants reported with arity 0."""
    if isinstance(t, Const):
        yield t.name, 0
    elif isinstance(t, App):
        yield t.fn, len(t.args)
        for a in t.args:
            yield from term_symbols(a)


def fresh_name(base: str, avoid: set[str]) -> str:
    name = base + "'"
    while name in avoid:
        name += "'"
    return name


# ---------------------------------------------------------------------------
# Substitution


def subst_term(s: Mapping[str, Term], t: Term) -> Term:
    if isinstance(t, Var):
        return s.get(t.name, t)
    if isinstance(t, App):
        return App(t.fn, tuple(subst_term(s, a) for a in t.args))
    return t


def apply_subst(s: Mapping[str, Term], f):
    """Apply ``s`` simultaneously to a term or formula, renaming binders that would capture."""
    if not s:
        return f
    if isinstance(f, (Var, Const, App)):
        return subst_term(s, f)
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(s, a) for a in f.args))
    if isinstance(f, Falsum):
        return f
    if isinstance(f, Binary):
        return type(f)(apply_subst(s, f.left), apply_subst(s, f.right))
    if isinstance(f, Quantifier):
        inner = {k: v for k, v in s.items() if k != f.var and k in free_vars(f.body)}
        if not inner:
            return f
        incoming = {v for t in inner.values() for v in term_vars(t)}
        if f.var in incoming:
            new = fresh_name(f.var, incoming | all_vars(f.body) | set(inner))
            inner[f.var] = Var(new)
            return type(f)(new, apply_subst(inner, f.body))
        return type(f)(f.var, apply_subst(inner, f.body))
    raise TypeError(f"cannot substitute into {f!r}")


def compose(s: Mapping[str, Term], t: Mapping[str, Term]) -> dict[str, Term]:
    """The substitution ``x -> t(s(x))``: apply ``s`` first, then ``t``."""
    out = {k: subst_term(t, v) for k, v in s.items()}
    for k, v in t.items():
        out.setdefault(k, v)
    return {k: v for k, v in out.items() if v != Var(k)}


# ---------------------------------------------------------------------------
# Unification


@dataclass(frozen=True)
class UnifyFailure:
    """Why two expressions do not unify.  ``path`` is the argument-index route from the root."""

    kind: str  # "clash" or "occurs"
    left: object
    right: object
    path: tuple[int, ...] = ()

    def __bool__(self):
        return False

    def __str__(self):
        where = ".".join(map(str, self.path)) or "root"
        if self.kind == "occurs":
            return f"occurs check: {self.left} in {self.right} at {where}"
        return f"clash: {self.left} vs {self.right} at {where}"


def unify(a, b, subst: Mapping[str, Term] | None = None) -> dict[str, Term] | UnifyFailure:
    """Most general unifier of two terms or two atoms (Robinson, with occurs check).

    The returned dict is idempotent.  On failure a falsy :class:`UnifyFailure`
    is returned instead; test with ``isinstance``, since an empty unifier is
    also falsy.
    """
    s: dict[str, Term] = dict(subst or {})
    if isinstance(a, Atom) or isinstance(b, Atom):
        if not (isinstance(a, Atom) and isinstance(b, Atom)) or a.pred != b.pred or len(a.args) != len(b.args):
            return UnifyFailure("clash", a, b)
        stack = [(x, y, (i,)) for i, (x, y) in enumerate(zip(a.args, b.args))]
    else:
        stack = [(a, b, ())]
    stack.reverse()
    while stack:
        x, y, path = stack.pop()
        x = subst_term(s, x)
        y = subst_term(s, y)
        if x == y:
            continue
        if isinstance(x, Var) or isinstance(y, Var):
            if not isinstance(x, Var):
                x, y = y, x
            if occurs(x.name, y):
                return UnifyFailure("occurs", x, y, path)
            binding = {x.name: y}
            s = {k: subst_term(binding, v) for k, v in s.items()}
            s[x.name] = y
            continue
        if isinstance(x, App) and isinstance(y, App) and x.fn == y.fn and len(x.args) == len(y.args):
            pairs = [(p, q, path + (i,)) for i, (p, q) in enumerate(zip(x.args, y.args))]
            stack.extend(reversed(pairs))
            continue
        return UnifyFailure("clash", x, y, path)
    return s


# ---------------------------------------------------------------------------
# Defined predicates


@dataclass(frozen=True)
class DefinedPredicate:
    name: str
    params: tuple[str, ...]
    body: Formula

    def __post_init__(self):
        extra = free_vars(self.body) - set(self.params)
        if extra:
            raise DefinitionError(f"definition of {self.name} mentions free variables {sorted(extra)}")


def expand_defs(f: Formula, defs: Iterable[DefinedPredicate], signature: Signature = SIGNATURE) -> Formula:
    table = {d.name: d for d in defs}
    _check_acyclic(table)

    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            d = table.get(g.pred)
            if d is None:
                if g.pred in signature.defined:
                    raise DefinitionError(f"no definition supplied for {g.pred}")
                return g
            if len(g.args) != len(d.params):
                raise ArityError(f"{g.pred} expects {len(d.params)} arguments, got {len(g.args)}")
            return go(apply_subst(dict(zip(d.params, g.args)), d.body))
        if isinstance(g, Falsum):
            return g
        if isinstance(g, Binary):
            return type(g)(go(g.left), go(g.right))
        return type(g)(g.var, go(g.body))

    return go(f)


def _check_acyclic(table: Mapping[str, DefinedPredicate]) -> None:
    state: dict[str, int] = {}

    def visit(name: str) -> None:
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise DefinitionError(f"recursive definition involving {name}")
        state[name] = 1
        for a in atoms(table[name].body):
            if a.pred in table:
                visit(a.pred)
        state[name] = 2

    for name in table:
        visit(name)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s+|#[^\n]*|(?P<op><->|->|[~&|(),.])|(?P<id>[A-Za-z_][A-Za-z0-9_']*)"
)
_KEYWORDS = {"forall", "exists", "false"}


@dataclass
class _Tok:
    kind: str  # "op", "id", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup:
            toks.append(_Tok(m.lastgroup, m.group(m.lastgroup), pos))
        pos = m.end()
    toks.append(_Tok("end", "<end>", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, signature: Signature):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = signature
        self.bound: list[str] = []

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "id") and self.tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, [repr(text)])
        tok = self.tok
        self.i += 1
        return tok

    def finish(self) -> None:
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, ["<end>"])

    def formula(self) -> Formula:
        left = self.implication()
        if self.at("<->"):
            self.i += 1
            right = self.formula()
            return Iff(left, right)
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.i += 1
            return Imp(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("|"):
            self.i += 1
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.tok
        if self.at("~"):
            self.i += 1
            return Not(self.unary())
        if self.at("forall") or self.at("exists"):
            self.i += 1
            name_tok = self.tok
            if name_tok.kind != "id" or name_tok.text in _KEYWORDS:
                raise ParseError("expected a variable name", name_tok.pos, ["<identifier>"])
            name = name_tok.text
            if name in self.bound:
                raise ShadowingError(f"variable {name!r} re-bound at position {name_tok.pos}")
            if self.sig.is_constant(name) or self.sig.function_arity(name) is not None:
                raise ShadowingError(f"cannot quantify over declared symbol {name!r}")
            self.i += 1
            self.expect(".")
            self.bound.append(name)
            body = self.formula()
            self.bound.pop()
            return (Forall if tok.text == "forall" else Exists)(name, body)
        if self.at("false"):
            self.i += 1
            return FALSE
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.expect(")")
            return f
        if tok.kind == "id":
            return self.atom()
        raise ParseError(f"unexpected {tok.text!r}", tok.pos, ["'~'", "'('", "'forall'", "'exists'", "'false'", "<atom>"])

    def atom(self) -> Atom:
        tok = self.tok
        arity = self.sig.predicate_arity(tok.text)
        if arity is None:
            raise UnknownSymbolError(f"unknown predicate {tok.text!r} at position {tok.pos}")
        self.i += 1
        args = self.arguments()
        if len(args) != arity:
            raise ArityError(f"{tok.text}/{arity} applied to {len(args)} argument(s) at position {tok.pos}")
        return Atom(tok.text, tuple(args))

    def arguments(self) -> list[Term]:
        if not self.at("("):
            return []
        self.i += 1
        args = [self.term()]
        while self.at(","):
            self.i += 1
            args.append(self.term())
        self.expect(")")
        return args

    def term(self) -> Term:
        tok = self.tok
        if tok.kind != "id" or tok.text in _KEYWORDS:
            raise ParseError(f"unexpected {tok.text!r}", tok.pos, ["<term>"])
        self.i += 1
        name = tok.text
        if self.at("("):
            arity = self.sig.function_arity(name)
            if arity is None:
                raise UnknownSymbolError(f"unknown function {name!r} at position {tok.pos}")
            args = self.arguments()
            if len(args) != arity:
                raise ArityError(f"{name}/{arity} applied to {len(args)} argument(s) at position {tok.pos}")
            return App(name, tuple(args))
        if name in self.bound:
            return Var(name)
        if self.sig.is_constant(name) or self.sig.function_arity(name) == 0:
            return Const(name)
        if self.sig.function_arity(name) is not None:
            raise ArityError(f"{name}/{self.sig.function_arity(name)} used without arguments at position {tok.pos}")
        if self.sig.predicate_arity(name) is not None:
            raise UnknownSymbolError(f"predicate {name!r} used as a term at position {tok.pos}")
        return Var(name)


def parse_formula(text: str, signature: Signature = SIGNATURE) -> Formula:
    p = _Parser(text, signature)
    f = p.formula()
    p.finish()
    return f


def parse_term(text: str, signature: Signature = SIGNATURE) -> Term:
    p = _Parser(text, signature)
    t = p.term()
    p.finish()
    return t


# ---------------------------------------------------------------------------
# Printing

_PREC = {Imp: 1, Or: 2, And: 3}
_SYMBOL = {Imp: "->", Or: "|", And: "&"}


def print_term(t: Term) -> str:
    return str(t)


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f"{f.pred}({','.join(map(str, f.args))})"
    if isinstance(f, Falsum):
        return "false"
    if isinstance(f, Quantifier):
        kw = "forall" if isinstance(f, Forall) else "exists"
        body = print_formula(f.body)
        if isinstance(f.body, Binary) and not is_negation(f.body):
            body = f"({body})"
        return f"{kw} {f.var}. {body}"
    if is_negation(f):
        return "~" + _operand(f.left)
    op = type(f)
    left = print_formula(f.left)
    right = print_formula(f.right)
    if _needs_parens(f.left, op, "left"):
        left = f"({left})"
    if _needs_parens(f.right, op, "right"):
        right = f"({right})"
    return f"{left} {_SYMBOL[op]} {right}"


def _operand(f: Formula) -> str:
    text = print_formula(f)
    if isinstance(f, Quantifier) or (isinstance(f, Binary) and not is_negation(f)):
        return f"({text})"
    return text


def _needs_parens(child: Formula, op: type, side: str) -> bool:
    if isinstance(child, Quantifier):
        return True
    if not isinstance(child, Binary) or is_negation(child):
        return False
    cp, pp = _PREC[type(child)], _PREC[op]
    if cp != pp:
        return cp < pp
    # And/Or are left-nested by the parser, Imp right-nested.
    return side == ("left" if op is Imp else "right")


def print_subst(s: Mapping[str, Term]) -> str:
    return "{" + ", ".join(f"{k}:={v}" for k, v in s.items()) + "}"


# Convergence of lines: Con(l,m) := Undir(l,m) & Undir(l,rev(m)).
CON = DefinedPredicate(
    "Con",
    ("l", "m"),
    And(Atom("Undir", (Var("l"), Var("m"))), Atom("Undir", (Var("l"), App("rev", (Var("m"),))))),
)
DEFAULT_DEFS = (CON,)


for _cls in (Atom, Falsum, And, Or, Imp, Forall, Exists):
    _cls.__str__ = print_formula
del _cls
