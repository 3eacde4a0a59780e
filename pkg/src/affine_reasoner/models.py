"""Finite interpretations, classical evaluation and exhaustive model search.

Search enumerates every interpretation over the domain ``{0, ..., n-1}`` in a
fixed order, so that reported models are reproducible:

* sizes ascending;
* function tables, ``rev`` first and then the remaining symbols by name.  A
  table of arity ``k`` is enumerated as a displacement vector ``d`` over its
  cells in row-major order, lexicographically, with
  ``f(a1, ..., ak) = (a1 + d[a1, ..., ak]) mod n``; the identity-like table
  therefore comes first;
* predicate tables, ``Undir`` first and then the rest by name, all cells
  concatenated in row-major order and read as a binary counter whose first
  cell is the least significant bit.  The empty relation comes first,
  ``{(0,0)}`` second, ``{(0,1)}`` third, and so on;
* constants, sorted by name, each lexicographically over the domain.

``rev`` and ``Undir`` are always part of an interpretation, whether or not the
query mentions them.  Predicate tables are evaluated in numpy batches.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .syntax import (
    Atom,
    Binary,
    Const,
    DEFAULT_DEFS,
    DefinedPredicate,
    Exists,
    Falsum,
    Forall,
    Formula,
    Imp,
    And,
    Or,
    Term,
    Var,
    atoms,
    expand_defs,
    free_vars,
    term_symbols,
)

DEFAULT_CAP = 4
_CHUNK = 1 << 16
_MAX_PREDICATE_CELLS = 40


class EvaluationError(ValueError):
    pass


class SizeCapError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Interpretations


@dataclass(frozen=True, eq=False)
class Interpretation:
    size: int
    functions: Mapping[str, np.ndarray]
    predicates: Mapping[str, np.ndarray]
    constants: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        n = self.size
        if n < 1:
            raise ValueError("domain size must be positive")
        for name, table in self.functions.items():
            if table.ndim < 1 or any(d != n for d in table.shape):
                raise ValueError(f"table for {name} has shape {table.shape}, domain size {n}")
            if table.min() < 0 or table.max() >= n:
                raise ValueError(f"table for {name} leaves the domain")
        for name, table in self.predicates.items():
            if any(d != n for d in table.shape):
                raise ValueError(f"table for {name} has shape {table.shape}, domain size {n}")
        for name, value in self.constants.items():
            if not 0 <= value < n:
                raise ValueError(f"constant {name} mapped outside the domain")
        if "rev" not in self.functions or "Undir" not in self.predicates:
            raise ValueError("an interpretation needs rev and Undir tables")

    @classmethod
    def make(cls, size: int, rev: Sequence[int], undir: Iterable[tuple[int, int]] | np.ndarray,
             constants: Mapping[str, int] | None = None, **extra) -> "Interpretation":
        """Build from a ``rev`` list and ``Undir`` as a set of pairs or a boolean matrix."""
        table = np.asarray(undir) if isinstance(undir, np.ndarray) else None
        if table is None:
            table = np.zeros((size, size), dtype=bool)
            for i, j in undir:
                table[i, j] = True
        functions = {"rev": np.asarray(rev, dtype=np.int64)}
        predicates = {"Undir": table.astype(bool)}
        for name, value in extra.items():
            value = np.asarray(value)
            (predicates if value.dtype == bool else functions)[name] = value
        return cls(size, functions, predicates, dict(constants or {}))

    @property
    def rev_table(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.functions["rev"])

    @property
    def undir_table(self) -> np.ndarray:
        return self.predicates["Undir"]

    @property
    def const_table(self) -> dict[str, int]:
        return dict(self.constants)

    def undir_pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.undir_table))]

    def __eq__(self, other):
        return isinstance(other, Interpretation) and format_interpretation(self) == format_interpretation(other)

    def __hash__(self):
        return hash(format_interpretation(self))

    def __str__(self):
        return format_interpretation(self)


def format_interpretation(m: Interpretation) -> str:
    lines = [f"size={m.size}"]
    for name in _ordered(m.functions, "rev"):
        lines.append(f"{name}: " + " ".join(_fmt_cell(c) + f"->{int(v)}" for c, v in np.ndenumerate(m.functions[name])))
    for name in _ordered(m.predicates, "Undir"):
        cells = ",".join(_fmt_tuple(c) for c, v in np.ndenumerate(m.predicates[name]) if v)
        label = "undir" if name == "Undir" else name
        lines.append(f"{label}: {{{cells}}}")
    if m.constants:
        lines.append("const: " + " ".join(f"{k}={v}" for k, v in sorted(m.constants.items())))
    return "\n".join(line.rstrip() for line in lines)


def _fmt_cell(cell: tuple[int, ...]) -> str:
    return str(cell[0]) if len(cell) == 1 else _fmt_tuple(cell)


def _fmt_tuple(cell: tuple[int, ...]) -> str:
    return "(" + ",".join(str(int(c)) for c in cell) + ")"


_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_']*)\s*:\s*(.*)$")


def parse_interpretation(text: str) -> Interpretation:
    """Inverse of :func:`format_interpretation`."""
    size = None
    funcs: dict[str, dict[tuple[int, ...], int]] = {}
    preds: dict[str, list[tuple[int, ...]]] = {}
    consts: dict[str, int] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("size"):
            size = int(line.split("=", 1)[1])
            continue
        m = _LINE.match(line)
        if m is None:
            raise ValueError(f"cannot read interpretation line {raw!r}")
        name, body = m.group(1), m.group(2).strip()
        if name == "const":
            for item in body.split():
                k, v = item.split("=")
                consts[k] = int(v)
        elif body.startswith("{"):
            inner = body.strip("{}").strip()
            tuples = re.findall(r"\(([^()]*)\)", inner)
            preds["Undir" if name == "undir" else name] = [
                tuple(int(x) for x in t.split(",") if x.strip()) for t in tuples
            ]
        else:
            cells = {}
            for item in body.split():
                lhs, rhs = item.split("->")
                key = tuple(int(x) for x in lhs.strip("()").split(","))
                cells[key] = int(rhs)
            funcs[name] = cells
    if size is None:
        raise ValueError("interpretation has no size line")
    functions = {}
    for name, cells in funcs.items():
        arity = len(next(iter(cells)))
        table = np.zeros((size,) * arity, dtype=np.int64)
        for key in itertools.product(range(size), repeat=arity):
            if key not in cells:
                raise ValueError(f"function {name} undefined at {key}")
            table[key] = cells[key]
        functions[name] = table
    predicates = {}
    for name, tuples in preds.items():
        arity = len(tuples[0]) if tuples else 2
        table = np.zeros((size,) * arity, dtype=bool)
        for t in tuples:
            table[t] = True
        predicates[name] = table
    return Interpretation(size, functions, predicates, consts)


def _ordered(names: Iterable[str], first: str) -> list[str]:
    names = list(names)
    return ([first] if first in names else []) + sorted(n for n in names if n != first)


# ---------------------------------------------------------------------------
# Evaluation


class _Evaluator:
    """Evaluates formulas against fixed function tables and possibly batched predicate tables.

    Predicate tables may carry a leading batch axis; truth values then come
    back as boolean arrays over that axis.
    """

    def __init__(self, size, functions, predicates, constants, defs=()):
        self.n = size
        self.functions = functions
        self.predicates = predicates
        self.constants = constants
        self.defs = {d.name: d for d in defs}

    def term(self, t: Term, env: Mapping[str, int]) -> int:
        if isinstance(t, Var):
            if t.name not in env:
                raise EvaluationError(f"free variable {t.name} has no value")
            return env[t.name]
        if isinstance(t, Const):
            if t.name not in self.constants:
                raise EvaluationError(f"constant {t.name} is not interpreted")
            return self.constants[t.name]
        table = self.functions.get(t.fn)
        if table is None:
            raise EvaluationError(f"function {t.fn} is not interpreted")
        return int(table[tuple(self.term(a, env) for a in t.args)])

    def value(self, f: Formula, env: Mapping[str, int]):
        if isinstance(f, Atom):
            args = tuple(self.term(a, env) for a in f.args)
            d = self.defs.get(f.pred)
            if d is not None:
                return self.value(d.body, dict(zip(d.params, args)))
            table = self.predicates.get(f.pred)
            if table is None:
                raise EvaluationError(f"predicate {f.pred} is not interpreted")
            return table[(Ellipsis,) + args]
        if isinstance(f, Falsum):
            return np.False_
        if isinstance(f, And):
            left = self.value(f.left, env)
            if not np.any(left):
                return left
            return np.logical_and(left, self.value(f.right, env))
        if isinstance(f, Or):
            left = self.value(f.left, env)
            if np.all(left):
                return left
            return np.logical_or(left, self.value(f.right, env))
        if isinstance(f, Imp):
            left = self.value(f.left, env)
            if not np.any(left):
                return np.logical_not(left)
            return np.logical_or(np.logical_not(left), self.value(f.right, env))
        if isinstance(f, Forall):
            acc = np.True_
            for d in range(self.n):
                acc = np.logical_and(acc, self.value(f.body, {**env, f.var: d}))
                if not np.any(acc):
                    break
            return acc
        if isinstance(f, Exists):
            acc = np.False_
            for d in range(self.n):
                acc = np.logical_or(acc, self.value(f.body, {**env, f.var: d}))
                if np.all(acc):
                    break
            return acc
        raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, m: Interpretation, env: Mapping[str, int] | None = None,
             defs: Iterable[DefinedPredicate] = DEFAULT_DEFS) -> bool:
    """Classical truth value of ``f`` in ``m`` under ``env``.

    Atoms over a predicate listed in ``defs`` are evaluated through the
    definition body rather than a table.
    """
    env = dict(env or {})
    missing = free_vars(f) - set(env)
    if missing:
        raise EvaluationError(f"free variables without values: {sorted(missing)}")
    ev = _Evaluator(m.size, m.functions, m.predicates, m.constants, defs)
    return bool(ev.value(f, env))


def falsifying_assignment(f: Formula, m: Interpretation, defs: Iterable[DefinedPredicate] = DEFAULT_DEFS) -> dict[str, int]:
    """First assignment (lexicographic) to the leading universal block of ``f`` that makes its matrix false.

    Returns an empty dict when ``f`` has no leading universal block.  Assumes
    ``f`` is false in ``m``.
    """
    names = []
    body = f
    while isinstance(body, Forall):
        names.append(body.var)
        body = body.body
    if not names:
        return {}
    ev = _Evaluator(m.size, m.functions, m.predicates, m.constants, defs)
    for values in itertools.product(range(m.size), repeat=len(names)):
        env = dict(zip(names, values))
        if not bool(ev.value(body, env)):
            return env
    return {}


@dataclass(frozen=True)
class FormulaCheck:
    name: str
    holds: bool
    witness: dict[str, int] = field(default_factory=dict)


def check_model(m: Interpretation, formulas: Sequence[tuple[str, Formula]],
                defs: Iterable[DefinedPredicate] = DEFAULT_DEFS) -> list[FormulaCheck]:
    defs = tuple(defs)
    report = []
    for name, f in formulas:
        if free_vars(f):
            raise EvaluationError(f"{name} is not closed")
        holds = evaluate(f, m, defs=defs)
        report.append(FormulaCheck(name, holds, {} if holds else falsifying_assignment(f, m, defs)))
    return report


# ---------------------------------------------------------------------------
# Search


@dataclass(frozen=True)
class SearchQuery:
    satisfy: tuple[Formula, ...]
    falsify: tuple[Formula, ...] = ()
    min_size: int = 1
    max_size: int = DEFAULT_CAP
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "satisfy", tuple(self.satisfy))
        object.__setattr__(self, "falsify", tuple(self.falsify))
        if self.min_size < 1 or self.min_size > self.max_size:
            raise ValueError(f"bad size range {self.min_size}..{self.max_size}")
        if self.max_size > self.cap:
            raise SizeCapError(f"size {self.max_size} exceeds the cap {self.cap}")
        for f in self.satisfy + self.falsify:
            if free_vars(f):
                raise ValueError(f"query formula is not closed: {f}")


@dataclass(frozen=True)
class Found:
    interpretation: Interpretation
    witnesses: tuple[dict[str, int], ...]
    scanned: int

    outcome = "Found"

    @property
    def size(self) -> int:
        return self.interpretation.size


@dataclass(frozen=True)
class Exhausted:
    sizes: tuple[int, int]
    scanned: int

    outcome = "Exhausted"


SearchResult = Found | Exhausted


def _symbols(formulas: Iterable[Formula]):
    functions: dict[str, int] = {"rev": 1}
    predicates: dict[str, int] = {"Undir": 2}
    constants: set[str] = set()
    for f in formulas:
        for a in atoms(f):
            if predicates.setdefault(a.pred, len(a.args)) != len(a.args):
                raise EvaluationError(f"predicate {a.pred} used with two arities")
            for t in a.args:
                for name, arity in term_symbols(t):
                    if arity == 0:
                        constants.add(name)
                    elif functions.setdefault(name, arity) != arity:
                        raise EvaluationError(f"function {name} used with two arities")
    return functions, predicates, sorted(constants)


def _function_tables(n: int, arity: int) -> list[np.ndarray]:
    cells = list(itertools.product(range(n), repeat=arity))
    base = np.array([c[0] for c in cells], dtype=np.int64)
    out = []
    for d in itertools.product(range(n), repeat=len(cells)):
        out.append(((base + np.array(d, dtype=np.int64)) % n).reshape((n,) * arity))
    return out


def _cost(f: Formula, n: int) -> int:
    depth = 0
    size = 0
    stack = [(f, 0)]
    while stack:
        g, q = stack.pop()
        size += 1
        if isinstance(g, (Forall, Exists)):
            depth = max(depth, q + 1)
            stack.append((g.body, q + 1))
        elif isinstance(g, Binary):
            stack.append((g.left, q))
            stack.append((g.right, q))
    return size * n ** depth


def count_interpretations(n: int, functions: Mapping[str, int], predicates: Mapping[str, int], nconsts: int) -> int:
    total = 1
    for arity in functions.values():
        total *= n ** (n ** arity)
    total *= 2 ** sum(n ** a for a in predicates.values())
    return total * n ** nconsts


def search(q: SearchQuery, defs: Iterable[DefinedPredicate] = DEFAULT_DEFS) -> SearchResult:
    """First interpretation, in the documented order, meeting the query."""
    defs = tuple(defs)
    satisfy = [expand_defs(f, defs) for f in q.satisfy]
    falsify = [expand_defs(f, defs) for f in q.falsify]
    functions, predicates, constants = _symbols(satisfy + falsify)
    fnames = _ordered(functions, "rev")
    pnames = _ordered(predicates, "Undir")
    scanned = 0
    for n in range(q.min_size, q.max_size + 1):
        constraints = sorted(
            [(f, True) for f in satisfy] + [(f, False) for f in falsify],
            key=lambda c: _cost(c[0], n),
        )
        hit = _search_size(n, fnames, functions, pnames, predicates, constants, constraints)
        if hit is not None:
            m, offset = hit
            witnesses = tuple(falsifying_assignment(f, m) for f in falsify)
            return Found(m, witnesses, scanned + offset)
        scanned += count_interpretations(n, functions, predicates, len(constants))
    return Exhausted((q.min_size, q.max_size), scanned)


def _search_size(n, fnames, functions, pnames, predicates, constants, constraints):
    shapes = [(p, predicates[p]) for p in pnames]
    ncells = sum(n ** a for _, a in shapes)
    if ncells > _MAX_PREDICATE_CELLS:
        raise SizeCapError(f"{ncells} predicate cells at size {n} is beyond exhaustive search")
    ntables = 1 << ncells
    const_combos = list(itertools.product(range(n), repeat=len(constants)))
    per_function = [_function_tables(n, functions[f]) for f in fnames]
    shifts = np.arange(ncells, dtype=np.int64)
    for findex, tables in enumerate(itertools.product(*per_function)):
        funcs = dict(zip(fnames, tables))
        for start in range(0, ntables, _CHUNK):
            codes = np.arange(start, min(start + _CHUNK, ntables), dtype=np.int64)
            bits = ((codes[:, None] >> shifts) & 1).astype(bool)
            batch = {}
            col = 0
            for name, arity in shapes:
                width = n ** arity
                batch[name] = bits[:, col:col + width].reshape((len(codes),) + (n,) * arity)
                col += width
            best = None
            for ci, values in enumerate(const_combos):
                consts = dict(zip(constants, values))
                alive = _filter(n, funcs, batch, consts, constraints, len(codes))
                hits = np.flatnonzero(alive)
                if hits.size and (best is None or hits[0] < best[0]):
                    best = (int(hits[0]), ci)
            if best is not None:
                b, ci = best
                preds = {name: arr[b].copy() for name, arr in batch.items()}
                m = Interpretation(n, funcs, preds, dict(zip(constants, const_combos[ci])))
                offset = ((findex * ntables) + start + b) * len(const_combos) + ci + 1
                return m, offset
    return None


def _filter(n, funcs, batch, consts, constraints, count):
    alive = np.ones(count, dtype=bool)
    for f, wanted in constraints:
        idx = np.flatnonzero(alive)
        if not idx.size:
            break
        sub = {name: arr[idx] for name, arr in batch.items()}
        ev = _Evaluator(n, funcs, sub, consts)
        res = np.broadcast_to(ev.value(f, {}), idx.shape)
        alive[idx] = res if wanted else ~res
    return alive
