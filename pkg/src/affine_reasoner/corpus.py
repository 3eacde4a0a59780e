"""The bundled axioms, problems and natural-deduction scripts, and the full reproduction run."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .models import (
    DEFAULT_CAP,
    SearchQuery,
    check_model,
    format_interpretation,
    search,
)
from .nd import (
    CheckReport,
    NDScript,
    ScriptSyntaxError,
    as_lemma,
    check_all,
    load_script,
    parse_script,
    used_axioms,
)
from .prover import ProverConfig, prove_formulas
from .syntax import (
    DEFAULT_DEFS,
    DefinedPredicate,
    Formula,
    FormulaError,
    Iff,
    conj,
    count_predicate,
    free_vars,
    parse_formula,
    print_formula,
)
from .verify import verify_refutation

AXIOM_SOURCE = {
    "I.5": "forall l. ~Undir(l,l)",
    "I.6": "forall l. forall m. forall n. (Undir(l,m) -> Undir(l,n) | Undir(m,n))",
    "I.7": "forall l. forall m. forall n. (Undir(l,m) & Undir(l,rev(m)) -> "
           "Undir(l,n) & Undir(l,rev(n)) | Undir(m,n) & Undir(m,rev(n)))",
    "I.8": "forall l. forall m. (Undir(l,m) | Undir(l,rev(m)))",
    "SYM": "forall l. forall m. (Undir(l,rev(m)) -> Undir(m,rev(l)))",
    "w1": "forall l. forall m. forall n. (Undir(l,m) & Undir(l,rev(m)) -> Undir(l,n) | Undir(m,n))",
    "w2": "forall l. forall m. forall n. (Undir(l,m) & Undir(l,rev(m)) -> Undir(l,n) | Undir(m,rev(n)))",
    "w3": "forall l. forall m. forall n. (Undir(l,m) & Undir(l,rev(m)) -> Undir(l,rev(n)) | Undir(m,n))",
    "w4": "forall l. forall m. forall n. (Undir(l,m) & Undir(l,rev(m)) -> Undir(l,rev(n)) | Undir(m,rev(n)))",
}

PROVE = "prove"
MODEL_SEARCH = "model-search"
CHECK_SCRIPT = "check-script"
OUTCOMES = {
    PROVE: ("Refutation", "Saturated", "ResourceOut"),
    MODEL_SEARCH: ("Found", "Exhausted"),
}
CROSS_SIZES = (1, 3)


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    name: str
    kind: str
    axioms: tuple[tuple[str, Formula], ...]
    expect: str
    goal: Formula | None = None
    satisfy: tuple[str, ...] = ()
    falsify: tuple[str, ...] = ()
    sizes: tuple[int, int] = (1, DEFAULT_CAP)
    logic: str = "classical"

    def __post_init__(self):
        if self.kind not in OUTCOMES:
            raise ProblemError(f"{self.name}: unknown kind {self.kind!r}")
        if self.expect not in OUTCOMES[self.kind]:
            raise ProblemError(f"{self.name}: {self.expect!r} is not an outcome of {self.kind}")
        names = [n for n, _ in self.axioms]
        if len(set(names)) != len(names):
            raise ProblemError(f"{self.name}: duplicate axiom name")
        for n, f in self.axioms:
            if free_vars(f):
                raise ProblemError(f"{self.name}: axiom {n} is not closed")
        if self.kind == PROVE:
            if self.goal is None:
                raise ProblemError(f"{self.name}: prove problem without a goal")
            if free_vars(self.goal):
                raise ProblemError(f"{self.name}: goal is not closed")
        else:
            missing = set(self.satisfy + self.falsify) - set(names)
            if missing:
                raise ProblemError(f"{self.name}: unknown formula(s) {sorted(missing)}")

    @property
    def axiom_map(self) -> dict[str, Formula]:
        return dict(self.axioms)

    def query(self, sizes: tuple[int, int] | None = None, cap: int = DEFAULT_CAP) -> SearchQuery:
        lo, hi = sizes or self.sizes
        table = self.axiom_map
        return SearchQuery(tuple(table[n] for n in self.satisfy), tuple(table[n] for n in self.falsify),
                           lo, hi, max(cap, hi))


@dataclass
class Registry:
    axioms: dict[str, Formula]
    definitions: tuple[DefinedPredicate, ...]
    problems: dict[str, Problem]
    scripts: dict[str, NDScript]
    errors: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        clash = set(self.problems) & set(self.scripts)
        if clash:
            raise ProblemError(f"names used twice: {sorted(clash)}")
        for p in self.problems.values():
            for name, f in p.axioms:
                if self.axioms.get(name) != f:
                    raise ProblemError(f"{p.name}: {name} is not a registered axiom")
        for s in self.scripts.values():
            if s.problem not in self.problems:
                raise ProblemError(f"{s.name}: unknown problem {s.problem}")

    def script_axioms(self) -> dict[str, dict[str, Formula]]:
        return {name: p.axiom_map for name, p in self.problems.items()}


def axiom(name: str) -> Formula:
    return parse_formula(AXIOM_SOURCE[name])


def _prove(name, axioms, goal, logic="classical"):
    return Problem(name, PROVE, tuple((a, axiom(a)) for a in axioms), "Refutation", goal, logic=logic)


def _model(name, satisfy, falsify, sizes):
    names = tuple(satisfy) + tuple(falsify)
    return Problem(name, MODEL_SEARCH, tuple((a, axiom(a)) for a in names), "Found",
                   satisfy=tuple(satisfy), falsify=tuple(falsify), sizes=sizes)


def builtin_problems() -> dict[str, Problem]:
    w = conj(axiom(f"w{i}") for i in range(1, 5))
    symmetry = parse_formula("forall l. forall m. (Undir(l,m) -> Undir(m,l))")
    problems = [
        _prove("G0", ["I.5", "I.6"], symmetry, "constructive"),
        _prove("G1", ["I.6"], axiom("w1"), "constructive"),
        _prove("G2", ["I.6"], axiom("w4"), "constructive"),
        _prove("G3", ["I.5", "I.6", "SYM"], axiom("w2"), "constructive"),
        _prove("G4", ["I.5", "I.6", "SYM"], axiom("w3"), "constructive"),
        _prove("G5", ["I.5", "I.6", "SYM"], axiom("I.7"), "constructive"),
        _prove("G6", ["I.5", "I.6", "I.8", "w2"], axiom("SYM"), "constructive"),
        _prove("G7", ["I.5", "I.6", "I.7", "I.8"], axiom("SYM")),
        _prove("G8", [], Iff(axiom("I.7"), w)),
        _model("M1", ["I.5", "I.6", "I.7", "I.8", "SYM"], [], (1, 4)),
        _model("M2", ["I.5"], ["I.6"], (1, 4)),
        _model("M3", ["I.5", "I.6", "I.8"], ["SYM"], (1, 3)),
    ]
    return {p.name: p for p in problems}


def extra_problems() -> dict[str, Problem]:
    """Problems shipped as files for the command line but kept out of the reproduction run."""
    p = Problem("I5-implies-I6", PROVE, (("I.5", axiom("I.5")),), "Saturated", axiom("I.6"))
    return {p.name: p}


def builtin_scripts() -> dict[str, NDScript]:
    out = {}
    for entry in sorted(resources.files(__package__).joinpath("data").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".nd"):
            s = parse_script(entry.read_text(encoding="utf-8"))
            out[s.name] = s
    return out


def load_corpus(directory: str | Path | None = None) -> Registry:
    """The built-in registry, with ``*.p`` and ``*.nd`` files from ``directory`` overriding by name.

    Unreadable files do not abort loading; they are kept in ``Registry.errors``
    and reported as failed rows by :func:`run_all`.
    """
    axioms = {n: axiom(n) for n in AXIOM_SOURCE}
    problems = builtin_problems()
    scripts = builtin_scripts()
    errors: dict[str, str] = {}
    if directory is not None:
        for path in sorted(Path(directory).iterdir()):
            try:
                if path.suffix == ".p":
                    p = load_problem(path)
                    if p.name in problems or p.name not in extra_problems():
                        problems[p.name] = p
                elif path.suffix == ".nd":
                    s = load_script(path)
                    scripts[s.name] = s
            except (ProblemError, ScriptSyntaxError, FormulaError, OSError) as e:
                errors[path.stem] = str(e)
                problems.pop(path.stem, None)
                scripts.pop(path.stem, None)
    reg = Registry(axioms, tuple(DEFAULT_DEFS), problems, scripts, errors)
    reg.validate()
    return reg


# ---------------------------------------------------------------------------
# Problem files


def parse_problem(text: str) -> Problem:
    fields: dict[str, object] = {"axioms": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        try:
            if key == "axiom":
                name, sep, body = value.partition(":")
                if not sep:
                    raise ProblemError("expected 'axiom <name>: <formula>'")
                fields["axioms"].append((name.strip(), parse_formula(body)))
            elif key == "goal":
                fields["goal"] = parse_formula(value)
            elif key in ("satisfy", "falsify"):
                fields[key] = tuple(x.strip() for x in value.split(",") if x.strip())
            elif key == "sizes":
                fields["sizes"] = parse_sizes(value)
            elif key in ("problem", "kind", "expect", "logic"):
                fields[key] = value
            else:
                raise ProblemError(f"unknown keyword {key!r}")
        except (FormulaError, ValueError) as e:
            raise ProblemError(f"line {lineno}: {e}") from e
    for key in ("problem", "kind", "expect"):
        if key not in fields:
            raise ProblemError(f"missing '{key}' line")
    name = fields.pop("problem")
    axioms = tuple(fields.pop("axioms"))
    return Problem(name=name, axioms=axioms, **fields)


def parse_sizes(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        lo_i = int(lo)
        hi_i = int(hi) if sep else lo_i
    except ValueError:
        raise ProblemError(f"bad size range {text!r}") from None
    if lo_i < 1 or hi_i < lo_i:
        raise ProblemError(f"bad size range {text!r}")
    return lo_i, hi_i


def load_problem(path: str | Path) -> Problem:
    return parse_problem(Path(path).read_text(encoding="utf-8"))


def format_problem(p: Problem) -> str:
    lines = [f"problem {p.name}", f"kind {p.kind}"]
    if p.logic != "classical":
        lines.append(f"logic {p.logic}")
    lines += [f"axiom {n}: {print_formula(f)}" for n, f in p.axioms]
    if p.kind == PROVE:
        lines.append(f"goal {print_formula(p.goal)}")
    else:
        if p.satisfy:
            lines.append(f"satisfy {','.join(p.satisfy)}")
        if p.falsify:
            lines.append(f"falsify {','.join(p.falsify)}")
        lines.append(f"sizes {p.sizes[0]}..{p.sizes[1]}")
    lines.append(f"expect {p.expect}")
    return "\n".join(lines) + "\n"


def dump_corpus(directory: str | Path) -> list[Path]:
    """Write every built-in problem and script to ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for p in {**builtin_problems(), **extra_problems()}.values():
        path = directory / f"{p.name}.p"
        path.write_text(format_problem(p), encoding="utf-8")
        written.append(path)
    for entry in resources.files(__package__).joinpath("data").iterdir():
        if entry.name.endswith(".nd"):
            path = directory / entry.name
            path.write_text(entry.read_text(encoding="utf-8"), encoding="utf-8")
            written.append(path)
    return sorted(written)


# ---------------------------------------------------------------------------
# Cross-checks


@dataclass(frozen=True)
class CrossCheck:
    """Prover verdict against a countermodel search over small sizes."""

    prover: str
    search: str
    sizes: tuple[int, int]
    scanned: int
    countermodel: str | None = None

    @property
    def consistent(self) -> bool:
        return not (self.prover == "Refutation" and self.search == "Found")

    def to_dict(self) -> dict:
        return {"prover": self.prover, "search": self.search, "sizes": list(self.sizes),
                "scanned": self.scanned, "countermodel": self.countermodel,
                "consistent": self.consistent}


def cross_check(p: Problem, prover_outcome: str, sizes: tuple[int, int] = CROSS_SIZES) -> CrossCheck:
    if p.kind != PROVE:
        raise ProblemError(f"{p.name} is not a prove problem")
    q = SearchQuery(tuple(f for _, f in p.axioms), (p.goal,), sizes[0], sizes[1], max(DEFAULT_CAP, sizes[1]))
    r = search(q)
    model = format_interpretation(r.interpretation) if r.outcome == "Found" else None
    return CrossCheck(prover_outcome, r.outcome, sizes, r.scanned, model)


def occurrence_statistic(registry: Registry | None = None, pred: str = "Undir") -> dict[str, int]:
    table = registry.axioms if registry is not None else {n: axiom(n) for n in AXIOM_SOURCE}
    return {name: count_predicate(table[name], pred) for name in ("SYM", "I.7")}


# ---------------------------------------------------------------------------
# The reproduction run


@dataclass
class Row:
    name: str
    kind: str
    expected: str
    outcome: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class CorpusReport:
    rows: list[Row]
    redundancy: dict[str, list[str]]
    occurrences: dict[str, int]
    kernel_agreement: dict[str, str]
    config: dict

    @property
    def redundancy_ok(self) -> bool:
        return all(self.redundancy.get(s) == ["I.6"] for s in ("S4", "S5"))

    @property
    def occurrences_ok(self) -> bool:
        return self.occurrences == {"SYM": 2, "I.7": 6}

    @property
    def agreement_ok(self) -> bool:
        return all(v == "Refutation" for v in self.kernel_agreement.values())

    def row(self, name: str) -> Row:
        return next(r for r in self.rows if r.name == name)

    @property
    def equivalence(self) -> bool:
        names = {r.name: r.passed for r in self.rows}
        return names.get("G5", False) and names.get("G7", False)

    @property
    def passed(self) -> bool:
        return (all(r.passed for r in self.rows) and self.redundancy_ok and self.occurrences_ok
                and self.agreement_ok)


def _run_prove(p: Problem, cfg: ProverConfig, cross_sizes: tuple[int, int]) -> tuple[str, Row]:
    start = time.perf_counter()
    r = prove_formulas(p.axioms, p.goal, cfg)
    verified = all(verify_refutation(pr) for pr in r.proofs)
    detail = {
        "generated": r.generated,
        "kept": r.kept,
        "parts": len(r.parts),
        "proof_clauses": sum(len(pr.clauses) for pr in r.proofs),
        "used_axioms": sorted({a for pr in r.proofs for a in pr.used_axioms} - {"negated_goal"}),
        "verified": verified,
    }
    cc = cross_check(p, r.outcome, cross_sizes)
    detail["cross_check"] = cc.to_dict()
    ok = r.outcome == p.expect and cc.consistent and (verified or not r.refuted)
    return p.name, Row(p.name, p.kind, p.expect, r.outcome, ok, detail, time.perf_counter() - start)


def _run_model(p: Problem) -> tuple[str, Row]:
    start = time.perf_counter()
    r = search(p.query())
    detail = {"sizes": list(p.sizes), "scanned": r.scanned}
    ok = r.outcome == p.expect
    if r.outcome == "Found":
        checks = check_model(r.interpretation, [(n, f) for n, f in p.axioms])
        want = {n: n in p.satisfy for n, _ in p.axioms}
        reverified = all(c.holds == want[c.name] for c in checks)
        detail.update(size=r.size, model=format_interpretation(r.interpretation), reverified=reverified)
        ok = ok and reverified
    return p.name, Row(p.name, p.kind, p.expect, r.outcome, ok, detail, time.perf_counter() - start)


def _run_sequent(key: str, axioms, goal, cfg: ProverConfig) -> tuple[str, Row]:
    start = time.perf_counter()
    r = prove_formulas(axioms, goal, cfg)
    return key, Row(key, PROVE, "Refutation", r.outcome, r.refuted, {"generated": r.generated},
                    time.perf_counter() - start)


def _task(args):
    kind, payload = args[0], args[1:]
    if kind == PROVE:
        return _run_prove(*payload)
    if kind == MODEL_SEARCH:
        return _run_model(*payload)
    return _run_sequent(*payload)


def run_all(registry: Registry | None = None, cfg: ProverConfig = ProverConfig(), jobs: int = 1,
            cross_sizes: tuple[int, int] = CROSS_SIZES) -> CorpusReport:
    """Run every problem and script; results are ordered by name whatever ``jobs`` is."""
    registry = registry or load_corpus()
    problems = registry.problems
    tasks = []
    for p in problems.values():
        if p.kind == PROVE:
            tasks.append((PROVE, p, cfg, cross_sizes))
        else:
            tasks.append((MODEL_SEARCH, p))

    axioms_by_problem = registry.script_axioms()
    reports: dict[str, CheckReport] = check_all(registry.scripts, axioms_by_problem)
    # sequents certified by a script but not identical to a prove problem get their own prover run
    for name, s in registry.scripts.items():
        p = problems.get(s.problem)
        if reports[name].ok and p is not None and not (p.kind == PROVE and p.goal == s.goal):
            tasks.append(("sequent", f"{name}:sequent", p.axioms, s.goal, cfg))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_task, tasks))
    else:
        results = dict(map(_task, tasks))

    rows = [results[p.name] for p in problems.values()]
    lemmas = {}
    agreement = {}
    redundancy = {}
    for name in sorted(registry.scripts, key=_script_order(registry.scripts)):
        s = registry.scripts[name]
        rep = reports[name]
        detail: dict = {"problem": s.problem, "steps": len(s.steps)}
        if rep.ok:
            axioms = axioms_by_problem[s.problem]
            lemmas[name] = as_lemma(s, axioms, lemmas)
            direct = sorted(used_axioms(s, lemmas))
            detail["used_axioms"] = sorted(used_axioms(s, lemmas, transitive=True))
            if s.uses:
                detail["lemmas"] = list(s.uses)
            redundancy[name] = direct if not s.uses else detail["used_axioms"]
            key = f"{name}:sequent" if f"{name}:sequent" in results else s.problem
            agreement[name] = results[key].outcome
            detail["prover"] = agreement[name]
        else:
            detail.update(step=rep.step, reason=rep.reason, message=rep.message)
        rows.append(Row(name, CHECK_SCRIPT, "ScriptOk", "ScriptOk" if rep.ok else "Rejected", rep.ok, detail))
    for name, message in registry.errors.items():
        rows.append(Row(name, "input", "-", "InputError", False, {"message": message}))
    rows.sort(key=lambda r: r.name)

    config = {
        "max_generated_clauses": cfg.max_generated_clauses,
        "timeout_seconds": cfg.timeout_seconds,
        "pick_ratio": list(cfg.pick_ratio),
        "subsumption": cfg.subsumption,
        "split_goal": cfg.split_goal,
        "cross_check_sizes": list(cross_sizes),
    }
    return CorpusReport(rows, {k: redundancy[k] for k in sorted(redundancy)},
                        occurrence_statistic(registry), dict(sorted(agreement.items())), config)


def _script_order(scripts: Mapping[str, NDScript]):
    """Sort key putting lemmas before the scripts that use them."""
    depth: dict[str, int] = {}

    def d(name: str, seen: tuple = ()) -> int:
        if name in depth:
            return depth[name]
        if name in seen or name not in scripts:
            return 0
        depth[name] = 1 + max((d(u, seen + (name,)) for u in scripts[name].uses), default=0)
        return depth[name]

    return lambda name: (d(name), name)


# ---------------------------------------------------------------------------
# Rendering


def report_to_dict(report: CorpusReport, timings: bool = False) -> dict:
    rows = []
    for r in report.rows:
        row = {"name": r.name, "kind": r.kind, "expected": r.expected, "outcome": r.outcome,
               "verdict": "PASS" if r.passed else "FAIL", "detail": r.detail}
        if timings:
            row["seconds"] = round(r.seconds, 3)
        rows.append(row)
    return {
        "config": report.config,
        "rows": rows,
        "redundancy": {"used_axioms": report.redundancy, "verdict": _verdict(report.redundancy_ok)},
        "occurrences": {"predicate": "Undir", "counts": report.occurrences,
                        "verdict": _verdict(report.occurrences_ok)},
        "kernel_vs_prover": {"outcomes": report.kernel_agreement, "verdict": _verdict(report.agreement_ok)},
        "equivalence": {"left": ["I.5", "I.6", "I.8", "SYM"], "right": ["I.5", "I.6", "I.7", "I.8"],
                        "witnesses": ["G5", "G7"], "verdict": _verdict(report.equivalence)},
        "verdict": _verdict(report.passed),
    }


def report_to_json(report: CorpusReport, timings: bool = False) -> str:
    return json.dumps(report_to_dict(report, timings), indent=2, sort_keys=True) + "\n"


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _notes(r: Row) -> str:
    d = r.detail
    if r.kind == PROVE:
        cc = d["cross_check"]
        lo, hi = cc["sizes"]
        text = f"generated={d['generated']} kept={d['kept']}"
        if d["parts"] > 1:
            text += f" parts={d['parts']}"
        if r.outcome == "Refutation":
            text += " verified" if d["verified"] else " UNVERIFIED"
        return text + f" countermodels({lo}..{hi})={cc['search']}"
    if r.kind == MODEL_SEARCH:
        if r.outcome == "Found":
            return f"size={d['size']} scanned={d['scanned']}" + (" reverified" if d["reverified"] else " NOT-REVERIFIED")
        return f"scanned={d['scanned']}"
    if r.kind == CHECK_SCRIPT:
        if r.passed:
            text = f"problem={d['problem']} axioms={{{', '.join(d['used_axioms'])}}} prover={d['prover']}"
            if "lemmas" in d:
                text += f" lemmas={','.join(d['lemmas'])}"
            return text
        where = f" step {d['step']}" if d.get("step") is not None else ""
        return f"{d['reason']}{where}: {d['message']}"
    return d.get("message", "")


def report_to_text(report: CorpusReport, timings: bool = False) -> str:
    header = ["name", "kind", "expected", "outcome", "verdict", "notes"]
    table = [header]
    for r in report.rows:
        notes = _notes(r)
        if timings:
            notes += f" time={r.seconds:.2f}s"
        table.append([r.name, r.kind, r.expected, r.outcome, _verdict(r.passed), notes])
    widths = [max(len(row[k]) for row in table) for k in range(len(header) - 1)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) + "  " + row[-1] for row in table]
    lines = [line.rstrip() for line in lines]
    lines.append("")
    red = "; ".join(f"{k} uses {{{', '.join(v)}}}" for k, v in report.redundancy.items() if k in ("S4", "S5"))
    lines.append(f"redundancy: {red}  {_verdict(report.redundancy_ok)}")
    occ = ", ".join(f"{k} {v}" for k, v in report.occurrences.items())
    lines.append(f"occurrences of Undir: {occ}  {_verdict(report.occurrences_ok)}")
    lines.append(f"kernel-certified sequents re-proved by resolution: {_verdict(report.agreement_ok)}")
    lines.append(f"equivalence {{I.5, I.6, I.8, SYM}} <-> {{I.5, I.6, I.7, I.8}} (G5, G7): "
                 f"{_verdict(report.equivalence)}")
    lines.append(f"overall: {_verdict(report.passed)}")
    return "\n".join(lines) + "\n"
