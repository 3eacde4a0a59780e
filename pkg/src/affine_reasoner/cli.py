"""Command line: ``prove``, ``check``, ``models`` and ``corpus``.

Exit status 0 means the expected good outcome (refutation, accepted script,
model found, every corpus row passing), 1 the other outcome, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .corpus import (
    PROVE,
    ProblemError,
    load_corpus,
    load_problem,
    parse_sizes,
    report_to_json,
    report_to_text,
    run_all,
)
from .models import DEFAULT_CAP, SearchQuery, SizeCapError, format_interpretation, search
from .nd import ScriptSyntaxError, check_all, load_script
from .prover import ProverConfig, format_proof, proof_to_dict, prove_formulas
from .syntax import FormulaError, parse_formula, print_formula
from .verify import verify_refutation

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _pick_ratio(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AGE:WEIGHT, got {text!r}") from None
    return a, b


def _sizes(text: str) -> tuple[int, int]:
    try:
        return parse_sizes(text)
    except ProblemError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _prover_flags(p: argparse.ArgumentParser) -> None:
    d = ProverConfig()
    p.add_argument("--timeout", type=float, default=d.timeout_seconds, help="seconds per goal (default %(default)s)")
    p.add_argument("--max-clauses", type=int, default=d.max_generated_clauses,
                   help="generated-clause budget (default %(default)s)")
    p.add_argument("--pick-ratio", type=_pick_ratio, default=d.pick_ratio,
                   help="age:weight given-clause selection ratio (default 1:4)")
    p.add_argument("--no-subsumption", action="store_true", help="turn off subsumption deletion")
    p.add_argument("--no-split", action="store_true", help="prove the goal as one refutation")


def _format_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", dest="json", action="store_true", help="structured output")
    g.add_argument("--text", dest="json", action="store_false", help="plain text output (default)")
    p.add_argument("--timings", action="store_true", help="include wall-clock times (output no longer reproducible)")


def _config(args) -> ProverConfig:
    try:
        return ProverConfig(args.max_clauses, args.timeout, tuple(args.pick_ratio),
                            not args.no_subsumption, not args.no_split)
    except ValueError as e:
        raise InputError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affine-reasoner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="refute the negated goal of a problem file")
    p.add_argument("problem", help="problem file (kind prove)")
    _prover_flags(p)
    _format_flags(p)

    c = sub.add_parser("check", help="check a natural-deduction script")
    c.add_argument("script", help="script file")
    c.add_argument("--corpus-dir", help="directory with problem and lemma files (default: next to the script)")
    _format_flags(c)

    m = sub.add_parser("models", help="search finite interpretations")
    m.add_argument("--satisfy", default="", help="comma-separated axiom names that must hold")
    m.add_argument("--falsify", default="", help="comma-separated axiom names that must fail")
    m.add_argument("--satisfy-formula", action="append", default=[], metavar="FORMULA",
                   help="closed formula that must hold (repeatable)")
    m.add_argument("--falsify-formula", action="append", default=[], metavar="FORMULA",
                   help="closed formula that must fail (repeatable)")
    m.add_argument("--sizes", type=_sizes, default=(1, DEFAULT_CAP), help="domain sizes a..b (default 1..4)")
    m.add_argument("--limit", type=int, default=DEFAULT_CAP, help="largest domain size allowed (default %(default)s)")
    _format_flags(m)

    r = sub.add_parser("corpus", help="run the whole reproduction corpus")
    r.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    r.add_argument("--corpus-dir", help="directory whose problem and script files override the built-ins")
    _prover_flags(r)
    _format_flags(r)
    return parser


def _emit(out, args, payload: dict, text: str) -> None:
    if args.json:
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        out.write(text if text.endswith("\n") else text + "\n")


def cmd_prove(args, out, err) -> int:
    try:
        problem = load_problem(args.problem)
    except OSError as e:
        raise InputError(f"cannot read {args.problem}: {e.strerror}") from None
    except ProblemError as e:
        raise InputError(f"{args.problem}: {e}") from None
    if problem.kind != PROVE:
        raise InputError(f"{problem.name} is a {problem.kind} problem")
    cfg = _config(args)
    r = prove_formulas(problem.axioms, problem.goal, cfg)
    verified = all(verify_refutation(p) for p in r.proofs)
    parts = []
    lines = [f"problem {problem.name}", f"outcome {r.outcome}",
             f"generated {r.generated}", f"kept {r.kept}"]
    if args.timings:
        lines.append(f"seconds {r.seconds:.3f}")
    for k, (goal, res) in enumerate(r.parts, 1):
        part = {"goal": print_formula(goal), "outcome": res.outcome,
                "generated": res.generated, "kept": res.kept}
        if res.proof is not None:
            part["proof"] = proof_to_dict(res.proof)
            if len(r.parts) > 1:
                lines.append(f"part {k}: {print_formula(goal)}")
            lines.append(format_proof(res.proof))
        parts.append(part)
    if r.refuted:
        lines.append("proof verified" if verified else "proof FAILED verification")
    payload = {"problem": problem.name, "outcome": r.outcome, "generated": r.generated, "kept": r.kept,
               "verified": verified if r.refuted else None, "parts": parts}
    if args.timings:
        payload["seconds"] = round(r.seconds, 3)
    _emit(out, args, payload, "\n".join(lines))
    return OK if r.refuted and verified else NEGATIVE


def cmd_check(args, out, err) -> int:
    path = Path(args.script)
    try:
        script = load_script(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except ScriptSyntaxError as e:
        raise InputError(f"{path}: {e}") from None
    directory = Path(args.corpus_dir) if args.corpus_dir else path.parent
    registry = load_corpus()
    problems = registry.problems
    scripts = dict(registry.scripts)
    try:
        candidate = directory / f"{script.problem}.p"
        if candidate.exists():
            problems = {**problems, script.problem: load_problem(candidate)}
        pending, visited = list(script.uses), {script.name}
        while pending:
            name = pending.pop()
            if name in visited:
                continue
            visited.add(name)
            sibling = directory / f"{name}.nd"
            if sibling.exists():
                scripts[name] = load_script(sibling)
            if name in scripts:
                pending += list(scripts[name].uses)
    except (OSError, ProblemError, ScriptSyntaxError) as e:
        raise InputError(str(e)) from None
    if script.problem not in problems:
        raise InputError(f"{path}: unknown problem {script.problem}")
    scripts[script.name] = script
    needed = _closure(script.name, scripts)
    reports = check_all({n: scripts[n] for n in needed if n in scripts},
                        {n: p.axiom_map for n, p in problems.items()})
    rep = reports[script.name]
    payload = {"script": script.name, "problem": script.problem, "ok": rep.ok,
               "step": rep.step, "reason": rep.reason, "message": rep.message}
    _emit(out, args, payload, str(rep))
    return OK if rep.ok else NEGATIVE


def _closure(name, scripts) -> set[str]:
    seen: set[str] = set()
    stack = [name]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if n in scripts:
            stack += list(scripts[n].uses)
    return seen


def cmd_models(args, out, err) -> int:
    axioms = load_corpus().axioms

    def resolve(names: str, formulas: list[str]):
        out = []
        for name in filter(None, (x.strip() for x in names.split(","))):
            if name not in axioms:
                raise InputError(f"unknown axiom {name!r} (known: {', '.join(axioms)})")
            out.append((name, axioms[name]))
        for text in formulas:
            try:
                out.append((text, parse_formula(text)))
            except FormulaError as e:
                raise InputError(f"{text!r}: {e}") from None
        return out

    if args.limit > DEFAULT_CAP:
        err.write(f"warning: sizes above {DEFAULT_CAP} can take very long (cap raised to {args.limit})\n")
    satisfy = resolve(args.satisfy, args.satisfy_formula)
    falsify = resolve(args.falsify, args.falsify_formula)
    try:
        q = SearchQuery(tuple(f for _, f in satisfy), tuple(f for _, f in falsify),
                        args.sizes[0], args.sizes[1], args.limit)
    except (SizeCapError, ValueError) as e:
        raise InputError(str(e)) from None
    r = search(q)
    lo, hi = args.sizes
    payload = {"satisfy": [n for n, _ in satisfy], "falsify": [n for n, _ in falsify],
               "sizes": [lo, hi], "outcome": r.outcome, "scanned": r.scanned}
    lines = [f"outcome {r.outcome}", f"scanned {r.scanned}"]
    if r.outcome == "Found":
        model = format_interpretation(r.interpretation)
        payload["model"] = model
        payload["witnesses"] = {n: w for (n, _), w in zip(falsify, r.witnesses)}
        lines.append(model.rstrip("\n"))
        for (n, _), w in zip(falsify, r.witnesses):
            env = " ".join(f"{k}={v}" for k, v in w.items())
            lines.append(f"fails {n} at {env}")
    else:
        lines.append(f"no interpretation of size {lo}..{hi}")
    _emit(out, args, payload, "\n".join(lines))
    return OK if r.outcome == "Found" else NEGATIVE


def cmd_corpus(args, out, err) -> int:
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")
    try:
        registry = load_corpus(args.corpus_dir)
    except (OSError, ProblemError) as e:
        raise InputError(str(e)) from None
    report = run_all(registry, _config(args), jobs=args.jobs)
    if args.json:
        out.write(report_to_json(report, args.timings))
    else:
        out.write(report_to_text(report, args.timings))
    return OK if report.passed else NEGATIVE


COMMANDS = {"prove": cmd_prove, "check": cmd_check, "models": cmd_models, "corpus": cmd_corpus}


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return INPUT_ERROR if e.code else OK
    try:
        return COMMANDS[args.command](args, out, err)
    except InputError as e:
        err.write(f"error: {e}\n")
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
