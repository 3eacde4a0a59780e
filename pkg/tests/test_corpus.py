import json
from dataclasses import replace
from pathlib import Path

import pytest

from affine_reasoner.corpus import (
    CHECK_SCRIPT,
    ProblemError,
    Problem,
    axiom,
    builtin_problems,
    builtin_scripts,
    cross_check,
    dump_corpus,
    extra_problems,
    format_problem,
    load_corpus,
    occurrence_statistic,
    parse_problem,
    report_to_dict,
    report_to_json,
    report_to_text,
    run_all,
)
from affine_reasoner.models import check_model, parse_interpretation
from affine_reasoner.prover import ProverConfig
from affine_reasoner.syntax import parse_formula

REPO_CORPUS = Path(__file__).resolve().parent.parent / "corpus"
FAST = ProverConfig(max_generated_clauses=10_000)


@pytest.fixture(scope="module")
def report():
    return run_all(load_corpus())


def test_registry_contents():
    reg = load_corpus()
    assert set(reg.axioms) == {"I.5", "I.6", "I.7", "I.8", "SYM", "w1", "w2", "w3", "w4"}
    assert [d.name for d in reg.definitions] == ["Con"]
    assert sorted(reg.problems) == sorted([f"G{i}" for i in range(9)] + ["M1", "M2", "M3"])
    assert sorted(reg.scripts) == [f"S{i}" for i in range(1, 9)]
    assert not reg.errors


def test_goal_table():
    ps = builtin_problems()
    table = {n: ([a for a, _ in p.axioms], p.goal) for n, p in ps.items() if p.kind == "prove"}
    assert table["G1"] == (["I.6"], axiom("w1"))
    assert table["G2"] == (["I.6"], axiom("w4"))
    assert table["G3"] == (["I.5", "I.6", "SYM"], axiom("w2"))
    assert table["G4"] == (["I.5", "I.6", "SYM"], axiom("w3"))
    assert table["G5"] == (["I.5", "I.6", "SYM"], axiom("I.7"))
    assert table["G6"] == (["I.5", "I.6", "I.8", "w2"], axiom("SYM"))
    assert table["G7"] == (["I.5", "I.6", "I.7", "I.8"], axiom("SYM"))
    assert table["G0"][0] == ["I.5", "I.6"]
    assert table["G0"][1] == parse_formula("forall l. forall m. (Undir(l,m) -> Undir(m,l))")
    assert table["G8"][0] == []
    m1 = ps["M1"]
    assert m1.satisfy == ("I.5", "I.6", "I.7", "I.8", "SYM") and m1.sizes == (1, 4) and m1.expect == "Found"


def test_full_run(report):
    assert len(report.rows) == 20
    assert [r.name for r in report.rows] == sorted(r.name for r in report.rows)
    assert all(r.passed for r in report.rows), [r.name for r in report.rows if not r.passed]
    assert report.redundancy_ok and report.occurrences_ok and report.agreement_ok
    assert report.equivalence and report.passed
    for r in report.rows:
        if r.kind == "prove":
            assert r.detail["cross_check"]["search"] == "Exhausted"


def test_text_and_json_verdicts_agree(report):
    d = json.loads(report_to_json(report))
    text = report_to_text(report)
    lines = {line.split()[0]: line.split()[4] for line in text.splitlines()[1:21]}
    assert lines == {row["name"]: row["verdict"] for row in d["rows"]}
    assert d["verdict"] == "PASS" and text.rstrip().endswith("overall: PASS")
    assert '"seconds"' not in report_to_json(report)
    assert '"seconds"' in json.dumps(report_to_dict(report, timings=True))


def test_repo_corpus_matches_dump(tmp_path):
    dump_corpus(tmp_path)
    ours = sorted(p.name for p in tmp_path.iterdir())
    assert ours == sorted(p.name for p in REPO_CORPUS.iterdir())
    for name in ours:
        assert (tmp_path / name).read_text() == (REPO_CORPUS / name).read_text(), name


def test_loading_repo_corpus_changes_nothing(report):
    again = run_all(load_corpus(REPO_CORPUS))
    assert report_to_json(again) == report_to_json(report)


@pytest.mark.parametrize("name", sorted({**builtin_problems(), **extra_problems()}))
def test_problem_file_round_trip(name):
    p = {**builtin_problems(), **extra_problems()}[name]
    assert parse_problem(format_problem(p)) == p


@pytest.mark.parametrize("text", [
    "kind prove\ngoal Undir(l,l)\nexpect Refutation\n",
    "problem X\nkind prove\ngoal forall l. Undir(l,l)\nexpect Found\n",
    "problem X\nkind prove\ngoal Undir(l,l)\nexpect Refutation\n",
    "problem X\nkind model-search\nsatisfy I.5\nsizes 3..1\nexpect Found\n",
    "problem X\nkind prove\naxiom I.5 forall l. ~Undir(l,l)\ngoal forall l. ~Undir(l,l)\nexpect Refutation\n",
    "problem X\nkind teleport\nexpect Found\n",
])
def test_bad_problem_files(text):
    with pytest.raises(ProblemError):
        parse_problem(text)


def test_cross_check_examples():
    ps = builtin_problems()
    g1 = cross_check(ps["G1"], "Refutation")
    assert g1.search == "Exhausted" and g1.consistent
    sym = Problem("x", "prove", tuple((n, axiom(n)) for n in ("I.5", "I.6", "I.8")), "Saturated", axiom("SYM"))
    cc = cross_check(sym, "Saturated")
    assert cc.search == "Found" and parse_interpretation(cc.countermodel).size == 3
    i6 = extra_problems()["I5-implies-I6"]
    cc = cross_check(i6, "Saturated")
    assert cc.search == "Found" and parse_interpretation(cc.countermodel).size == 2
    assert not cross_check(i6, "Refutation").consistent


def test_g5_without_sym_fails_with_countermodel(tmp_path):
    g5 = builtin_problems()["G5"]
    weak = replace(g5, axioms=tuple(a for a in g5.axioms if a[0] != "SYM"))
    (tmp_path / "G5.p").write_text(format_problem(weak))
    rep = run_all(load_corpus(tmp_path), FAST)
    row = rep.row("G5")
    assert not row.passed and row.outcome in ("Saturated", "ResourceOut")
    model = parse_interpretation(row.detail["cross_check"]["countermodel"])
    assert model.size <= 3
    checks = check_model(model, list(weak.axioms) + [("I.7", weak.goal)])
    assert [c.holds for c in checks] == [True, True, False]
    assert not rep.equivalence and not rep.passed
    assert all(r.passed for r in rep.rows if r.name not in ("G5", "S8"))


def test_corrupted_script_is_isolated(tmp_path, report):
    text = (REPO_CORPUS / "S2.nd").read_text()
    (tmp_path / "S2.nd").write_text(text.replace("ImpElim premises=[", "ImpElim premises=[9", 1))
    rep = run_all(load_corpus(tmp_path))
    failed = {r.name for r in rep.rows if not r.passed}
    assert failed == {"S2", "S8"}
    assert rep.row("S8").detail["message"] == "lemma S2 was rejected"
    for r in rep.rows:
        if r.name not in failed:
            assert report_to_dict(replace(rep, rows=[r]))["rows"] == report_to_dict(replace(report, rows=[report.row(r.name)]))["rows"]


def test_unparseable_file_becomes_failed_row(tmp_path):
    (tmp_path / "S7.nd").write_text("script S7\nthis is not a script\n")
    rep = run_all(load_corpus(tmp_path), FAST)
    row = rep.row("S7")
    assert row.kind == "input" and not row.passed
    assert sum(r.passed for r in rep.rows) == 19


def test_occurrence_statistic():
    assert occurrence_statistic() == {"SYM": 2, "I.7": 6}
    changed = load_corpus()
    changed.axioms["SYM"] = parse_formula("forall l. forall m. (Undir(l,rev(m)) -> Undir(m,rev(l)) & Undir(l,l))")
    assert occurrence_statistic(changed)["SYM"] == 3


def test_redundancy(report):
    assert report.redundancy["S4"] == report.redundancy["S5"] == ["I.6"]
    assert report.redundancy["S1"] == ["I.5", "I.6", "SYM"]
    assert report.row("S8").detail["used_axioms"] == ["I.5", "I.6", "SYM"]


def test_script_rows_reference_their_problem():
    scripts = builtin_scripts()
    ps = builtin_problems()
    assert {s.problem for s in scripts.values()} <= set(ps)
    assert all(ps[s.problem].kind == "prove" for s in scripts.values())
    assert CHECK_SCRIPT == "check-script"
