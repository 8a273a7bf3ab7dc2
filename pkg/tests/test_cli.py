import json
import subprocess
import sys

import pytest

from softtype.cli import EXIT_OK, EXIT_PIPELINE, EXIT_USAGE, main

from conftest import SAME_TYPE_SOURCE


@pytest.fixture
def add_program(tmp_path):
    path = tmp_path / "add.tl"
    path.write_text(SAME_TYPE_SOURCE)
    return path


def test_infer_writes_annotations_and_report(tmp_path, add_program, toy_model_path, capsys):
    out, rep = tmp_path / "add.out.tl", tmp_path / "r.json"
    code = main(["infer", "--mode", "combined", "--program", str(add_program), "--model", str(toy_model_path),
                 "--out", str(out), "--report", str(rep)])
    assert code == EXIT_OK
    assert out.read_text() == "function addNum(start: number, end: number): number {\n    return start + end;\n}\n"
    doc = json.loads(rep.read_text())
    assert doc["solver"]["converged"] is True
    assert [s["kind"] for s in doc["slots"]] == ["PAR", "PAR", "FUN"]
    assert "addNum: number" in capsys.readouterr().out


@pytest.mark.parametrize("mode", ["logical", "natural", "combined"])
def test_repeated_infer_reports_are_byte_identical(tmp_path, add_program, toy_model_path, mode):
    reports = []
    for i in range(2):
        rep = tmp_path / f"r{i}.json"
        args = ["infer", "--mode", mode, "--program", str(add_program), "--seed", "5", "--report", str(rep)]
        if mode != "logical":
            args += ["--model", str(toy_model_path)]
        assert main(args) == EXIT_OK
        reports.append(rep.read_bytes())
    assert reports[0] == reports[1]


def test_usage_errors_exit_with_one(add_program, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["infer", "--mode", "bogus", "--program", str(add_program)]) == EXIT_USAGE
    assert main(["infer", "--mode", "natural", "--program", str(add_program)]) == EXIT_USAGE
    assert main(["infer", "--mode", "logical", "--program", str(add_program), "--lambda", "-1"]) == EXIT_USAGE
    assert main(["eval", "--dir", ".", "--mode", "combined"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_pipeline_errors_exit_with_two(tmp_path, capsys):
    bad = tmp_path / "bad.tl"
    bad.write_text("function f( {\n")
    assert main(["infer", "--mode", "logical", "--program", str(bad)]) == EXIT_PIPELINE
    assert "bad.tl:1:13" in capsys.readouterr().err
    assert main(["infer", "--mode", "logical", "--program", str(tmp_path / "missing.tl")]) == EXIT_PIPELINE
    assert main(["infer", "--mode", "combined", "--program", str(bad), "--model", str(bad)]) == EXIT_PIPELINE


def test_constrain_writes_dsl_and_sidecar(tmp_path, add_program):
    out = tmp_path / "add.constraints"
    assert main(["constrain", "--program", str(add_program), "--out", str(out)]) == EXIT_OK
    assert "addNum.start is number" in out.read_text()
    assert json.loads((tmp_path / "add.json").read_text())["kinds"] == ["PAR", "PAR", "FUN"]


def test_infer_accepts_a_constraint_file(tmp_path, add_program):
    (tmp_path / "c.txt").write_text("addNum.start is boolean; addNum.end is string; addNum is number;\n")
    rep = tmp_path / "r.json"
    assert main(["infer", "--mode", "logical", "--program", str(add_program), "--constraints", str(tmp_path / "c.txt"),
                 "--report", str(rep)]) == EXIT_OK
    assert json.loads(rep.read_text())["annotations"] == {
        "addNum.start": "boolean", "addNum.end": "string", "addNum": "number"}


def test_gen_corpus_train_and_eval(tmp_path):
    fx = tmp_path / "fx"
    assert main(["gen-corpus", "--seed", "0", "--out", str(fx), "--programs", "4", "--names", "60"]) == EXIT_OK
    assert len(list((fx / "programs").glob("*.tl"))) == 4
    ckpt, train_rep = tmp_path / "m.ckpt", tmp_path / "t.json"
    assert main(["train", "--corpus", str(fx / "names.tsv"), "--out", str(ckpt), "--epochs", "2",
                 "--hidden-dim", "8", "--embed-dim", "8", "--report", str(train_rep)]) == EXIT_OK
    assert len(json.loads(train_rep.read_text())["train_nll"]) == 2
    reports = []
    for i in range(2):
        rep = tmp_path / f"e{i}.json"
        assert main(["eval", "--dir", str(fx / "programs"), "--mode", "combined", "--model", str(ckpt),
                     "--report", str(rep)]) == EXIT_OK
        reports.append(rep.read_bytes())
    assert reports[0] == reports[1]
    assert json.loads(reports[0])["files"] == 4


def test_gen_corpus_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert main(["gen-corpus", "--seed", "3", "--out", str(tmp_path / d), "--programs", "5"]) == EXIT_OK
    for f in sorted((tmp_path / "a").rglob("*.*")):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_empty_eval_directory(tmp_path):
    rep = tmp_path / "r.json"
    assert main(["eval", "--dir", str(tmp_path), "--mode", "logical", "--report", str(rep)]) == EXIT_OK
    assert json.loads(rep.read_text())["overall"]["evaluated"] == 0


def test_module_entry_point(add_program):
    proc = subprocess.run([sys.executable, "-m", "softtype.cli", "infer", "--mode", "logical",
                           "--program", str(add_program)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "addNum.start:" in proc.stdout
