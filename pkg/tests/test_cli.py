import json

import pytest
from click.testing import CliRunner

from wha import fp2, kz2
from wha.cli import main
from wha.io import load, save, to_dict


@pytest.fixture
def run():
    runner = CliRunner()

    def _run(*args):
        return runner.invoke(main, list(args), catch_exceptions=False)

    return _run


@pytest.mark.parametrize("ref", ["builtin:fp2", "builtin:kz2"])
def test_suite_builtins_pass(run, ref):
    r = run("suite", ref)
    assert r.exit_code == 0, r.output
    assert "all stages passed" in r.output


def test_suite_json(run):
    r = run("--json", "suite", "builtin:kz2")
    doc = json.loads(r.output)
    assert doc["ok"] and doc["failed_stage"] is None
    assert doc["stages"][0]["name"] == "load"


def test_suite_corrupted_names_stage(run, tmp_path):
    doc = to_dict(fp2())
    doc["counit"] = [[1.0, 0.0]] * 4
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    r = run("suite", str(p))
    assert r.exit_code == 11
    assert "axioms" in r.output and "FAIL" in r.output


def test_suite_garbage_fails_at_load(run, tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("not json at all")
    r = run("suite", str(p))
    assert r.exit_code == 10
    assert "load" in r.output


@pytest.mark.parametrize("args", [
    ("verify", "builtin:fp2"),
    ("verify", "builtin:fp2/source"),
    ("verify", "builtin:vecz2-fusion"),
    ("info", "builtin:gp2"),
    ("haar", "builtin:fp3"),
    ("corep", "decompose", "builtin:fp2"),
    ("corep", "decompose", "--which", "unit", "builtin:gp2"),
    ("corep", "tensor", "builtin:kz2", "x0", "x1"),
    ("coact", "verify", "builtin:kz2/regular"),
    ("coact", "fixed-points", "builtin:fp2"),
    ("coact", "fixed-points", "--which", "source", "builtin:fp2"),
    ("coact", "spectral", "builtin:fp2"),
    ("coact", "implement", "builtin:kz2"),
    ("recon", "roundtrip", "--trials", "1", "builtin:fp2"),
])
def test_commands_succeed(run, args):
    r = run(*args)
    assert r.exit_code == 0, r.output
    assert r.output.strip()


def test_info_json(run):
    doc = json.loads(run("--json", "info", "builtin:fp2").output)
    assert doc["dim"] == 4 and doc["blocks"] == [1, 1, 1, 1]


def test_verify_detects_bad_counit(run, tmp_path):
    doc = to_dict(fp2())
    doc["counit"] = [[1.0, 0.0]] * 4
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert run("verify", str(p)).exit_code == 1


def test_tolerance_flag(run, tmp_path):
    doc = to_dict(kz2())
    doc["counit"][1] = [1 + 1e-6, 0.0]
    p = tmp_path / "near.json"
    p.write_text(json.dumps(doc))
    assert run("verify", str(p)).exit_code == 1
    assert run("--tol", "1e-3", "verify", str(p)).exit_code == 0


def test_dual_written(run, tmp_path):
    out = tmp_path / "d.json"
    r = run("-o", str(out), "dual", "builtin:fp2")
    assert r.exit_code == 0
    D = load(out)
    assert D.algebra.blocks().dims == [2]


def test_hayashi_build_written(run, tmp_path):
    out = tmp_path / "h.json"
    assert run("-o", str(out), "hayashi", "build", "builtin:vecz2-fusion").exit_code == 0
    G = load(out)
    assert G.dim == 8 and G.is_valid()


def test_output_file_for_reports(run, tmp_path):
    out = tmp_path / "r.json"
    assert run("--json", "-o", str(out), "haar", "builtin:kz2").exit_code == 0
    assert json.loads(out.read_text())


def test_tensor_bad_label(run):
    assert run("corep", "tensor", "builtin:kz2", "x0", "x9").exit_code == 2


def test_input_errors(run, tmp_path):
    assert run("info", "builtin:nope").exit_code == 3
    assert run("info", str(tmp_path / "missing.json")).exit_code == 3


def test_saved_file_accepted(run, tmp_path):
    p = tmp_path / "g.json"
    save(kz2(), p)
    assert run("suite", str(p)).exit_code == 0


def test_usage_error(run):
    assert run("verify").exit_code == 2
