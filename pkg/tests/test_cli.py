import json
import re
import subprocess
import sys

import pytest

from voiceind.cli import main


@pytest.fixture
def pop(tmp_path):
    path = tmp_path / "pop.txt"
    assert main(["gen-population", "--speakers", "8", "--dim", "6", "--seed", "1", "--out", str(path)]) == 0
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_distance_pair_and_matrix(capsys, pop):
    code, out, _ = run(capsys, "distance", "--db", pop, "--ids", "spk000-00", "spk000-00")
    assert code == 0 and out == "spk000-00 spk000-00 0\n"
    code, out, _ = run(capsys, "distance", "--db", pop, "--matrix")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 9 and lines[0].startswith("id,spk000-00")


def test_perturb_is_seeded(capsys, pop, tmp_path):
    args = ("perturb", "--db", pop, "--id", "spk003-00", "--epsilon", "2", "--seed", "5")
    first = run(capsys, *args)[1]
    assert run(capsys, *args)[1] == first
    dump = tmp_path / "d.csv"
    run(capsys, *args, "--dump", dump)
    rows = dump.read_text().splitlines()
    assert rows[0] == "candidate_id,distance,probability" and len(rows) == 9


def test_feature_and_model_release_agree(capsys, pop, tmp_path):
    model = tmp_path / "m.bin"
    assert run(capsys, "release", "build-model", "--db", pop, "--epsilon", "1.5", "--out", model)[0] == 0
    feat, mod = tmp_path / "f.txt", tmp_path / "g.txt"
    assert run(capsys, "release", "--db", pop, "--epsilon", "1.5", "--seed", "3", "--out", feat)[0] == 0
    assert run(capsys, "release", "--mode", "model", "--model", model, "--seed", "3", "--out", mod)[0] == 0
    assert feat.read_bytes() == mod.read_bytes()


def test_release_provenance_and_content(capsys, pop, tmp_path):
    prov, content = tmp_path / "p.csv", tmp_path / "c.txt"
    code, out, _ = run(capsys, "release", "--db", pop, "--epsilon", "1", "--provenance", prov, "--content-out", content)
    assert code == 0 and out.startswith("#voiceprints n=8 dim=6")
    assert prov.read_text().splitlines()[0] == "utterance_id,candidate_id,probability"
    assert len(content.read_text().splitlines()) == 8
    code, _, err = run(capsys, "release", "--db", pop, "--epsilon", "1", "--strip-provenance", "--provenance", prov)
    assert code == 2 and err.count("\n") == 1


def test_model_epsilon_mismatch(capsys, pop, tmp_path):
    model = tmp_path / "m.bin"
    run(capsys, "release", "build-model", "--db", pop, "--epsilon", "1", "--out", model)
    code, _, err = run(capsys, "release", "--mode", "model", "--model", model, "--epsilon", "2")
    assert code == 2 and "disagrees" in err


def test_audit_json_and_prior(capsys, pop, tmp_path):
    report = tmp_path / "a.json"
    code, out, _ = run(capsys, "audit", "--db", pop, "--epsilon", "1", "--prior", "uniform", "--json", report)
    assert code == 0 and "factor-2 bound" in out and "posterior" in out
    payload = json.loads(report.read_text())
    assert payload["likelihood"]["passes_factor2_bound"] is True
    assert payload["posterior"]["identity_holds"] is True
    code, _, err = run(capsys, "audit", "--db", pop, "--epsilon", "1", "--cap", "3")
    assert code == 1 and err.startswith("voiceind: error: AuditCapExceeded:")


def test_audit_zero_budget(capsys, pop):
    code, out, _ = run(capsys, "audit", "--db", pop, "--epsilon", "0")
    assert code == 0 and re.search(r"^effective epsilon +0$", out, re.M)


def test_model_mode_needs_model(capsys, pop):
    code, _, err = run(capsys, "release", "--mode", "model")
    assert code == 2 and "--model" in err


def test_audit_cap_env(capsys, pop, monkeypatch):
    monkeypatch.setenv("VOICEIND_AUDIT_CAP", "4")
    assert run(capsys, "audit", "--db", pop, "--epsilon", "1")[0] == 1


def test_seed_env(capsys, pop, monkeypatch):
    args = ("perturb", "--db", pop, "--id", "spk000-00", "--epsilon", "0")
    monkeypatch.setenv("VOICEIND_SEED", "77")
    env_out = run(capsys, *args)[1]
    monkeypatch.delenv("VOICEIND_SEED")
    assert run(capsys, *args, "--seed", "77")[1] == env_out


def test_attack(capsys, pop):
    code, out, _ = run(capsys, "attack", "--db", pop, "--released", pop)
    assert code == 0 and "8/8" in out


def test_experiment_csv(capsys, pop):
    code, out, _ = run(
        capsys, "experiment", "--population", pop, "--n", "3,5", "--epsilon", "1,10", "--trials", "2", "--no-timing"
    )
    lines = out.splitlines()
    assert code == 0 and lines[0] == "n,epsilon,trial,mse,attack_acc" and len(lines) == 9


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "5,10", "--dim", "4")
    assert code == 0 and "Model-level online time" in out


@pytest.mark.parametrize(
    "argv, code",
    [
        (["bogus"], 2),
        (["perturb", "--db", "x"], 2),
        (["distance", "--db", "x", "--frobnicate"], 2),
        (["distance", "--db", "/nonexistent/pop.txt", "--matrix"], 1),
        (["audit", "--db", "x", "--epsilon", "1", "--threads", "0"], 2),
    ],
)
def test_errors_are_one_line(capsys, argv, code):
    got, out, err = run(capsys, *argv)
    assert got == code and out == ""
    assert err.startswith("voiceind: error: ") and err.count("\n") == 1


def test_bad_epsilon_and_unknown_id(capsys, pop):
    code, _, err = run(capsys, "perturb", "--db", pop, "--id", "spk000-00", "--epsilon", "-1")
    assert code == 1 and err.count("\n") == 1
    code, _, err = run(capsys, "perturb", "--db", pop, "--id", "nobody", "--epsilon", "1")
    assert code == 1 and "nobody" in err


def test_malformed_embedding_names_line(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("a 1 2\nb 1 nan\n")
    code, _, err = run(capsys, "distance", "--db", bad, "--matrix")
    assert code == 1 and "bad.txt:2:" in err


def test_help_lists_flags():
    res = subprocess.run([sys.executable, "-m", "voiceind", "release", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for flag in ("--mode", "--epsilon", "--seed", "--threads", "--sticky", "build-model"):
        assert flag in res.stdout
