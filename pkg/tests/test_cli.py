import json

import pytest

from setchase.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main


def test_dk_table(capsys):
    assert main(["dk-table", "--kmax", "3"]) == EXIT_OK
    rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert rows[1]["D_k"] == 9.0


def test_verify_constants_suite(capsys):
    assert main(["verify", "--suite", "constants", "--kmax", "4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[PASS] constants" in out and "D_k=9" in out


def test_inject_fault_fails_with_a_claim(capsys):
    assert main(["verify", "--inject-fault", "distortion"]) == EXIT_INVARIANT
    out = capsys.readouterr().out
    assert "distortion_edge" in out


def test_config_errors():
    assert main(["run", "--adversary", "nope"]) == EXIT_CONFIG
    assert main(["run", "--policy", "nope", "--adversary", "random"]) == EXIT_CONFIG
    assert main(["run", "--adversary", "random", "--params", "[1]"]) == EXIT_CONFIG
    assert main(["run"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_run_writes_transcript(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["run", "--adversary", "random", "--k", "3", "--seed", "4", "--audit",
                 "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert json.loads(lines[-1])["summary"]


def test_gen_export_and_run_instance(tmp_path, capsys):
    inst = tmp_path / "lb.json"
    ops = tmp_path / "ops.jsonl"
    assert main(["gen", "--adversary", "lb-det", "--k", "2", "--export-lgt", str(inst),
                 "--out", str(ops)]) == EXIT_OK
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["run", "--instance", str(inst), "--out", str(a)]) == EXIT_OK
    assert main(["run", "--adversary", "lb-det", "--k", "2", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_bench_is_byte_identical(tmp_path):
    args = ["bench", "--policies", "chaser-2k,greedy,chaser-d3", "--adversaries", "random,lb-det",
            "--k", "2", "--seeds", "0,1"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0].startswith("instance,algorithm,k,seed,cost,opt,ratio,C")
    assert len(rows) == 1 + 2 * 3 * 2


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SETCHASE_SEED", "9")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", "--adversary", "random", "--seed", "1", "--out", str(a)])
    main(["run", "--adversary", "random", "--seed", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("SETCHASE_SEED", "x")
    assert main(["run", "--adversary", "random"]) == EXIT_CONFIG
