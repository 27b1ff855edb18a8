import json
import subprocess
import sys
from pathlib import Path

from vlnloop.cli import main
from vlnloop.suites import oracle_fixture, write_fixture

FIXTURES = Path(__file__).parent / "fixtures"
ENV = str(FIXTURES / "envs")
EPS = str(FIXTURES / "episodes.json")


def test_run_heuristic_and_eval(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert main(["run", "--env", ENV, "--episodes", EPS, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].split() == ["Setting", "TL", "NE", "OSR", "SR", "SPL"]
    assert "4 episodes, 0 errored" in text
    assert main(["eval", str(out), "--env", ENV, "--episodes", EPS]) == 0
    assert "0 mismatches" in capsys.readouterr().out


def test_run_scripted_oracle(tmp_path, capsys):
    fx = tmp_path / "fx.json"
    write_fixture(oracle_fixture(), fx)
    out = tmp_path / "r.jsonl"
    rc = main(["run", "--env", ENV, "--episodes", EPS, "--backend", "scripted", "--fixtures", str(fx),
               "--out", str(out), "--first-instruction-only"])
    assert rc == 0
    row = capsys.readouterr().out.splitlines()[1].split()
    assert row[0] == "base" and row[-2:] == ["100.0", "100.0"]


def test_ablation_flags_set_label(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert main(["run", "--env", ENV, "--episodes", EPS, "--out", str(out),
                 "--no-qai", "--no-distance", "--no-seg", "--max-steps", "4"]) == 0
    assert "w/o QAI, w/o dis, w/o seg" in capsys.readouterr().out
    config = json.loads(out.read_text().splitlines()[-1])["config"]
    assert config["agent"]["qai_enabled"] is False and config["agent"]["max_steps"] == 4
    for line in out.read_text().splitlines()[:-1]:
        assert all(s["questions"] == [] for s in json.loads(line)["steps"])


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_q": 1, "summarize": "chat"}))
    out = tmp_path / "r.jsonl"
    assert main(["run", "--env", ENV, "--episodes", EPS, "--config", str(cfg), "--out", str(out)]) == 0
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["run", "--env", ENV, "--episodes", EPS, "--config", str(cfg), "--out", str(out)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_scripted_without_fixtures_is_usage_error(capsys):
    assert main(["run", "--env", ENV, "--episodes", EPS, "--backend", "scripted"]) == 2
    assert "--fixtures" in capsys.readouterr().err


def test_run_bad_inputs(tmp_path):
    assert main(["run", "--env", str(tmp_path / "missing"), "--episodes", EPS, "--out", str(tmp_path / "r")]) == 1
    bad = tmp_path / "envs"
    bad.mkdir()
    (bad / "line.json").write_text("{")
    assert main(["run", "--env", str(bad), "--episodes", EPS, "--out", str(tmp_path / "r")]) == 1


def test_eval_detects_tampering(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    main(["run", "--env", ENV, "--episodes", EPS, "--out", str(out)])
    lines = out.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["metrics"]["TL"] += 1.0
    lines[0] = json.dumps(rec)
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["eval", str(out), "--env", ENV, "--episodes", EPS]) == 1
    assert "1 mismatches" in capsys.readouterr().out


def test_eval_empty_results(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["eval", str(empty), "--env", ENV, "--episodes", EPS]) == 2


def test_missing_fixture_key_is_fatal(tmp_path, capsys):
    fx = tmp_path / "fx.json"
    fx.write_text(json.dumps({"entries": {"1_0:0:think": "hi"}}))
    out = tmp_path / "r.jsonl"
    rc = main(["run", "--env", ENV, "--episodes", EPS, "--backend", "scripted", "--fixtures", str(fx),
               "--out", str(out)])
    assert rc == 1
    assert "1_0:0:questions:0" in capsys.readouterr().err
    assert not out.exists()


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.jsonl"
    proc = subprocess.run(
        [sys.executable, "-m", "vlnloop", "run", "--env", ENV, "--episodes", EPS, "--out", str(out)],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
