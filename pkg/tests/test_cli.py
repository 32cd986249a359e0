import subprocess
import sys

import numpy as np
import pytest

from gesthmm import cli
from gesthmm.errors import DegenerateSequenceError
from gesthmm.formats import Recording, load_model, load_recordings, save_recordings, save_stream
from gesthmm.quantizer import default_grid

from conftest import random_quat
from streams import FLAT, direction_quat, key_gesture, timed

SMALL = ["generate", "--classes", "3", "--per-class", "6", "--min-len", "6", "--max-len", "10"]
FAST = ["--max-iters", "15"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("--seed", 4, *SMALL, "--out", d / "data") == 0
    data = d / "data" / "recordings.jsonl"
    assert run("--seed", 4, "train-prior", "--data", data, "--out", d / "prior.json", *FAST) == 0
    assert run("--seed", 4, "train-class", "--prior", d / "prior.json", "--data", data, "--out", d / "reg.json", *FAST) == 0
    return d


def one_trigger_stream(path):
    quats = key_gesture(9, 3, 0) + [direction_quat(default_grid().vector(5))] * 20 + [FLAT] * 4
    save_stream(path, timed(quats, 6.7), 6.7)


def outputs(base, tag):
    """Run every verb into ``base/tag`` and return the produced bytes."""
    d = base / tag
    d.mkdir()
    data = base / "data" / "recordings.jsonl"
    rng = np.random.default_rng(1)
    raw = [Recording("u", "a", 6.7, "raw", quaternions=tuple(random_quat(rng) for _ in range(5)))]
    save_recordings(d / "raw.jsonl", raw)
    one_trigger_stream(d / "stream.jsonl")
    steps = [
        ("--seed", 9, *SMALL, "--out", d / "gen"),
        ("quantize", "--input", d / "raw.jsonl", "--out", d / "q.jsonl"),
        ("--seed", 9, "train-prior", "--data", data, "--out", d / "prior.json", *FAST),
        ("--seed", 9, "train-class", "--prior", d / "prior.json", "--data", data, "--out", d / "reg.json", *FAST),
        ("classify", "--model", d / "reg.json", "--data", data, "--out", d / "cls.csv"),
        ("--seed", 9, "evaluate", "--data", data, "--train-per-class", 2, "--test-per-class", 3,
         "--repetitions", 2, "--out", d / "eval.csv", "--summary", d / "sum.csv", *FAST),
        ("stream", "--stream", d / "stream.jsonl", "--model", d / "reg.json", "--out", d / "events.txt"),
    ]
    for argv in steps:
        assert run(*argv) == 0, argv
    names = ["gen/recordings.jsonl", "gen/manifest.json", "q.jsonl", "prior.json", "reg.json",
             "cls.csv", "eval.csv", "sum.csv", "events.txt"]
    return {n: (d / n).read_bytes() for n in names}


def test_every_command_deterministic(workspace):
    a = outputs(workspace, "a")
    b = outputs(workspace, "b")
    for name in a:
        assert a[name] == b[name], name
    assert a["events.txt"].count(b"\n") == 1


def test_generate_seed_changes_output(tmp_path):
    run("--seed", 1, *SMALL, "--out", tmp_path / "x")
    run("--seed", 2, *SMALL, "--out", tmp_path / "y")
    assert (tmp_path / "x/recordings.jsonl").read_bytes() != (tmp_path / "y/recordings.jsonl").read_bytes()
    assert len(load_recordings(tmp_path / "x/recordings.jsonl")) == 18


def test_registry_contents(workspace):
    reg = load_model(workspace / "reg.json")
    assert reg.labels == ["g01", "g02", "g03"]
    assert reg.shared_prior.n_states == 6


def test_classify_stdout(workspace, capsys):
    assert run("classify", "--model", workspace / "reg.json", "--data", workspace / "data/recordings.jsonl") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "index,user,true_label,predicted,g01,g02,g03"
    assert len(lines) == 19


def test_stream_events(workspace, tmp_path, capsys):
    save_stream(tmp_path / "empty.jsonl", [])
    assert run("stream", "--stream", tmp_path / "empty.jsonl", "--model", workspace / "reg.json") == 0
    assert capsys.readouterr().out == ""
    one_trigger_stream(tmp_path / "s.jsonl")
    assert run("stream", "--stream", tmp_path / "s.jsonl", "--model", workspace / "reg.json") == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 1 and out[0].count("=") == 3


def test_stream_malformed_row(workspace, tmp_path, capsys):
    (tmp_path / "s.jsonl").write_text('{"t": 0.0, "q": [1, 0, 0, 0]}\n{"t": 0.1, "q": [1, 0]}\n')
    assert run("stream", "--stream", tmp_path / "s.jsonl", "--model", workspace / "reg.json") == 2
    assert "line 2" in capsys.readouterr().err


def test_usage_errors(workspace, tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["evaluate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 1
    assert run(*SMALL, "--out", tmp_path / "g", "--per-class", 0) == 1
    (tmp_path / "cfg.json").write_text('{"vb": {"bogus": 1}}')
    data = workspace / "data/recordings.jsonl"
    assert run("--config", tmp_path / "cfg.json", "train-prior", "--data", data, "--out", tmp_path / "p.json") == 1
    assert run("classify", "--model", workspace / "prior.json", "--data", data) == 1
    capsys.readouterr()


def test_data_errors(workspace, tmp_path, capsys):
    assert run("classify", "--model", tmp_path / "missing.json", "--data", tmp_path / "x") == 2
    (tmp_path / "bad.json").write_text("{")
    assert run("classify", "--model", tmp_path / "bad.json", "--data", tmp_path / "x") == 2
    capsys.readouterr()


def test_numerical_failure_exit_code(workspace, monkeypatch, tmp_path):
    def boom(*a, **k):
        raise DegenerateSequenceError("zero mass")

    monkeypatch.setattr(cli, "learn_shared_prior", boom)
    data = workspace / "data/recordings.jsonl"
    assert run("train-prior", "--data", data, "--out", tmp_path / "p.json") == 3


def test_config_file_applies(workspace, tmp_path):
    (tmp_path / "cfg.json").write_text('{"synth": {"n_classes": 2, "per_class": 3}}')
    assert run("--config", tmp_path / "cfg.json", "generate", "--out", tmp_path / "g") == 0
    assert len(load_recordings(tmp_path / "g/recordings.jsonl")) == 6


def test_help_documents_csv_columns():
    out = subprocess.run(
        [sys.executable, "-m", "gesthmm.cli", "evaluate", "--help"], capture_output=True, text=True, check=True
    ).stdout
    assert "repetition,arm,prior_policy,rate,n_correct,n_test" in out
