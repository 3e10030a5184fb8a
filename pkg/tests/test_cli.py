import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sidechannel import __version__
from sidechannel.cli import main
from sidechannel.synth import BaseSpec, ClassTexture, generate_synthetic_bases, write_raw_corpus


def run(argv, env=None, monkeypatch=None):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    spec = BaseSpec({"calm": ClassTexture(2), "noisy": ClassTexture(40)}, 30, width=32, height=32)
    write_raw_corpus(generate_synthetic_bases(spec, seed=0), root)
    return root


@pytest.fixture(scope="module")
def arff(corpus, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "c.arff"
    code, _ = run(["build-dataset", corpus, "-o", path])
    assert code == 0
    return path


def header_ok(text, command):
    first = text.splitlines()[0]
    assert first.startswith(f"# sidechannel {__version__} command={command} seed=")
    assert "config=" in first


class TestExitCodes:
    def test_no_command(self, capsys):
        assert run([])[0] == 1

    def test_bad_flag(self, capsys):
        assert run(["evaluate", "x.arff", "--algo", "nope"])[0] == 1

    def test_empty_arff(self, tmp_path, capsys):
        p = tmp_path / "e.arff"
        p.write_text("@relation e\n@attribute a numeric\n@attribute class {A,B}\n@data\n")
        assert run(["evaluate", "--algo", "j48", p])[0] == 3
        assert "EmptyDataset" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["evaluate", "--algo", "j48", tmp_path / "none.arff"])[0] == 3

    def test_partial(self, tmp_path, capsys):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        (tmp_path / "a" / "short").write_bytes(b"abc")
        (tmp_path / "a" / "ok").write_bytes(bytes(range(50)))
        (tmp_path / "b" / "ok").write_bytes(bytes(100))
        log = tmp_path / "skips.txt"
        code, _ = run(["build-dataset", tmp_path, "-o", tmp_path / "o.arff", "--skip-log", log])
        assert code == 2
        assert log.read_text().startswith("a/short\t")
        assert "skipped a/short" in capsys.readouterr().err


class TestCommands:
    def test_fingerprint(self, tmp_path):
        f = tmp_path / "z"
        f.write_bytes(bytes(600))
        code, text = run(["fingerprint", f])
        assert code == 0
        header_ok(text, "fingerprint")
        cells = text.splitlines()[1].split("\t")
        assert cells[:3] == ["0.000000", "600", "100.000000"] and cells[7] == "undefined"

    def test_build_dataset(self, arff):
        text = arff.read_text()
        assert text.startswith("% sidechannel")
        assert "@attribute class {calm,noisy}" in text

    def test_train(self, arff, tmp_path):
        model = tmp_path / "m.json"
        code, text = run(["train", arff, "--algo", "j48", "--model-out", model])
        assert code == 0 and "J48 pruned tree" in text
        assert json.loads(model.read_text())["kind"] == "tree"

    def test_evaluate_tsv(self, arff):
        code, text = run(["evaluate", arff, "--algo", "stump", "--format", "tsv"])
        lines = text.splitlines()
        assert code == 0 and lines[1].startswith("correct\t") and lines[2].split("\t")[-1] == "60"

    def test_evaluate_remove(self, arff):
        code, text = run(["evaluate", arff, "--algo", "j48", "--remove", "size,entropy"])
        assert code == 0 and "Attributes:   7" in text

    def test_evaluate_cfs_shows_full_data_selection(self, arff):
        code, text = run(["evaluate", arff, "--algo", "j48", "--select", "cfs"])
        assert code == 0 and "=== Attribute selection on all input data ===" in text
        assert "Selected attributes:" in text and "j48+cfs" in text

    def test_rank_and_select(self, arff):
        assert "average merit" in run(["rank-attributes", arff])[1]
        assert "Total number of subsets evaluated" in run(["select-subset", arff])[1]

    def test_learning_curve(self, arff):
        code, text = run(["learning-curve", arff, "--sizes", "20,60", "--folds", "5"])
        assert code == 0 and text.splitlines()[1] == "Images\tNodes\tAccuracy"

    def test_synth(self, tmp_path):
        code, text = run([
            "synth-corpus", "--bases", "synthetic:a=5*2,b=30~5*3", "--per-class", "3",
            "--size", "32x32", "--seed", "4", "-o", tmp_path / "out",
        ])
        assert code == 0 and "wrote 6 files" in text
        assert len(list((tmp_path / "out" / "b").iterdir())) == 3

    def test_bad_synthetic_spec(self, tmp_path, capsys):
        code, _ = run(["synth-corpus", "--bases", "synthetic:a", "--per-class", "1", "-o", tmp_path])
        assert code == 1

    def test_config_defaults_and_flags_win(self, arff, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"folds": 5, "seed": 3}))
        _, a = run(["--config", cfg, "evaluate", arff, "--algo", "stump"])
        _, b = run(["evaluate", arff, "--algo", "stump", "--folds", "5", "--seed", "3"])
        assert a == b and "seed=3" in a.splitlines()[0]
        _, c = run(["--config", cfg, "evaluate", arff, "--algo", "stump", "--seed", "8"])
        assert "seed=8" in c.splitlines()[0]

    def test_report(self, corpus):
        code, text = run(["report", corpus])
        assert code == 0
        lines = text.splitlines()
        start = next(i for i, l in enumerate(lines) if l.startswith("classifier"))
        rows = lines[start + 1 : start + 9]
        acc = {r.split()[0]: float(r.split()[-2]) for r in rows[:6]}
        first = float(rows[0].split()[-2])
        assert first >= acc["majority"] + 15
        assert len([r for r in rows if r.strip()]) == 8  # six classifiers plus two ablations
        assert "Suggested countermeasure" in text


def test_module_entry_point(tmp_path):
    f = tmp_path / "z"
    f.write_bytes(bytes(range(256)))
    proc = subprocess.run([sys.executable, "-m", "sidechannel", "fingerprint", str(f)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.splitlines()[1].startswith("8.000000\t256")


def test_byte_identical_reruns(arff, corpus, tmp_path, monkeypatch):
    commands = [
        ["evaluate", arff, "--algo", "forest", "--seed", "5"],
        ["rank-attributes", arff, "--seed", "2"],
        ["report", corpus, "--folds", "5"],
    ]
    monkeypatch.setenv("SIDECHANNEL_THREADS", "1")
    first = [run(c)[1] for c in commands]
    monkeypatch.setenv("SIDECHANNEL_THREADS", "8")
    assert [run(c)[1] for c in commands] == first
