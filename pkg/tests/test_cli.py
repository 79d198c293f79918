import hashlib
import json
from pathlib import Path

import pytest

from temposnn.cli import main


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def make_dataset(tmp_path, name="data"):
    out = tmp_path / name
    rc = main(["synth", "--task", "timing-classification", "--out", str(out),
               "--channels", "16", "--steps", "40", "--train-per-class", "4",
               "--test-per-class", "2", "--seed", "1"])
    assert rc == 0
    return out / "train" / "manifest.json", out / "test" / "manifest.json"


def train_once(tmp_path, train_manifest, out_name, seed="3"):
    out = tmp_path / out_name
    rc = main(["train", "--manifest", str(train_manifest), "--out", str(out),
               "--arch", "16,12,4", "--epochs", "2", "--batch-size", "8",
               "--steps", "40", "--seed", seed, "--gain", "2.0", "--lr", "0.001"])
    assert rc == 0
    return out


class TestDeterminism:
    def test_train_rerun_byte_identical(self, tmp_path):
        train_manifest, _ = make_dataset(tmp_path)
        a = train_once(tmp_path, train_manifest, "run_a")
        b = train_once(tmp_path, train_manifest, "run_b")
        assert sha256(a / "history.csv") == sha256(b / "history.csv")
        assert sha256(a / "checkpoint.snnc") == sha256(b / "checkpoint.snnc")

    def test_eval_rerun_byte_identical(self, tmp_path):
        train_manifest, test_manifest = make_dataset(tmp_path)
        run = train_once(tmp_path, train_manifest, "run")
        outs = []
        for name in ("eval_a", "eval_b"):
            rc = main(["eval", "--checkpoint", str(run / "checkpoint.snnc"),
                       "--manifest", str(test_manifest), "--steps", "40",
                       "--out", str(tmp_path / name)])
            assert rc == 0
            outs.append(sha256(tmp_path / name / "metrics.csv"))
        assert outs[0] == outs[1]

    def test_sweep_rerun_byte_identical(self, tmp_path):
        train_manifest, test_manifest = make_dataset(tmp_path)
        run = train_once(tmp_path, train_manifest, "run")
        hashes = []
        for name in ("sweep_a", "sweep_b"):
            rc = main(["sweep", "--checkpoint", str(run / "checkpoint.snnc"),
                       "--manifest", str(test_manifest), "--steps", "40",
                       "--bits", "4,5", "--dev", "0:0.5:0.25", "--trials", "2",
                       "--seed", "7", "--out", str(tmp_path / name)])
            assert rc == 0
            hashes.append(sha256(tmp_path / name / "sweep.csv"))
        assert hashes[0] == hashes[1]

    def test_synth_rerun_byte_identical(self, tmp_path):
        m1, _ = make_dataset(tmp_path, "d1")
        m2, _ = make_dataset(tmp_path, "d2")
        assert sha256(m1) == sha256(m2)
        doc = json.loads(m1.read_text())
        first = doc["samples"][0]["path"]
        assert sha256(m1.parent / first) == sha256(m2.parent / first)


class TestExitCodes:
    def test_validation_error_exits_one(self, tmp_path, capsys):
        train_manifest, _ = make_dataset(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["train", "--manifest", str(train_manifest), "--out",
                  str(tmp_path / "x"), "--arch", "99,4", "--epochs", "1",
                  "--steps", "40"])
        assert exc.value.code == 1
        assert "validation" in capsys.readouterr().err

    def test_data_error_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.snnc"
        bad.write_bytes(b"nope")
        _, test_manifest = make_dataset(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--checkpoint", str(bad), "--manifest",
                  str(test_manifest), "--steps", "40"])
        assert exc.value.code == 2

    def test_gradcheck_gate_passes(self, capsys):
        rc = main(["gradcheck", "--arch", "6,8,3", "--steps", "10"])
        assert rc == 0
        assert "max relative error" in capsys.readouterr().out


class TestConfigFile:
    def test_config_file_supplies_fields_and_flags_override(self, tmp_path, capsys):
        train_manifest, _ = make_dataset(tmp_path)
        config = {
            "manifest": str(train_manifest),
            "architecture": [16, 12, 4],
            "epochs": 1,
            "batch_size": 8,
            "num_steps": 40,
            "seed": 3,
            "gain": 2.0,
            "out_dir": str(tmp_path / "from_config"),
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        rc = main(["--config", str(cfg_path), "train"])
        assert rc == 0
        assert (tmp_path / "from_config" / "history.csv").exists()
        # flag overrides the config's output directory
        rc = main(["--config", str(cfg_path), "train", "--out", str(tmp_path / "flag_wins")])
        assert rc == 0
        assert (tmp_path / "flag_wins" / "history.csv").exists()


class TestCircuitCommand:
    def test_demo_fires_once_and_compares(self, tmp_path, capsys):
        rc = main(["circuit", "--demo", "--out", str(tmp_path / "circ")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "1 output spikes" in out
        assert "max |dstep| 0" in out
        assert (tmp_path / "circ" / "waveforms.csv").exists()

    def test_custom_spikes(self, tmp_path):
        rc = main(["circuit", "--spikes", "3,20,40", "--steps", "60",
                   "--out", str(tmp_path / "c2")])
        assert rc == 0
        lines = (tmp_path / "c2" / "spikes.csv").read_text().splitlines()
        assert lines[0] == "time_s,step"
        assert len(lines) == 4
