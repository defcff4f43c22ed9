"""Test CLI module."""

import filecmp
import json

import pytest

from temporal_spotting import cli
from temporal_spotting.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, run
from temporal_spotting.data import load_classes, load_labels
from temporal_spotting.gradcheck import GradCheckReport

SMALL_SYNTH = ["--games", "1", "--val-games", "1", "--test-games", "1"]
SMALL_MODEL = ["--clusters", "4", "--reduced-dim", "4", "--max-epochs", "2"]


def _files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


@pytest.fixture
def threads_env(monkeypatch):
    monkeypatch.setenv("TEMPORAL_SPOTTING_THREADS", "1")


class TestGenSynth:
    """Tests for the gen-synth command."""

    def test_reruns_are_byte_identical(self, tmp_path, capsys, threads_env):
        """Test two generations with the same seed produce identical trees."""
        for name in ("a", "b"):
            assert run(["gen-synth", "--out", str(tmp_path / name), "--seed", "5", *SMALL_SYNTH]) == EXIT_OK
        a, b = tmp_path / "a", tmp_path / "b"
        assert _files(a) == _files(b)
        for rel in _files(a):
            assert filecmp.cmp(a / rel, b / rel, shallow=False), rel

    def test_prints_summary(self, tmp_path, capsys, threads_env):
        """Test the command reports what it wrote."""
        run(["gen-synth", "--out", str(tmp_path / "d"), *SMALL_SYNTH])
        payload = json.loads(capsys.readouterr().out)
        assert payload["command"] == "gen-synth"
        assert (tmp_path / "d" / "run_config.json").exists()


class TestTrainSpotEval:
    """End-to-end tests chaining train, spot and eval."""

    def test_pipeline(self, tiny_dataset, tmp_path, capsys, threads_env):
        """Test train writes its artifacts and spot/eval consume them."""
        model_dir = tmp_path / "model"
        code = run(["--quiet", "train", "--data", str(tiny_dataset), "--out", str(model_dir), *SMALL_MODEL])
        assert code == EXIT_OK
        for name in ("model.spkt", "model.json", "train_log.jsonl", "train_timing.jsonl", "run_config.json"):
            assert (model_dir / name).exists(), name
        assert "wall_time_s" not in (model_dir / "train_log.jsonl").read_text()

        spots_dir = tmp_path / "spots"
        code = run(
            ["spot", "--checkpoint", str(model_dir / "model.spkt"), "--data", str(tiny_dataset), "--out", str(spots_dir)]
        )
        assert code == EXIT_OK
        assert (spots_dir / "test_000.json").exists()

        report_path = tmp_path / "report.json"
        code = run(
            ["eval", "--pred", str(spots_dir), "--truth", str(tiny_dataset / "test"), "--out", str(report_path)]
        )
        assert code == EXIT_OK
        report = json.loads(report_path.read_text())
        assert 0.0 <= report["average_map"] <= 1.0

    def test_training_is_reproducible(self, tiny_dataset, tmp_path, threads_env):
        """Test two seeded runs write identical logs and checkpoints."""
        for name in ("a", "b"):
            args = ["--quiet", "train", "--data", str(tiny_dataset), "--out", str(tmp_path / name), "--seed", "9"]
            assert run([*args, *SMALL_MODEL]) == EXIT_OK
        for name in ("train_log.jsonl", "model.spkt", "model.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_eval_on_ground_truth_is_perfect(self, tiny_dataset, tmp_path, capsys):
        """Test predictions equal to the ground truth score 100."""
        truth_dir = tiny_dataset / "test"
        class_names = load_classes(truth_dir)
        pred_dir = tmp_path / "pred"
        pred_dir.mkdir()
        for path in truth_dir.glob("*.labels.json"):
            video_id = path.name.removesuffix(".labels.json")
            predictions = [
                {"label": class_names[a.class_index], "position_ms": a.position_ms, "confidence": 1.0}
                for a in load_labels(path, class_names)
            ]
            (pred_dir / f"{video_id}.json").write_text(json.dumps({"video_id": video_id, "predictions": predictions}))
        assert run(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir)]) == EXIT_OK
        last = capsys.readouterr().out.strip().splitlines()[-1]
        assert last.startswith("Average-mAP")
        assert "100.00" in last


class TestAblate:
    """Tests for the ablate command."""

    def test_config_file_beats_ablation_defaults(self, tiny_dataset, tmp_path, capsys, threads_env):
        """Test model.clusters from --config is used; unset fields keep the ablation defaults."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": {"clusters": 4}, "train": {"max_epochs": 1}}))
        out = tmp_path / "ablation"
        args = ["--quiet", "ablate", "--data", str(tiny_dataset), "--out", str(out), "--config", str(path)]
        assert run([*args, "--variants", "netvlad", "--nms-windows", "10"]) == EXIT_OK
        resolved = json.loads((out / "run_config.json").read_text())
        assert resolved["model"]["clusters"] == 4
        assert resolved["model"]["reduced_dim"] == 32
        payload = json.loads((out / "ablation.json").read_text())
        assert [v["label"] for v in payload["variants"]] == ["netvlad"]
        assert "netvlad" in payload["thresholded"]["average_map"]

    def test_flag_beats_config_file(self, tiny_dataset, tmp_path, capsys, threads_env):
        """Test --clusters overrides the config file."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": {"clusters": 4}, "train": {"max_epochs": 1}}))
        out = tmp_path / "ablation"
        args = ["--quiet", "ablate", "--data", str(tiny_dataset), "--out", str(out), "--config", str(path)]
        assert run([*args, "--clusters", "2", "--variants", "avg", "--nms-windows", "10"]) == EXIT_OK
        assert json.loads((out / "run_config.json").read_text())["model"]["clusters"] == 2


class TestExitCodes:
    """Tests for run exit codes."""

    def test_check_grad_passes(self, capsys):
        """Test a small gradient check exits 0."""
        assert run(["check-grad", "--instances", "1"]) == EXIT_OK
        assert "all components within" in capsys.readouterr().out

    def test_check_grad_failure_is_numeric(self, monkeypatch, capsys):
        """Test a failing gradient check exits 3."""
        failing = GradCheckReport(instances=1)
        failing.record("softmax", 1.0)
        monkeypatch.setattr(cli, "run_suite", lambda seed, instances: failing)
        assert run(["check-grad"]) == EXIT_NUMERIC
        assert "softmax" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        """Test an unknown option is a usage error."""
        assert run(["eval", "--bogus", "1"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "Error:" in err
        assert "Usage" in err
        assert "--pred" in err

    def test_missing_required_option(self, capsys):
        """Test a command without its required options."""
        assert run(["spot"]) == EXIT_USAGE

    def test_missing_dataset(self, tmp_path, capsys):
        """Test training on a directory that does not exist."""
        code = run(["--quiet", "train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "out")])
        assert code == EXIT_DATA
        assert "classes.json" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        """Test a config file with an unknown key."""
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"train": {"momentum": 0.9}}))
        assert run(["gen-synth", "--out", str(tmp_path / "d"), "--config", str(path)]) == EXIT_DATA
        assert "Valid keys" in capsys.readouterr().err

    def test_bad_feature_file(self, tiny_dataset, tmp_path, capsys):
        """Test a corrupted feature file is a data error."""
        path = tiny_dataset / "train" / "train_000.feat"
        path.write_bytes(b"JUNK" + path.read_bytes()[4:])
        code = run(["--quiet", "train", "--data", str(tiny_dataset), "--out", str(tmp_path / "m")])
        assert code == EXIT_DATA

    def test_malformed_spot_file(self, tiny_dataset, tmp_path, capsys):
        """Test a prediction without a label exits 2 and names the file."""
        path = tmp_path / "spots.json"
        path.write_text(json.dumps({"video_id": "test_000", "predictions": [{"position_ms": 0, "confidence": 1.0}]}))
        assert run(["eval", "--pred", str(path), "--truth", str(tiny_dataset / "test")]) == EXIT_DATA
        assert "spots.json" in capsys.readouterr().err
