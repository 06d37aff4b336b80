"""End-to-end command-line behavior: outputs, determinism, exit codes."""

import subprocess
import sys
from pathlib import Path

import pytest

from uavfuse.cli import main
from uavfuse.msfr import read_manifest

FAST_TRAIN = """
profile = reduced
recordings_per_modality = 2
samples_per_recording = 40
lr0 = 0.001
max_epochs = 15
patience = 15
"""


def write_config(tmp_path, text="profile = reduced\nrecordings_per_modality = 2\nsamples_per_recording = 40\n"):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_generate_is_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["generate", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["generate", "--config", str(cfg), "--out", str(b)]) == 0
    assert tree_bytes(a) == tree_bytes(b)
    names = [n for n, _, _ in read_manifest(a)]
    assert "rec000_thermal.msfr" in names and "rec001_radar.msfr" in names


def test_generate_zero_recordings_gives_empty_manifest(tmp_path):
    cfg = write_config(tmp_path, "profile = reduced\nrecordings_per_modality = 0\n")
    out = tmp_path / "out"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_manifest(out) == []


def test_unknown_config_key_exits_2_and_names_it(tmp_path, capsys):
    cfg = write_config(tmp_path, "no_such_knob = 5\n")
    code = main(["generate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "no_such_knob" in capsys.readouterr().err


def test_bad_config_value_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "seed = banana\n")
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err


def test_resolved_config_echoed(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    main(["generate", "--config", str(cfg), "--out", str(out), "--seed", "9"])
    text = (out / "resolved_config.txt").read_text()
    assert "seed = 9" in text  # flag beat the file default
    assert "profile = reduced" in text
    assert "conv_filters = 16" in text  # reduced-profile default resolved


@pytest.fixture()
def generated(tmp_path):
    cfg = write_config(tmp_path)
    data = tmp_path / "data"
    assert main(["generate", "--config", str(cfg), "--out", str(data)]) == 0
    return cfg, data


class TestRegister:
    def test_single_modality_counts_are_thermal_passthrough(self, generated, capsys):
        cfg, data = generated
        out = data.parent / "fused1"
        code = main(
            ["register", "--config", str(cfg), "--data", str(data), "--out", str(out),
             "--modalities", "one"]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        thermal_total = sum(
            c for _, kind, c in read_manifest(data) if kind == "thermal"
        )
        assert f"one={thermal_total}" in stdout

    def test_counts_monotone_across_modality_sets(self, generated, capsys):
        cfg, data = generated
        out = data.parent / "fused3"
        assert main(
            ["register", "--config", str(cfg), "--data", str(data), "--out", str(out)]
        ) == 0
        line = next(
            l for l in capsys.readouterr().out.splitlines() if l.startswith("counts[")
        )
        counts = dict(part.split("=") for part in line.split(": ")[1].split())
        assert int(counts["three"]) <= int(counts["two"]) <= int(counts["one"])

    def test_missing_radar_exits_3_and_lists_ids(self, generated, capsys):
        cfg, data = generated
        # drop every radar file from the manifest
        entries = [e for e in read_manifest(data) if e[1] != "radar"]
        from uavfuse.msfr import write_manifest

        write_manifest(data, entries)
        code = main(
            ["register", "--config", str(cfg), "--data", str(data),
             "--out", str(data.parent / "f"), "--modalities", "three"]
        )
        assert code == 3
        err = capsys.readouterr().err
        assert "radar" in err and "rec000" in err and "rec001" in err

    def test_holdout_writes_train_and_test_splits(self, generated):
        cfg, data = generated
        out = data.parent / "split"
        assert main(
            ["register", "--config", str(cfg), "--data", str(data), "--out", str(out),
             "--holdout", "1"]
        ) == 0
        assert (out / "train" / "fused_three.msfr").is_file()
        assert (out / "test" / "fused_three.msfr").is_file()

    def test_register_is_deterministic(self, generated):
        cfg, data = generated
        a, b = data.parent / "ra", data.parent / "rb"
        main(["register", "--config", str(cfg), "--data", str(data), "--out", str(a)])
        main(["register", "--config", str(cfg), "--data", str(data), "--out", str(b)])
        assert tree_bytes(a) == tree_bytes(b)


@pytest.fixture()
def fused(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(FAST_TRAIN, encoding="utf-8")
    data = tmp_path / "data"
    out = tmp_path / "fused"
    assert main(["generate", "--config", str(cfg), "--out", str(data)]) == 0
    assert main(["register", "--config", str(cfg), "--data", str(data), "--out", str(out)]) == 0
    return cfg, out / "fused_three.msfr"


class TestTrain:
    def test_fixed_seed_gives_identical_weights(self, fused, tmp_path):
        cfg, data = fused
        a, b = tmp_path / "ma", tmp_path / "mb"
        assert main(["train", "--config", str(cfg), "--data", str(data), "--out", str(a)]) == 0
        assert main(["train", "--config", str(cfg), "--data", str(data), "--out", str(b)]) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_repeats_write_reports_and_mean(self, fused, tmp_path, capsys):
        cfg, data = fused
        out = tmp_path / "models"
        assert main(
            ["train", "--config", str(cfg), "--data", str(data), "--out", str(out),
             "--repeats", "5"]
        ) == 0
        assert sorted(p.name for p in out.glob("model_*.msfw")) == [
            f"model_{i:03d}.msfw" for i in range(5)
        ]
        assert len(list(out.glob("report_*.txt"))) == 5
        assert "mean validation weighted F1 over 5 run(s)" in capsys.readouterr().out
        text = (out / "report_000.txt").read_text()
        assert "stopped_epoch = " in text and "weights_digest = " in text

    def test_single_class_dataset_exits_4(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            FAST_TRAIN + "uav_fraction = 0.0\n", encoding="utf-8"
        )
        data, fused_dir = tmp_path / "d", tmp_path / "f"
        main(["generate", "--config", str(cfg), "--out", str(data)])
        main(["register", "--config", str(cfg), "--data", str(data), "--out", str(fused_dir)])
        code = main(
            ["train", "--config", str(cfg), "--data", str(fused_dir), "--out", str(tmp_path / "m")]
        )
        assert code == 4
        assert "single class" in capsys.readouterr().err

    def test_missing_fused_file_exits_3(self, fused, tmp_path):
        cfg, _ = fused
        code = main(
            ["train", "--config", str(cfg), "--data", str(tmp_path / "nowhere"),
             "--out", str(tmp_path / "m")]
        )
        assert code == 3


class TestEvaluate:
    @pytest.fixture()
    def separable_pipeline(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "profile = reduced\nrecordings_per_modality = 2\nsamples_per_recording = 40\n"
            "noise_sigma = 0.0\ndropout_rate = 0.0\nlr0 = 0.001\n"
            "max_epochs = 40\npatience = 40\n",
            encoding="utf-8",
        )
        data, fused_dir, models = tmp_path / "d", tmp_path / "f", tmp_path / "m"
        assert main(["generate", "--config", str(cfg), "--out", str(data)]) == 0
        assert main(["register", "--config", str(cfg), "--data", str(data), "--out", str(fused_dir)]) == 0
        assert main(["train", "--config", str(cfg), "--data", str(fused_dir), "--out", str(models)]) == 0
        return cfg, fused_dir / "fused_three.msfr", models

    def test_converged_model_scores_perfectly_on_training_data(
        self, separable_pipeline, tmp_path
    ):
        cfg, data, models = separable_pipeline
        out = tmp_path / "eval"
        assert main(
            ["evaluate", "--config", str(cfg), "--model", str(models / "model_000.msfw"),
             "--data", str(data), "--out", str(out)]
        ) == 0
        doc = (out / "evaluation.txt").read_text()
        assert "weighted_f1 = 1\n" in doc
        assert "fp = 0" in doc and "fn = 0" in doc
        assert "auc = 1\n" in doc
        assert (out / "roc_model_000.csv").read_text().startswith("fpr,tpr")

    def test_evaluate_twice_byte_identical(self, separable_pipeline, tmp_path):
        cfg, data, models = separable_pipeline
        a, b = tmp_path / "ea", tmp_path / "eb"
        for out in (a, b):
            assert main(
                ["evaluate", "--config", str(cfg), "--model", str(models),
                 "--data", str(data), "--out", str(out)]
            ) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_evaluating_a_directory_lists_per_seed_f1(self, fused, tmp_path):
        cfg, data = fused
        models, out = tmp_path / "mm", tmp_path / "ee"
        assert main(
            ["train", "--config", str(cfg), "--data", str(data), "--out", str(models),
             "--repeats", "3"]
        ) == 0
        assert main(
            ["evaluate", "--config", str(cfg), "--model", str(models),
             "--data", str(data), "--out", str(out)]
        ) == 0
        doc = (out / "evaluation.txt").read_text()
        per_seed = next(l for l in doc.splitlines() if l.startswith("per_seed_f1"))
        assert len(per_seed.split("=")[1].split(",")) == 3
        assert "mean_f1 = " in doc
        assert len(list(out.glob("roc_model_*.csv"))) == 3

    def test_shape_mismatch_exits_5(self, separable_pipeline, tmp_path, capsys):
        cfg, _, models = separable_pipeline
        paper_cfg = tmp_path / "paper.cfg"
        paper_cfg.write_text(
            "profile = paper\nrecordings_per_modality = 1\nsamples_per_recording = 3\n"
            "thermal_dropout = 0\noptronic_dropout = 0\nradar_dropout = 0\n",
            encoding="utf-8",
        )
        pdata, pfused = tmp_path / "pd", tmp_path / "pf"
        assert main(["generate", "--config", str(paper_cfg), "--out", str(pdata)]) == 0
        assert main(
            ["register", "--config", str(paper_cfg), "--data", str(pdata), "--out", str(pfused)]
        ) == 0
        code = main(
            ["evaluate", "--config", str(paper_cfg), "--model", str(models / "model_000.msfw"),
             "--data", str(pfused), "--out", str(tmp_path / "e")]
        )
        assert code == 5
        assert "model input" in capsys.readouterr().err


def test_console_entry_point_runs(tmp_path):
    cfg = write_config(tmp_path, "profile = reduced\nrecordings_per_modality = 1\nsamples_per_recording = 5\n")
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "uavfuse.cli", "generate", "--config", str(cfg),
         "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "manifest.tsv").is_file()
