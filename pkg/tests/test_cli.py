import json

import pytest

from dbsadam.cli import main

TINY = """
synthetic_samples = 240
synthetic_features = 6
synthetic_priors = 0.5, 0.3, 0.2
hidden1 = 4
hidden2 = 3
dense_units = 4
dropout_rate = 0.0
sequence_chunks = 2
resampler = none
loss = cross_entropy
max_epochs = 2
patience = 2
seeds = 1, 2
warmup_batches = 2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY, encoding="utf-8")
    return str(path)


class TestTrainCommand:
    def test_success_writes_reports(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["train", "--config", config_file, "--optimizer", "adam", "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "runs.csv").exists()
        assert "accuracy" in capsys.readouterr().out

    def test_seed_override(self, config_file, tmp_path):
        out = tmp_path / "out"
        code = main(["train", "--config", config_file, "--seed", "5", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["runs"][0]["seed"] == 5


class TestExitCodes:
    def test_unknown_config_key_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("not_a_key = 1\n", encoding="utf-8")
        assert main(["train", "--config", str(bad)]) == 1

    def test_invalid_value_is_config_error(self, config_file):
        assert main(["train", "--config", config_file, "--batch_size", "0"]) == 1

    def test_unknown_flag_is_config_error(self):
        assert main(["train", "--definitely-not-a-flag", "1"]) == 1

    def test_missing_dataset_file_is_runtime_error(self, tmp_path):
        schema = tmp_path / "s.txt"
        schema.write_text("x: feature_numeric\nlabel: label\n", encoding="utf-8")
        code = main([
            "train", "--dataset", str(tmp_path / "absent.csv"),
            "--schema_file", str(schema), "--out", str(tmp_path / "out"),
        ])
        assert code == 2


class TestCompareCommand:
    def test_compare_writes_all_outputs(self, config_file, tmp_path, capsys):
        out = tmp_path / "cmp"
        code = main([
            "compare", "--config", config_file,
            "--optimizers", "adam,dbs_adam", "--seeds", "1,2", "--out", str(out),
        ])
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        assert len(payload["runs"]) == 4
        assert len(payload["significance"]) == 5
        assert (out / "lr_trace.csv").read_text().count("\n") > 1  # dbs traces present


class TestSweepCommand:
    def test_small_grid(self, config_file, tmp_path):
        out = tmp_path / "sweep"
        code = main([
            "sweep", "--config", config_file,
            "--betas", "0.9,0.95", "--alphas", "0.5", "--sweep_seeds", "2",
            "--out", str(out),
        ])
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        assert len(payload["sweep"]) == 2


class TestResampleCommand:
    def test_writes_resampled_csv(self, config_file, tmp_path, capsys):
        out = tmp_path / "rs"
        code = main([
            "resample", "--config", config_file,
            "--resampler", "smote_enn", "--out", str(out),
        ])
        assert code == 0
        text = (out / "resampled.csv").read_text()
        assert text.splitlines()[0].endswith("label")
        assert "->" in capsys.readouterr().out


class TestReportCommand:
    def test_regenerates_csv_views(self, config_file, tmp_path):
        out = tmp_path / "out"
        assert main(["train", "--config", config_file, "--out", str(out)]) == 0
        regen = tmp_path / "regen"
        code = main(["report", "--input", str(out / "report.json"), "--out", str(regen)])
        assert code == 0
        assert (regen / "runs.csv").read_bytes() == (out / "runs.csv").read_bytes()
