import importlib.util
from pathlib import Path

import pandas as pd
import pytest

from app.domain.errors import ConfigError
from app.schemas.run_config import RunConfig
from app.schemas.training import PointwiseMetric, Stage2Config, StageConfig, TrainConfig

CLI_PATH = Path(__file__).resolve().parents[2] / "scripts" / "dstc_cli.py"


@pytest.fixture(scope="module")
def cli():
    spec = importlib.util.spec_from_file_location("dstc_cli", CLI_PATH)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def data_dir(cli, tmp_path):
    out = tmp_path / "data"
    code = cli.main(["synth", "--classes", "3", "--n-per-class", "20", "--dx", "6", "--dy", "5", "--seed", "3", "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture
def config_file(tmp_path, tiny_preset):
    config = RunConfig(
        train=TrainConfig(
            stage1=StageConfig(epochs=2, lr=1e-2, batch_size=8),
            stage2=Stage2Config(epochs=2, lr=1e-3, batch_size=8),
            seed=0,
        ),
        preset=tiny_preset,
    )
    path = tmp_path / "config.json"
    path.write_text(config.model_dump_json(), encoding="utf-8")
    return path


def test_synth_is_deterministic(cli, data_dir, tmp_path):
    again = tmp_path / "again"
    cli.main(["synth", "--classes", "3", "--n-per-class", "20", "--dx", "6", "--dy", "5", "--seed", "3", "--out", str(again)])
    for name in ("x.feat", "y.feat", "labels.lbl", "split.bin", "manifest"):
        assert (again / name).read_bytes() == (data_dir / name).read_bytes()


def test_train_then_eval(cli, data_dir, config_file, tmp_path):
    run = tmp_path / "run"
    code = cli.main(["train", "--config", str(config_file), "--data", str(data_dir / "manifest"), "--out", str(run)])
    assert code == 0
    for name in ("model.bin", "history.csv", "val_report.csv", "config.resolved.json"):
        assert (run / name).exists(), name
    history = pd.read_csv(run / "history.csv")
    assert set(history["stage"]) == {1, 2}

    code = cli.main([
        "eval", "--model", str(run / "model.bin"), "--data", str(data_dir / "manifest"),
        "--direction", "x2y", "--metric", "euc,cos", "--out", str(run),
    ])
    assert code == 0
    report = pd.read_csv(run / "test_report.csv")
    assert set(report["metric"]) == {"euc", "cos"}
    assert set(report["direction"]) == {"x2y"}


def test_gradcheck_exit_codes(cli):
    assert cli.main(["gradcheck", "--dims", "3", "--batch", "3", "--trials", "1"]) == 0
    assert cli.main(["gradcheck", "--dims", "3", "--batch", "3", "--trials", "1", "--perturb-bug"]) == 1


def test_missing_manifest_is_io_error(cli, tmp_path):
    code = cli.main(["eval", "--model", str(tmp_path / "model.bin"), "--data", str(tmp_path / "nope" / "manifest")])
    assert code == 3


def test_bad_config_is_config_error(cli, data_dir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"train": {"stage1": {"epochs": 0}}}', encoding="utf-8")
    code = cli.main(["train", "--config", str(bad), "--data", str(data_dir / "manifest"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_unknown_key_in_config(cli, data_dir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"learning_rate": 1}', encoding="utf-8")
    code = cli.main(["train", "--config", str(bad), "--data", str(data_dir / "manifest"), "--out", str(tmp_path / "o")])
    assert code == 2


def test_missing_out_is_config_error(cli, data_dir):
    assert cli.main(["train", "--data", str(data_dir / "manifest")]) == 2


def test_duplicate_ablation_rows(cli, data_dir, config_file, tmp_path):
    code = cli.main([
        "ablate", "--config", str(config_file), "--data", str(data_dir / "manifest"),
        "--out", str(tmp_path / "a"), "--rows", "1,1",
    ])
    assert code == 2


def test_parse_metrics(cli):
    assert cli.parse_metrics("euc,cos,euc") == [PointwiseMetric.EUCLIDEAN, PointwiseMetric.COSINE]
    with pytest.raises(ConfigError):
        cli.parse_metrics("manhattan")
