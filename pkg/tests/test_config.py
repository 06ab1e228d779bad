import pytest

from src.core.config import Config, ConfigManager
from src.core.exceptions import (
    CheckpointError,
    ConfigError,
    DomainError,
    TrainingAbortedError,
    classify_error,
)


def test_config_reads_environment(monkeypatch):
    monkeypatch.setenv("PALORA_DATA_DIR", "/datasets")
    monkeypatch.setenv("PALORA_EVAL_WORKERS", "4")
    settings = Config()
    assert settings.data_dir == "/datasets"
    assert settings.eval_workers == 4
    assert settings.to_dict()["PALORA_DATA_DIR"] == "/datasets"
    assert settings.to_dict()["PALORA_EVAL_WORKERS"] == 4


def test_parse_run_config_fills_schedule(make_run_dict):
    run_config = ConfigManager().parse_run_config(make_run_dict())
    assert run_config.train.schedule.num_tasks == 2
    assert run_config.train.schedule.seed == 7
    assert run_config.model.num_tasks == 2


def test_overrides(make_run_dict):
    data = make_run_dict()
    data["train"]["schedule"]["seed"] = 99
    run_config = ConfigManager().parse_run_config(data, seed_override=5, out_override="elsewhere")
    assert run_config.train.seed == 5
    assert run_config.train.schedule.seed == 5
    assert run_config.outputs == "elsewhere"
    assert data["train"]["seed"] == 7


@pytest.mark.parametrize(
    "section,key,value",
    [
        ("train", "learning_rate", None),
        ("train", "hv_reference", [1.0, 2.0, 3.0]),
        ("model", "rank", 0),
        ("model", "activation", "sigmoid"),
    ],
)
def test_invalid_run_configs(make_run_dict, section, key, value):
    data = make_run_dict()
    data[section][key] = value
    with pytest.raises(ConfigError):
        ConfigManager().parse_run_config(data)


def test_deterministic_grid_too_small(make_run_dict):
    data = make_run_dict()
    data["train"]["schedule"]["samples_per_batch"] = 1
    with pytest.raises(ConfigError, match="at least 2 points"):
        ConfigManager().parse_run_config(data)


@pytest.mark.parametrize("samples_per_batch", [4, 5, 7])
def test_three_task_grid_must_be_triangular(make_run_dict, samples_per_batch):
    data = make_run_dict()
    data["model"]["heads"].append({"out_dim": 1, "loss": "regression", "name": "task3"})
    data["train"]["hv_reference"] = [3.0, 3.0, 3.0]
    data["train"]["schedule"]["samples_per_batch"] = samples_per_batch
    with pytest.raises(ConfigError, match="triangular lattice"):
        ConfigManager().parse_run_config(data)

    data["train"]["schedule"]["samples_per_batch"] = 6
    assert ConfigManager().parse_run_config(data).train.schedule.samples_per_batch == 6


def test_dirichlet_schedule_accepts_any_batch_size(make_run_dict):
    data = make_run_dict()
    data["train"]["schedule"].update({"mode": "dirichlet", "samples_per_batch": 1})
    assert ConfigManager().parse_run_config(data).train.schedule.samples_per_batch == 1


def test_shared_head_needs_equal_widths(make_run_dict):
    data = make_run_dict()
    data["model"]["heads"][1]["out_dim"] = 2
    with pytest.raises(ConfigError):
        ConfigManager().parse_run_config(data)


def test_missing_dataset_files(make_run_dict, tmp_path):
    manager = ConfigManager()
    manager.config.data_dir = str(tmp_path)
    data = make_run_dict()
    data["data"] = {"kind": "multimnist", "multimnist": {"images_path": "imgs.idx", "labels_path": "lbls.idx"}}
    with pytest.raises(ConfigError, match="does not exist"):
        manager.parse_run_config(data)


def test_relative_dataset_paths_resolve_against_data_dir(make_run_dict, tiny_mnist, tmp_path):
    manager = ConfigManager()
    manager.config.data_dir = str(tmp_path)
    data = make_run_dict()
    data["data"] = {
        "kind": "multimnist",
        "multimnist": {"images_path": "images.idx3-ubyte", "labels_path": "labels.idx1-ubyte"},
    }
    run_config = manager.parse_run_config(data)
    assert run_config.data.multimnist.images_path == str(tmp_path / "images.idx3-ubyte")


def test_classify_error():
    code, message = classify_error(TrainingAbortedError(3, [float("nan"), 1.0], [0.5, 0.5]))
    assert code == 1 and "learning rate" in message
    assert classify_error(ConfigError("bad"))[0] == 2
    code, message = classify_error(CheckpointError("Unsupported checkpoint version 7"))
    assert code == 3 and "Re-create" in message
    assert classify_error(DomainError("tau"))[0] == 1
    assert classify_error(RuntimeError("boom")) == (1, "Unexpected error: boom")
