import copy
import json

import numpy as np
import pytest

from src.data.idx import serialize_idx

SYNTHETIC_RUN = {
    "model": {
        "input_dim": 5,
        "encoder_dims": [],
        "activation": "identity",
        "heads": [
            {"out_dim": 1, "loss": "regression", "name": "task1"},
            {"out_dim": 1, "loss": "regression", "name": "task2"},
        ],
        "rank": 1,
        "alpha": 1.0,
        "shared_head": True,
    },
    "train": {
        "epochs": 3,
        "batch_size": 100,
        "learning_rate": 0.01,
        "seed": 7,
        "hv_reference": [3.0, 3.0],
        "schedule": {"samples_per_batch": 5, "mode": "deterministic", "annealed": True, "temperature": 1.0},
    },
    "data": {
        "kind": "synthetic",
        "val_fraction": 0.2,
        "synthetic": {"input_dim": 5, "num_samples": 2000, "noise": 0.01},
    },
}


def relative_error(actual, expected, floor: float = 1e-8) -> float:
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(np.linalg.norm(actual) + np.linalg.norm(expected), floor)
    return float(np.linalg.norm(actual - expected) / scale)


@pytest.fixture
def rel_err():
    return relative_error


@pytest.fixture
def synthetic_run_dict(tmp_path):
    data = copy.deepcopy(SYNTHETIC_RUN)
    data["outputs"] = str(tmp_path / "run")
    return data


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return _write


@pytest.fixture
def tiny_mnist(tmp_path):
    """Ten constant-valued 28x28 'digits' (image k has value 20k and label k), as IDX files."""
    labels = np.repeat(np.arange(10, dtype=np.uint8), 5)
    images = np.stack([np.full((28, 28), 20 * int(k), dtype=np.uint8) for k in labels])
    images_path = tmp_path / "images.idx3-ubyte"
    labels_path = tmp_path / "labels.idx1-ubyte"
    images_path.write_bytes(serialize_idx(images))
    labels_path.write_bytes(serialize_idx(labels))
    return images, labels, str(images_path), str(labels_path)


@pytest.fixture(scope="session")
def make_run_dict():
    """Fresh copy of the small synthetic run config with nested overrides applied."""

    def _make(**sections):
        data = copy.deepcopy(SYNTHETIC_RUN)
        for section, values in sections.items():
            if isinstance(values, dict) and isinstance(data.get(section), dict):
                data[section].update(values)
            else:
                data[section] = values
        return data

    return _make
