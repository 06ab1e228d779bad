from typing import Tuple

from src.core.constants import Constants
from src.core.logging import logger
from src.data.dataset import LabeledDataset, train_val_split
from src.data.idx import load_idx
from src.data.multimnist import build_multimnist
from src.data.synthetic import SyntheticProblem, synthetic_two_objective
from src.models.config import RunConfig


def load_dataset(run_config: RunConfig) -> LabeledDataset:
    data = run_config.data
    seed = run_config.train.seed
    if data.kind == Constants.DATA_MULTIMNIST:
        spec = data.multimnist
        images = load_idx(spec.images_path)
        labels = load_idx(spec.labels_path)
        logger.info(f"Loaded {len(images)} MNIST digits from {spec.images_path}")
        return build_multimnist(images, labels, spec.num_samples, seed, spec.without_replacement)
    problem = SyntheticProblem.from_spec(data.synthetic)
    return synthetic_two_objective(problem, seed)


def load_splits(run_config: RunConfig) -> Tuple[LabeledDataset, LabeledDataset]:
    dataset = load_dataset(run_config)
    train, val = train_val_split(dataset, run_config.data.val_fraction, run_config.train.seed)
    logger.info(f"Dataset '{run_config.data.kind}': {len(train)} train / {len(val)} validation samples")
    return train, val
