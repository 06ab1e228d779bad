from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

from src.core.constants import Constants
from src.core.exceptions import DataError, DomainError
from src.nn.tensor_core import Batch


@dataclass(frozen=True)
class TaskDescriptor:
    name: str
    kind: str
    num_outputs: int


@dataclass(frozen=True)
class LabeledDataset:
    """N x d inputs with one target block of N rows per task; immutable after construction."""

    inputs: np.ndarray
    targets: Tuple[np.ndarray, ...]
    tasks: Tuple[TaskDescriptor, ...]

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise DataError(f"inputs must be N x d, got shape {self.inputs.shape}")
        if len(self.targets) != len(self.tasks):
            raise DataError(f"{len(self.targets)} target blocks for {len(self.tasks)} tasks")
        for task, target in zip(self.tasks, self.targets):
            if len(target) != self.inputs.shape[0]:
                raise DataError(f"task '{task.name}' has {len(target)} rows, inputs have {self.inputs.shape[0]}")
        if not np.all(np.isfinite(self.inputs)):
            raise DataError("inputs contain non-finite values")
        self.inputs.setflags(write=False)
        for target in self.targets:
            target.setflags(write=False)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            inputs=self.inputs[indices],
            targets=tuple(target[indices] for target in self.targets),
            tasks=self.tasks,
        )

    def batches(self, batch_size: int, rng: np.random.Generator) -> Iterator[Batch]:
        """One epoch of mini-batches in a seeded random order."""
        order = rng.permutation(len(self))
        for start in range(0, len(self), batch_size):
            index = order[start : start + batch_size]
            yield Batch(inputs=self.inputs[index], targets=[target[index] for target in self.targets])

    def num_batches(self, batch_size: int) -> int:
        return -(-len(self) // batch_size)


def classification_task(name: str, num_classes: int) -> TaskDescriptor:
    return TaskDescriptor(name=name, kind=Constants.LOSS_CLASSIFICATION, num_outputs=num_classes)


def regression_task(name: str, num_outputs: int = 1) -> TaskDescriptor:
    return TaskDescriptor(name=name, kind=Constants.LOSS_REGRESSION, num_outputs=num_outputs)


def train_val_split(
    dataset: LabeledDataset, val_fraction: float, seed: int
) -> Tuple[LabeledDataset, LabeledDataset]:
    """Seeded shuffle, then the last round(N * val_fraction) samples become validation."""
    if not 0.0 < val_fraction < 1.0:
        raise DomainError(f"val_fraction must lie in (0, 1), got {val_fraction}")
    n = len(dataset)
    n_val = int(round(n * val_fraction))
    if n_val == 0 or n_val == n:
        raise DataError(f"cannot split {n} samples with val_fraction={val_fraction}")
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(order[: n - n_val]), dataset.subset(order[n - n_val :])
