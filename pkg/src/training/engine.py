"""Scalarized multi-preference training, Pareto expansion, front evaluation and probing."""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.constants import Constants
from src.core.exceptions import DataError, DomainError, TrainingAbortedError
from src.core.logging import logger
from src.data.dataset import LabeledDataset
from src.metrics.moo import summarize_front
from src.models.config import ModelSpec, TrainConfig
from src.models.records import FrontRecord, HistoryRow, TrainHistory
from src.nn.network import PaLoRANetwork, task_losses, task_metrics
from src.nn.optim import Optimizer, build_optimizer
from src.nn.tensor_core import Batch
from src.training.scheduler import PreferenceScheduler, eval_grid, on_simplex, uniform_preference


def build(spec: ModelSpec, seed: int) -> PaLoRANetwork:
    return PaLoRANetwork.build(spec, seed)


def compute_gradients(
    model: PaLoRANetwork, batch: Batch, preferences: Sequence[Sequence[float]], step: int = 0
) -> Tuple[Dict[str, np.ndarray], List[np.ndarray]]:
    """Gradients of lambda^T L averaged over the preferences, plus each preference's loss vector."""
    if not preferences:
        raise DomainError("at least one preference per batch is required")
    total: Dict[str, np.ndarray] = {}
    loss_vectors: List[np.ndarray] = []
    for preference in preferences:
        lam = np.asarray(preference, dtype=np.float64)
        outputs, cache = model.forward(lam, batch.inputs)
        losses, output_grads = task_losses(model.spec, outputs, batch.targets)
        if not np.all(np.isfinite(losses)):
            raise TrainingAbortedError(step, losses.tolist(), lam.tolist())
        upstreams = [lam[t] * output_grads[t] for t in range(model.num_tasks)]
        grads = model.backward(lam, cache, upstreams)
        for name, grad in grads.items():
            total[name] = grad.copy() if name not in total else total[name] + grad
        loss_vectors.append(losses)
    count = float(len(preferences))
    return {name: grad / count for name, grad in total.items()}, loss_vectors


def train_step(
    model: PaLoRANetwork,
    batch: Batch,
    preferences: Sequence[Sequence[float]],
    optimizer: Optimizer,
    step: int = 0,
) -> List[np.ndarray]:
    """One optimizer update from the mean gradient over all preferences of the batch."""
    grads, loss_vectors = compute_gradients(model, batch, preferences, step)
    optimizer.step(model.parameters(), grads, model.trainable_block_names())
    return loss_vectors


def _evaluate_one(model: PaLoRANetwork, dataset: LabeledDataset, preference: np.ndarray) -> FrontRecord:
    merged = model.merge(preference)
    outputs = merged.forward(dataset.inputs)
    losses, _ = task_losses(model.spec, outputs, dataset.targets)
    metrics = task_metrics(model.spec, outputs, dataset.targets)
    return FrontRecord(
        preference=preference.tolist(),
        losses=losses.tolist(),
        task_metrics=metrics.tolist(),
    )


def evaluate_front(
    model: PaLoRANetwork,
    dataset: LabeledDataset,
    grid: Sequence[Sequence[float]],
    workers: int = 1,
    validate: bool = True,
) -> List[FrontRecord]:
    """Merged-model evaluation over the whole dataset at every grid point, in grid order."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    preferences = [np.asarray(p, dtype=np.float64) for p in grid]
    for preference in preferences:
        if preference.shape[0] != model.num_tasks:
            raise DomainError(f"preference {preference.tolist()} does not have {model.num_tasks} entries")
        if validate and not on_simplex(preference):
            raise DomainError(f"preference {preference.tolist()} is not on the simplex")
    if workers > 1 and len(preferences) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda p: _evaluate_one(model, dataset, p), preferences))
    return [_evaluate_one(model, dataset, p) for p in preferences]


def probe(
    model: PaLoRANetwork, dataset: LabeledDataset, pseudo: Sequence[Sequence[float]], workers: int = 1
) -> List[FrontRecord]:
    """evaluate_front for arbitrary preferences, including ones outside the simplex."""
    return evaluate_front(model, dataset, pseudo, workers=workers, validate=False)


def default_probe_set(num_tasks: int) -> List[List[float]]:
    if num_tasks != 2:
        eye = np.eye(num_tasks)
        return [row.tolist() for row in eye] + [[0.0] * num_tasks] + [(2 * row - 1).tolist() for row in eye]
    return [
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 0.5],
        [0.0, 0.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
    ]


def validation_grid(num_tasks: int, size: Optional[int]) -> List[np.ndarray]:
    if num_tasks in (2, 3):
        return eval_grid(num_tasks, size)
    return [uniform_preference(num_tasks)]


def _run(
    model: PaLoRANetwork,
    train_set: LabeledDataset,
    val_set: LabeledDataset,
    config: TrainConfig,
    label: str,
    workers: int,
) -> Tuple[PaLoRANetwork, TrainHistory]:
    if config.learning_rate is None:
        raise DomainError("learning_rate is not set")
    steps_per_epoch = train_set.num_batches(config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    scheduler = PreferenceScheduler(config.schedule, max(total_steps, 1))
    optimizer = build_optimizer(config.optimizer, config.learning_rate)
    rng = np.random.default_rng(config.seed)
    grid = validation_grid(model.num_tasks, config.eval_grid_size)
    uniform = uniform_preference(model.num_tasks)
    history = TrainHistory()

    step = 0
    for epoch in range(config.epochs):
        scalarized: List[float] = []
        for batch in train_set.batches(config.batch_size, rng):
            preferences = scheduler(step)
            loss_vectors = train_step(model, batch, preferences, optimizer, step)
            scalarized.append(
                float(np.mean([np.dot(p, losses) for p, losses in zip(preferences, loss_vectors)]))
            )
            logger.debug(f"{label} step {step}: scalarized loss {scalarized[-1]:.6f}")
            step += 1

        front = evaluate_front(model, val_set, grid, workers=workers)
        summary = summarize_front(front, config.hv_reference)
        uniform_record = evaluate_front(model, val_set, [uniform])[0]
        history.rows.append(
            HistoryRow(
                epoch=epoch + 1,
                scalarized_loss=float(np.mean(scalarized)),
                uniform_losses=uniform_record.losses,
                hv=summary["hv"],
                hv_reference=summary["hv_reference"],
                alignment=summary["alignment"],
                nondominated_count=summary["nondominated_count"],
                learning_rate=optimizer.learning_rate,
            )
        )
        if config.keep_epoch_fronts:
            history.epoch_fronts.append(front)
        logger.info(
            f"{label} epoch {epoch + 1}/{config.epochs}: loss={np.mean(scalarized):.6f} "
            f"hv={summary['hv']:.6f} rho={[round(r, 3) for r in summary['alignment']]}"
        )

    history.steps = step
    history.final_learning_rate = optimizer.learning_rate
    return model, history


def train(
    model: PaLoRANetwork,
    train_set: LabeledDataset,
    val_set: LabeledDataset,
    config: TrainConfig,
    workers: int = 1,
) -> Tuple[PaLoRANetwork, TrainHistory]:
    """Train a copy of the model; fixed-preference schedules update the base weights only."""
    model = model.copy()
    scalarization = config.schedule.mode == Constants.SCHEDULE_FIXED
    model.set_adapters_frozen(scalarization)
    try:
        return _run(model, train_set, val_set, config, "train", workers)
    finally:
        model.set_adapters_frozen(False)


def expand(
    checkpoint: PaLoRANetwork,
    train_set: LabeledDataset,
    config: TrainConfig,
    val_set: Optional[LabeledDataset] = None,
    workers: int = 1,
) -> Tuple[PaLoRANetwork, TrainHistory]:
    """Adapter-only fine-tuning around a checkpoint; base weights and biases never move."""
    if config.mode != Constants.MODE_EXPAND:
        raise DomainError("expand requires a train config with mode 'expand'")
    model = checkpoint.copy()
    model.set_base_frozen(True)
    model.set_adapters_frozen(False)
    try:
        return _run(model, train_set, val_set if val_set is not None else train_set, config, "expand", workers)
    finally:
        model.set_base_frozen(False)
