"""Dense float64 kernels with explicit forward/backward contracts.

Matrices are numpy ``float64`` arrays in row-major, batch-rows layout. Every kernel is
pure: inputs are never mutated and no state is shared between calls.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np
from scipy.special import logsumexp

from src.core.exceptions import DomainError, LabelError, ShapeError

DenseMatrix = np.ndarray


@dataclass(frozen=True)
class Batch:
    """Inputs plus one target block per task; every block has batch_size rows."""

    inputs: DenseMatrix
    targets: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        for t, target in enumerate(self.targets):
            if len(target) != self.inputs.shape[0]:
                raise ShapeError(
                    f"task {t} has {len(target)} target rows for a batch of {self.inputs.shape[0]}"
                )


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def relu_fwd_bwd(x: DenseMatrix, upstream: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix]:
    if x.shape != upstream.shape:
        raise ShapeError(f"relu input {x.shape} and upstream {upstream.shape} differ")
    mask = x > 0
    return np.where(mask, x, 0.0), np.where(mask, upstream, 0.0)


def tanh_fwd_bwd(x: DenseMatrix, upstream: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix]:
    if x.shape != upstream.shape:
        raise ShapeError(f"tanh input {x.shape} and upstream {upstream.shape} differ")
    y = np.tanh(x)
    return y, upstream * (1.0 - y * y)


def identity_fwd_bwd(x: DenseMatrix, upstream: DenseMatrix) -> Tuple[DenseMatrix, DenseMatrix]:
    if x.shape != upstream.shape:
        raise ShapeError(f"input {x.shape} and upstream {upstream.shape} differ")
    return x, upstream


ACTIVATIONS = {
    "relu": relu_fwd_bwd,
    "tanh": tanh_fwd_bwd,
    "identity": identity_fwd_bwd,
}


def softmax_cross_entropy(logits: DenseMatrix, labels) -> Tuple[float, DenseMatrix]:
    """Mean negative log-likelihood and its gradient (softmax - onehot) / batch_size."""
    raw = np.asarray(labels).reshape(-1)
    if raw.dtype.kind not in "iub" and not np.all(np.mod(raw, 1) == 0):
        raise LabelError("labels must be integral class indices")
    labels = raw.astype(np.int64)
    batch, num_classes = logits.shape
    if labels.shape[0] != batch:
        raise ShapeError(f"{labels.shape[0]} labels for {batch} logit rows")
    if np.any(labels < 0) or np.any(labels >= num_classes):
        raise LabelError(f"labels must lie in [0, {num_classes})")

    # logsumexp subtracts the row max before exponentiating
    log_norm = logsumexp(logits, axis=1, keepdims=True)
    log_probs = logits - log_norm
    rows = np.arange(batch)
    loss = float(-log_probs[rows, labels].mean())

    dlogits = np.exp(log_probs)
    dlogits[rows, labels] -= 1.0
    dlogits /= batch
    return loss, dlogits


def mse(pred: DenseMatrix, target: DenseMatrix) -> Tuple[float, DenseMatrix]:
    """Mean squared error over all entries and its gradient 2 (pred - target) / count."""
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def finite_diff_grad(f: Callable[[DenseMatrix], float], x: DenseMatrix, eps: float = 1e-5) -> DenseMatrix:
    """Central differences (f(x + eps e) - f(x - eps e)) / 2 eps, one entry at a time."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    flat_grad = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        f_plus = f(x)
        flat[i] = original - eps
        f_minus = f(x)
        flat[i] = original
        flat_grad[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad
