"""Two overlapping digits per image: one task per digit position."""

import numpy as np

from src.core.constants import Constants
from src.core.exceptions import DataError
from src.data.dataset import LabeledDataset, classification_task


def overlay_pair(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """First digit top-left, second bottom-right, pixelwise max where they overlap."""
    side, offset, digit = Constants.MULTIMNIST_SIDE, Constants.MULTIMNIST_OFFSET, Constants.MNIST_SIDE
    canvas = np.zeros(first.shape[:-2] + (side, side), dtype=np.uint8)
    canvas[..., :digit, :digit] = first
    canvas[..., offset:, offset:] = np.maximum(canvas[..., offset:, offset:], second)
    return canvas


def build_multimnist(
    mnist_images: np.ndarray,
    mnist_labels: np.ndarray,
    n_out: int,
    seed: int,
    without_replacement: bool = False,
) -> LabeledDataset:
    digit = Constants.MNIST_SIDE
    if mnist_images.ndim != 3 or mnist_images.shape[1:] != (digit, digit):
        raise DataError(f"expected N x {digit} x {digit} images, got {mnist_images.shape}")
    if len(mnist_labels) != len(mnist_images):
        raise DataError(f"{len(mnist_labels)} labels for {len(mnist_images)} images")

    rng = np.random.default_rng(seed)
    available = len(mnist_images)
    if without_replacement:
        if 2 * n_out > available:
            raise DataError(f"{n_out} disjoint pairs need {2 * n_out} images, only {available} available")
        order = rng.permutation(available)[: 2 * n_out]
        first, second = order[:n_out], order[n_out:]
    else:
        first = rng.integers(0, available, size=n_out)
        second = rng.integers(0, available, size=n_out)

    canvas = overlay_pair(mnist_images[first], mnist_images[second])
    inputs = canvas.reshape(n_out, -1).astype(np.float64) / 255.0
    labels = np.asarray(mnist_labels, dtype=np.int64)
    return LabeledDataset(
        inputs=inputs,
        targets=(labels[first].copy(), labels[second].copy()),
        tasks=(classification_task("L", 10), classification_task("R", 10)),
    )
