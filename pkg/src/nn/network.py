"""Multi-head network whose encoder and heads are all PaLoRA layers."""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.core.constants import Constants
from src.core.exceptions import ShapeError
from src.models.config import ModelSpec
from src.nn.palora_layer import LinearLayer, PaLoRALayer, ParamCount
from src.nn.tensor_core import ACTIVATIONS, DenseMatrix, mse, softmax_cross_entropy


@dataclass
class ForwardCache:
    layer_inputs: List[DenseMatrix]
    pre_activations: List[DenseMatrix]
    features: DenseMatrix


def task_losses(
    spec: ModelSpec, outputs: Sequence[DenseMatrix], targets: Sequence[np.ndarray]
) -> Tuple[np.ndarray, List[DenseMatrix]]:
    """Per-task batch-mean losses and their gradients w.r.t. each task output."""
    if len(targets) != spec.task_count:
        raise ShapeError(f"{len(targets)} target blocks for {spec.task_count} tasks")
    losses = np.zeros(spec.task_count)
    grads: List[DenseMatrix] = []
    for t, head in enumerate(spec.heads):
        if head.loss == Constants.LOSS_CLASSIFICATION:
            losses[t], grad = softmax_cross_entropy(outputs[t], targets[t])
        else:
            losses[t], grad = mse(outputs[t], targets[t])
        grads.append(grad)
    return losses, grads


def task_metrics(
    spec: ModelSpec, outputs: Sequence[DenseMatrix], targets: Sequence[np.ndarray]
) -> np.ndarray:
    """Accuracy for classification heads, RMSE for regression heads."""
    metrics = np.zeros(spec.task_count)
    for t, head in enumerate(spec.heads):
        if head.loss == Constants.LOSS_CLASSIFICATION:
            predicted = np.argmax(outputs[t], axis=1)
            metrics[t] = float(np.mean(predicted == np.asarray(targets[t]).reshape(-1)))
        else:
            diff = outputs[t] - targets[t]
            metrics[t] = float(np.sqrt(np.mean(diff * diff)))
    return metrics


@dataclass
class MergedNetwork:
    """Adapter-free snapshot of a network at one preference."""

    spec: ModelSpec
    encoder: List[LinearLayer]
    heads: List[LinearLayer]

    def forward(self, x: DenseMatrix) -> List[DenseMatrix]:
        activation = ACTIVATIONS[self.spec.activation]
        h = x
        for layer in self.encoder:
            z = layer.forward(h)
            h, _ = activation(z, z)
        outputs = [head.forward(h) for head in self.heads]
        if self.spec.shared_head:
            return [outputs[0]] * self.spec.task_count
        return outputs


class PaLoRANetwork:
    def __init__(self, spec: ModelSpec, encoder: List[PaLoRALayer], heads: List[PaLoRALayer]):
        self.spec = spec
        self.encoder = encoder
        self.heads = heads

    @classmethod
    def build(cls, spec: ModelSpec, seed: int) -> "PaLoRANetwork":
        """Deterministic construction; every layer draws from its own spawned seed."""
        T = spec.task_count
        widths = [spec.input_dim] + list(spec.encoder_dims)
        head_dims = [spec.heads[0].out_dim] if spec.shared_head else [h.out_dim for h in spec.heads]
        seeds = np.random.SeedSequence(seed).spawn(len(widths) - 1 + len(head_dims))

        encoder = [
            PaLoRALayer.init(widths[i + 1], widths[i], T, spec.rank, spec.alpha, seeds[i], name=f"encoder.{i}")
            for i in range(len(widths) - 1)
        ]
        offset = len(encoder)
        heads = [
            PaLoRALayer.init(
                out_dim,
                widths[-1],
                T,
                min(spec.rank, out_dim, widths[-1]),
                spec.alpha,
                seeds[offset + i],
                name="head.shared" if spec.shared_head else f"head.{i}",
            )
            for i, out_dim in enumerate(head_dims)
        ]
        return cls(spec, encoder, heads)

    @property
    def layers(self) -> List[PaLoRALayer]:
        return self.encoder + self.heads

    @property
    def num_tasks(self) -> int:
        return self.spec.task_count

    def forward(self, preference: Sequence[float], x: DenseMatrix) -> Tuple[List[DenseMatrix], ForwardCache]:
        activation = ACTIVATIONS[self.spec.activation]
        layer_inputs: List[DenseMatrix] = []
        pre_activations: List[DenseMatrix] = []
        h = x
        for layer in self.encoder:
            layer_inputs.append(h)
            z = layer.forward(preference, h)
            pre_activations.append(z)
            h, _ = activation(z, z)
        outputs = [head.forward(preference, h) for head in self.heads]
        if self.spec.shared_head:
            outputs = [outputs[0]] * self.num_tasks
        return outputs, ForwardCache(layer_inputs, pre_activations, h)

    def predict(self, preference: Sequence[float], x: DenseMatrix) -> List[DenseMatrix]:
        outputs, _ = self.forward(preference, x)
        return outputs

    def backward(
        self, preference: Sequence[float], cache: ForwardCache, upstreams: Sequence[DenseMatrix]
    ) -> Dict[str, np.ndarray]:
        """Gradients of sum_t <upstream_t, output_t> for every named parameter block."""
        grads: Dict[str, np.ndarray] = {}
        if self.spec.shared_head:
            head_upstreams = [sum(upstreams[1:], upstreams[0])]
        else:
            head_upstreams = list(upstreams)

        dh = None
        for head, upstream in zip(self.heads, head_upstreams):
            layer_grads, dx = head.backward(preference, cache.features, upstream)
            grads.update(head.gradient_blocks(layer_grads))
            dh = dx if dh is None else dh + dx

        activation = ACTIVATIONS[self.spec.activation]
        for i in reversed(range(len(self.encoder))):
            layer = self.encoder[i]
            _, dz = activation(cache.pre_activations[i], dh)
            layer_grads, dh = layer.backward(preference, cache.layer_inputs[i], dz)
            grads.update(layer.gradient_blocks(layer_grads))
        return grads

    def merge(self, preference: Sequence[float]) -> MergedNetwork:
        return MergedNetwork(
            spec=self.spec,
            encoder=[layer.merge(preference) for layer in self.encoder],
            heads=[head.merge(preference) for head in self.heads],
        )

    def parameters(self) -> Dict[str, np.ndarray]:
        blocks: Dict[str, np.ndarray] = {}
        for layer in self.layers:
            blocks.update(layer.parameters())
        return blocks

    def base_block_names(self) -> List[str]:
        return [name for layer in self.layers for name in layer.parameters() if layer.is_base_block(name)]

    def trainable_block_names(self) -> List[str]:
        names: List[str] = []
        for layer in self.layers:
            for name in layer.parameters():
                base = layer.is_base_block(name)
                if (base and not layer.base_frozen) or (not base and not layer.adapters_frozen):
                    names.append(name)
        return names

    def param_count(self) -> ParamCount:
        counts = [layer.param_count() for layer in self.layers]
        return ParamCount(
            base=sum(c.base for c in counts),
            bias=sum(c.bias for c in counts),
            adapters=sum(c.adapters for c in counts),
        )

    def set_base_frozen(self, frozen: bool):
        for layer in self.layers:
            layer.base_frozen = frozen

    def set_adapters_frozen(self, frozen: bool):
        for layer in self.layers:
            layer.adapters_frozen = frozen

    def copy(self) -> "PaLoRANetwork":
        return PaLoRANetwork(
            self.spec.model_copy(deep=True),
            [layer.copy() for layer in self.encoder],
            [head.copy() for head in self.heads],
        )
