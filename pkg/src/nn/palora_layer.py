"""Linear layer with task-specific low-rank adapters composed by a preference vector.

The effective weight is ``W + (alpha / r) * sum_t lambda_t A_t B_t`` with ``W`` of shape
``n x m`` (out x in), ``A_t`` of shape ``n x r`` and ``B_t`` of shape ``r x m``. Inputs follow the
batch-rows convention, so a batch ``x`` of shape ``batch x m`` maps to ``x W_eff^T + bias``.
"""

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import DomainError, ShapeError
from src.nn.tensor_core import DenseMatrix


def as_preference(preference: Sequence[float], num_tasks: int) -> np.ndarray:
    lam = np.asarray(preference, dtype=np.float64).reshape(-1)
    if lam.shape[0] != num_tasks:
        raise ShapeError(f"preference has {lam.shape[0]} entries, layer has {num_tasks} adapters")
    return lam


class ParamCount(NamedTuple):
    base: int
    bias: int
    adapters: int

    @property
    def total(self) -> int:
        return self.base + self.bias + self.adapters

    @property
    def overhead(self) -> float:
        """Adapter parameters relative to the plain layer."""
        return self.adapters / (self.base + self.bias)


@dataclass
class LayerGradients:
    dW: DenseMatrix
    dbias: np.ndarray
    dA: List[DenseMatrix]
    dB: List[DenseMatrix]


@dataclass
class LinearLayer:
    """Frozen single-matrix layer, the result of merging adapters at one preference."""

    weight: DenseMatrix
    bias: np.ndarray

    def forward(self, x: DenseMatrix) -> DenseMatrix:
        if x.shape[1] != self.weight.shape[1]:
            raise ShapeError(f"input width {x.shape[1]} != layer input {self.weight.shape[1]}")
        return x @ self.weight.T + self.bias


@dataclass
class PaLoRALayer:
    W: DenseMatrix
    bias: np.ndarray
    A: List[DenseMatrix]
    B: List[DenseMatrix]
    rank: int
    alpha: float
    base_frozen: bool = False
    adapters_frozen: bool = False
    name: str = field(default="layer")

    def __post_init__(self):
        n, m = self.W.shape
        if not self.A or len(self.A) != len(self.B):
            raise ShapeError("a layer needs the same number (>= 1) of A and B adapters")
        if self.rank < 1 or self.rank > min(n, m):
            raise ShapeError(f"rank {self.rank} must lie in [1, min({n}, {m})]")
        for a, b in zip(self.A, self.B):
            if a.shape != (n, self.rank) or b.shape != (self.rank, m):
                raise ShapeError(
                    f"adapter shapes {a.shape}, {b.shape} do not match n={n}, m={m}, r={self.rank}"
                )
        if self.bias.shape != (n,):
            raise ShapeError(f"bias shape {self.bias.shape} != ({n},)")
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")

    @classmethod
    def init(
        cls,
        n: int,
        m: int,
        num_tasks: int,
        rank: int,
        alpha: float,
        seed,
        name: str = "layer",
    ) -> "PaLoRALayer":
        """Kaiming fan-in base weight, Gaussian A_t with std 1/sqrt(m), zero B_t."""
        if n < 1 or m < 1:
            raise ShapeError(f"invalid layer dims n={n}, m={m}")
        if num_tasks < 1:
            raise ShapeError("at least one task adapter is required")
        if rank < 1 or rank > min(n, m):
            raise ShapeError(f"rank {rank} must lie in [1, min({n}, {m})]")
        rng = np.random.default_rng(seed)
        W = rng.normal(0.0, np.sqrt(2.0 / m), size=(n, m))
        A = [rng.normal(0.0, 1.0 / np.sqrt(m), size=(n, rank)) for _ in range(num_tasks)]
        B = [np.zeros((rank, m)) for _ in range(num_tasks)]
        return cls(W=W, bias=np.zeros(n), A=A, B=B, rank=rank, alpha=float(alpha), name=name)

    @property
    def num_tasks(self) -> int:
        return len(self.A)

    @property
    def in_features(self) -> int:
        return self.W.shape[1]

    @property
    def out_features(self) -> int:
        return self.W.shape[0]

    @property
    def scale(self) -> float:
        return self.alpha / self.rank

    def compose_effective_weight(self, preference: Sequence[float]) -> DenseMatrix:
        lam = as_preference(preference, self.num_tasks)
        weight = self.W.copy()
        for t in range(self.num_tasks):
            # zero weights leave W untouched bit-for-bit
            if lam[t] != 0.0:
                weight = weight + (self.scale * lam[t]) * (self.A[t] @ self.B[t])
        return weight

    def _check_input(self, x: DenseMatrix):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"input shape {x.shape} incompatible with layer input {self.in_features}")

    def forward(self, preference: Sequence[float], x: DenseMatrix) -> DenseMatrix:
        self._check_input(x)
        return x @ self.compose_effective_weight(preference).T + self.bias

    def forward_factored(self, preference: Sequence[float], x: DenseMatrix) -> DenseMatrix:
        """W x + (alpha/r) sum_t lambda_t A_t (B_t x), never materializing the n x m residual."""
        self._check_input(x)
        lam = as_preference(preference, self.num_tasks)
        out = x @ self.W.T + self.bias
        for t in range(self.num_tasks):
            if lam[t] != 0.0:
                out = out + (self.scale * lam[t]) * ((x @ self.B[t].T) @ self.A[t].T)
        return out

    def backward(
        self, preference: Sequence[float], x: DenseMatrix, upstream: DenseMatrix
    ) -> Tuple[LayerGradients, DenseMatrix]:
        self._check_input(x)
        lam = as_preference(preference, self.num_tasks)
        if upstream.shape != (x.shape[0], self.out_features):
            raise ShapeError(f"upstream shape {upstream.shape} != ({x.shape[0]}, {self.out_features})")

        # dL/dW_eff, shared by the base and every adapter
        contraction = upstream.T @ x
        if self.base_frozen:
            dW = np.zeros_like(self.W)
            dbias = np.zeros_like(self.bias)
        else:
            dW = contraction
            dbias = upstream.sum(axis=0)

        dA: List[DenseMatrix] = []
        dB: List[DenseMatrix] = []
        for t in range(self.num_tasks):
            gate = self.scale * lam[t]
            if self.adapters_frozen or gate == 0.0:
                dA.append(np.zeros_like(self.A[t]))
                dB.append(np.zeros_like(self.B[t]))
            else:
                dA.append(gate * (contraction @ self.B[t].T))
                dB.append(gate * (self.A[t].T @ contraction))

        dx = upstream @ self.compose_effective_weight(lam)
        return LayerGradients(dW=dW, dbias=dbias, dA=dA, dB=dB), dx

    def param_count(self) -> ParamCount:
        n, m = self.W.shape
        return ParamCount(base=n * m, bias=n, adapters=self.num_tasks * self.rank * (m + n))

    def merge(self, preference: Sequence[float]) -> LinearLayer:
        return LinearLayer(weight=self.compose_effective_weight(preference), bias=self.bias.copy())

    def parameters(self) -> Dict[str, np.ndarray]:
        """Named parameter blocks; arrays are shared with the layer, not copied."""
        blocks = {f"{self.name}.weight": self.W, f"{self.name}.bias": self.bias}
        for t in range(self.num_tasks):
            blocks[f"{self.name}.adapter{t}.A"] = self.A[t]
            blocks[f"{self.name}.adapter{t}.B"] = self.B[t]
        return blocks

    def gradient_blocks(self, grads: LayerGradients) -> Dict[str, np.ndarray]:
        blocks = {f"{self.name}.weight": grads.dW, f"{self.name}.bias": grads.dbias}
        for t in range(self.num_tasks):
            blocks[f"{self.name}.adapter{t}.A"] = grads.dA[t]
            blocks[f"{self.name}.adapter{t}.B"] = grads.dB[t]
        return blocks

    def is_base_block(self, block_name: str) -> bool:
        return block_name in (f"{self.name}.weight", f"{self.name}.bias")

    def copy(self) -> "PaLoRALayer":
        return PaLoRALayer(
            W=self.W.copy(),
            bias=self.bias.copy(),
            A=[a.copy() for a in self.A],
            B=[b.copy() for b in self.B],
            rank=self.rank,
            alpha=self.alpha,
            base_frozen=self.base_frozen,
            adapters_frozen=self.adapters_frozen,
            name=self.name,
        )
