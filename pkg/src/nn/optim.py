from typing import Dict, Iterable

import numpy as np

from src.core.constants import Constants
from src.models.config import OptimizerConfig


class Optimizer:
    """In-place update of named parameter blocks; state is keyed by block name."""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate
        self.steps = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], names: Iterable[str]):
        self.steps += 1
        for name in names:
            self._update(name, params[name], grads[name])

    def _update(self, name: str, param: np.ndarray, grad: np.ndarray):
        raise NotImplementedError


class SGD(Optimizer):
    def __init__(self, learning_rate: float, momentum: float = 0.0):
        super().__init__(learning_rate)
        self.momentum = momentum
        self.velocity: Dict[str, np.ndarray] = {}

    def _update(self, name: str, param: np.ndarray, grad: np.ndarray):
        if self.momentum:
            velocity = self.velocity.get(name)
            velocity = grad.copy() if velocity is None else self.momentum * velocity + grad
            self.velocity[name] = velocity
            param -= self.learning_rate * velocity
        else:
            param -= self.learning_rate * grad


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def _update(self, name: str, param: np.ndarray, grad: np.ndarray):
        m = self.m.get(name)
        v = self.v.get(name)
        if m is None:
            m = np.zeros_like(param)
            v = np.zeros_like(param)
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        self.m[name] = m
        self.v[name] = v
        m_hat = m / (1.0 - self.beta1 ** self.steps)
        v_hat = v / (1.0 - self.beta2 ** self.steps)
        param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def build_optimizer(config: OptimizerConfig, learning_rate: float) -> Optimizer:
    if config.name == Constants.OPTIMIZER_SGD:
        return SGD(learning_rate, momentum=config.momentum)
    return Adam(learning_rate, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
