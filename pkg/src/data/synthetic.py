"""Linear two-objective regression with a closed-form Pareto front.

Targets are ``y_t = <c_t, x> + noise`` with ``x ~ N(0, I)``, ``c_1 = a`` and ``c_2 = b``. For a
linear predictor ``theta`` the population loss of task t is ``||theta - c_t||^2 + noise^2``, so the
Pareto set is the segment between ``a`` and ``b``.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.exceptions import DomainError
from src.data.dataset import LabeledDataset, regression_task
from src.models.config import SyntheticSpec


@dataclass(frozen=True)
class SyntheticProblem:
    anchor_a: np.ndarray
    anchor_b: np.ndarray
    input_dim: int
    num_samples: int
    noise: float = 0.01

    def __post_init__(self):
        if self.anchor_a.shape != (self.input_dim,) or self.anchor_b.shape != (self.input_dim,):
            raise DomainError(f"anchors must have length input_dim={self.input_dim}")
        if np.array_equal(self.anchor_a, self.anchor_b):
            raise DomainError("anchors a and b must differ")

    @property
    def noise_floor(self) -> float:
        return self.noise ** 2

    @classmethod
    def symmetric(cls, input_dim: int = 5, num_samples: int = 10000, noise: float = 0.01) -> "SyntheticProblem":
        """Unit anchors on the first two axes."""
        a = np.zeros(input_dim)
        b = np.zeros(input_dim)
        a[0] = 1.0
        b[1] = 1.0
        return cls(anchor_a=a, anchor_b=b, input_dim=input_dim, num_samples=num_samples, noise=noise)

    @classmethod
    def from_spec(cls, spec: SyntheticSpec) -> "SyntheticProblem":
        if spec.anchor_a is None or spec.anchor_b is None:
            return cls.symmetric(spec.input_dim, spec.num_samples, spec.noise)
        return cls(
            anchor_a=np.asarray(spec.anchor_a, dtype=np.float64),
            anchor_b=np.asarray(spec.anchor_b, dtype=np.float64),
            input_dim=spec.input_dim,
            num_samples=spec.num_samples,
            noise=spec.noise,
        )


def synthetic_two_objective(problem: SyntheticProblem, seed: int) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((problem.num_samples, problem.input_dim))
    noise = problem.noise * rng.standard_normal((problem.num_samples, 2))
    y_a = (x @ problem.anchor_a + noise[:, 0]).reshape(-1, 1)
    y_b = (x @ problem.anchor_b + noise[:, 1]).reshape(-1, 1)
    return LabeledDataset(
        inputs=x,
        targets=(y_a, y_b),
        tasks=(regression_task("task1"), regression_task("task2")),
    )


def population_losses(
    problem: SyntheticProblem, theta: np.ndarray, bias: Optional[float] = 0.0
) -> Tuple[float, float]:
    """Closed-form expected squared errors of the predictor <theta, x> + bias."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    offset = float(bias or 0.0) ** 2 + problem.noise_floor
    return (
        float(np.sum((theta - problem.anchor_a) ** 2)) + offset,
        float(np.sum((theta - problem.anchor_b) ** 2)) + offset,
    )


def analytic_front(problem: SyntheticProblem, K: int) -> np.ndarray:
    """K loss points along theta(s) = (1 - s) a + s b, s evenly spaced in [0, 1]."""
    if K < 2:
        raise DomainError("analytic_front needs K >= 2")
    points = []
    for s in np.linspace(0.0, 1.0, K):
        theta = (1.0 - s) * problem.anchor_a + s * problem.anchor_b
        points.append(population_losses(problem, theta))
    return np.array(points)
