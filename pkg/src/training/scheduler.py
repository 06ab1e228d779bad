"""Per-batch preference vectors: evenly spaced simplex grids, annealing and Dirichlet draws.

Training preferences always lie on the simplex ``{w >= 0, sum w = 1}``. The deterministic
schedule starts every base vector at the simplex center and sharpens it towards its face as
training time ``tau`` goes from 0 to 1.
"""

from math import comb, isqrt
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from src.core.constants import Constants
from src.core.exceptions import DomainError
from src.models.config import ScheduleConfig

PreferenceVector = np.ndarray


def uniform_preference(num_tasks: int) -> PreferenceVector:
    return np.full(num_tasks, 1.0 / num_tasks)


def on_simplex(preference: Sequence[float], tol: float = Constants.SIMPLEX_TOLERANCE) -> bool:
    lam = np.asarray(preference, dtype=np.float64)
    return bool(np.all(lam >= -tol) and abs(lam.sum() - 1.0) <= tol)


def lattice_resolution(m: int) -> int:
    """n such that C(n + 2, 2) == m, or -1 when m is not a triangular lattice size."""
    n = (isqrt(8 * m + 1) - 3) // 2
    return n if n >= 1 and comb(n + 2, 2) == m else -1


def base_grid(num_tasks: int, m: int) -> List[PreferenceVector]:
    if num_tasks == 2:
        if m < 2:
            raise DomainError("a two-task grid needs at least 2 points")
        return [np.array([i / (m - 1), 1.0 - i / (m - 1)]) for i in range(m)]
    if num_tasks == 3:
        n = lattice_resolution(m)
        if n < 0:
            raise DomainError(f"{m} is not a triangular lattice size C(n+2, 2)")
        return [
            np.array([i / n, j / n, (n - i - j) / n])
            for i in range(n + 1)
            for j in range(n - i + 1)
        ]
    raise DomainError(f"simplex grids are only defined for 2 or 3 tasks, got {num_tasks}")


def anneal(base: Sequence[PreferenceVector], tau: float, temperature: float) -> List[PreferenceVector]:
    """lambda_t <- lambda_t^(tau / T_max), renormalized; numpy evaluates 0^0 as 1."""
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")
    exponent = tau / temperature
    annealed = []
    for vector in base:
        powered = np.power(np.asarray(vector, dtype=np.float64), exponent)
        annealed.append(powered / powered.sum())
    return annealed


def sample_dirichlet(
    num_tasks: int, m: int, concentration: float, rng: np.random.Generator
) -> List[PreferenceVector]:
    """Symmetric Dirichlet draws as normalized Gamma variates, computed in log space.

    Shapes below 1 use the boost Gamma(a) = Gamma(a + 1) * U^(1/a); keeping the logarithm
    avoids the all-zero rows that direct sampling produces at tiny concentrations.
    """
    if concentration <= 0:
        raise DomainError("Dirichlet concentration must be positive")
    if concentration < 1.0:
        gammas = rng.gamma(concentration + 1.0, 1.0, size=(m, num_tasks))
        uniforms = 1.0 - rng.random(size=(m, num_tasks))
        log_draws = np.log(gammas) + np.log(uniforms) / concentration
    else:
        log_draws = np.log(rng.gamma(concentration, 1.0, size=(m, num_tasks)))
    weights = np.exp(log_draws - logsumexp(log_draws, axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    return [row for row in weights]


def schedule_time(step: int, total_steps: int) -> float:
    if total_steps < 1 or not 0 <= step < total_steps:
        raise DomainError(f"step {step} outside [0, {total_steps})")
    if total_steps == 1:
        return 0.0
    return step / (total_steps - 1)


def preferences_for_step(config: ScheduleConfig, step: int, total_steps: int) -> List[PreferenceVector]:
    """Preferences of one optimizer step; a pure function of (config, step, total_steps)."""
    tau = schedule_time(step, total_steps)
    num_tasks = config.num_tasks
    if num_tasks is None:
        raise DomainError("schedule num_tasks is not set")

    if config.mode == Constants.SCHEDULE_FIXED:
        if config.fixed_preference is not None:
            return [np.asarray(config.fixed_preference, dtype=np.float64)]
        return [uniform_preference(num_tasks)]

    if config.mode == Constants.SCHEDULE_DETERMINISTIC:
        grid = base_grid(num_tasks, config.samples_per_batch)
        return anneal(grid, tau if config.annealed else 1.0, config.temperature)

    # every step gets its own stream, so the draw does not depend on call history
    rng = np.random.default_rng([config.seed or 0, step])
    concentration = config.concentration
    if config.annealed:
        concentration = max(concentration * (1.0 - tau), Constants.DIRICHLET_MIN_CONCENTRATION)
    return sample_dirichlet(num_tasks, config.samples_per_batch, concentration, rng)


def default_grid_size(num_tasks: int) -> int:
    return Constants.DEFAULT_EVAL_GRID_2 if num_tasks == 2 else comb(5 + 2, 2)


def eval_grid(num_tasks: int, size: Optional[int] = None) -> List[PreferenceVector]:
    """Evenly spaced evaluation grid; a single point means the simplex center."""
    if num_tasks not in (2, 3):
        raise DomainError(f"evaluation grids are only defined for 2 or 3 tasks, got {num_tasks}")
    size = default_grid_size(num_tasks) if size is None else size
    if size == 1:
        return [uniform_preference(num_tasks)]
    return base_grid(num_tasks, size)


class PreferenceScheduler:
    """Binds a schedule to the length of one training run."""

    def __init__(self, config: ScheduleConfig, total_steps: int):
        self.config = config
        self.total_steps = total_steps

    def __call__(self, step: int) -> List[PreferenceVector]:
        return preferences_for_step(self.config, step, self.total_steps)
