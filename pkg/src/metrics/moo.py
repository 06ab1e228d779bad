"""Multi-objective evaluation of loss-space fronts (all objectives are minimized)."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from src.core.constants import Constants
from src.core.exceptions import DataError, DomainError, ShapeError
from src.models.records import FrontRecord


def _as_points(points) -> np.ndarray:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(1, -1)
    return array


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff a is no worse than b everywhere and differs from it."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare points of lengths {a.shape} and {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_filter(points) -> List[int]:
    """Indices of points no other point dominates; equal points are all kept."""
    P = _as_points(points)
    if P.shape[0] == 0 or P.size == 0:
        raise DataError("nondominated_filter needs at least one point")
    keep = []
    for i in range(P.shape[0]):
        no_worse = np.all(P <= P[i], axis=1)
        better = np.any(P < P[i], axis=1)
        if not np.any(no_worse & better):
            keep.append(i)
    return keep


def nondominated_mask(points) -> np.ndarray:
    P = _as_points(points)
    mask = np.zeros(P.shape[0], dtype=bool)
    mask[nondominated_filter(P)] = True
    return mask


def _check_reference(ref, num_objectives: int) -> np.ndarray:
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(ref)):
        raise DomainError("reference point must be finite")
    if ref.shape[0] != num_objectives:
        raise ShapeError(f"reference has {ref.shape[0]} entries for {num_objectives} objectives")
    return ref


def _dominating_ref(P: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return P[np.all(P < ref, axis=1)]


def _hypervolume_2d(P: np.ndarray, ref: np.ndarray) -> float:
    if P.shape[0] == 0:
        return 0.0
    order = np.lexsort((P[:, 1], P[:, 0]))
    xs = P[order, 0]
    ys = P[order, 1]
    next_x = np.append(xs[1:], ref[0])
    best_y = np.minimum.accumulate(ys)
    return float(np.sum((next_x - xs) * (ref[1] - best_y)))


def _hypervolume_3d(P: np.ndarray, ref: np.ndarray) -> float:
    if P.shape[0] == 0:
        return 0.0
    order = np.argsort(P[:, 2], kind="stable")
    P = P[order]
    next_z = np.append(P[1:, 2], ref[2])
    volume = 0.0
    for i in range(P.shape[0]):
        height = next_z[i] - P[i, 2]
        if height > 0:
            volume += _hypervolume_2d(P[: i + 1, :2], ref[:2]) * height
    return float(volume)


def hypervolume(points, ref) -> float:
    """Lebesgue measure of the union of boxes [p, ref] over points strictly dominating ref."""
    P = _as_points(points)
    num_objectives = P.shape[1] if P.size else len(ref)
    ref = _check_reference(ref, num_objectives)
    if num_objectives not in (2, 3):
        raise DomainError(f"exact hypervolume supports 2 or 3 objectives, got {num_objectives}")
    if P.size == 0:
        return 0.0
    P = _dominating_ref(P, ref)
    if num_objectives == 2:
        return _hypervolume_2d(P, ref)
    return _hypervolume_3d(P, ref)


def hypervolume_mc(points, ref, n_samples: int, seed: int) -> Tuple[float, float]:
    """Monte Carlo hypervolume estimate and its standard error."""
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    P = _as_points(points)
    ref = _check_reference(ref, P.shape[1])
    P = _dominating_ref(P, ref)
    if P.shape[0] == 0:
        return 0.0, 0.0
    low = P.min(axis=0)
    box_volume = float(np.prod(ref - low))
    if box_volume <= 0.0:
        return 0.0, 0.0

    rng = np.random.default_rng(seed)
    samples = rng.uniform(low, ref, size=(n_samples, P.shape[1]))
    dominated = np.zeros(n_samples, dtype=bool)
    for point in P:
        dominated |= np.all(samples >= point, axis=1)
    fraction = float(dominated.mean())
    std_error = box_volume * np.sqrt(fraction * (1.0 - fraction) / n_samples)
    return fraction * box_volume, float(std_error)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties; 0 when either side is constant."""
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    if xs.shape != ys.shape:
        raise ShapeError(f"spearman needs equal lengths, got {xs.shape[0]} and {ys.shape[0]}")
    if xs.shape[0] < 2:
        raise DomainError("spearman needs at least two observations")
    rx = rankdata(xs, method="average")
    ry = rankdata(ys, method="average")
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return 0.0
    rho = np.corrcoef(rx, ry)[0, 1]
    return float(np.clip(rho, -1.0, 1.0))


def pareto_alignment(front: Sequence[FrontRecord]) -> np.ndarray:
    """Per-task spearman(lambda_t, loss_t) across the front; negative means aligned."""
    distinct = {tuple(record.preference) for record in front}
    if len(distinct) < 2:
        raise DomainError("pareto_alignment needs at least two distinct preferences")
    preferences = np.array([record.preference for record in front])
    losses = np.array([record.losses for record in front])
    return np.array([spearman(preferences[:, t], losses[:, t]) for t in range(losses.shape[1])])


def auto_reference(losses) -> np.ndarray:
    """Reference point a fixed factor beyond the worst loss of each task."""
    return Constants.AUTO_REFERENCE_FACTOR * _as_points(losses).max(axis=0)


def summarize_front(front: Sequence[FrontRecord], ref: Optional[Sequence[float]] = None) -> dict:
    """HV, alignment and nondominated count of an evaluated front."""
    losses = np.array([record.losses for record in front])
    reference = auto_reference(losses) if ref is None else np.asarray(ref, dtype=np.float64)
    hv = hypervolume(losses, reference) if losses.shape[1] in (2, 3) else float("nan")
    if len({tuple(record.preference) for record in front}) >= 2:
        alignment = pareto_alignment(front).tolist()
    else:
        alignment = [0.0] * losses.shape[1]
    return {
        "hv": hv,
        "hv_reference": reference.tolist(),
        "alignment": alignment,
        "nondominated_count": len(nondominated_filter(losses)),
        "num_points": len(front),
    }
