import itertools

import numpy as np
import pytest

from src.core.exceptions import DataError, DomainError, ShapeError
from src.metrics.moo import (
    auto_reference,
    dominates,
    hypervolume,
    hypervolume_mc,
    nondominated_filter,
    pareto_alignment,
    spearman,
    summarize_front,
)
from src.models.records import FrontRecord


def brute_force_nondominated(points):
    return [i for i, p in enumerate(points) if not any(dominates(q, p) for q in points)]


def test_dominates_examples():
    assert dominates([1, 2], [2, 2])
    assert not dominates([1, 2], [1, 2])
    assert not dominates([1, 3], [2, 2])


def test_dominates_length_mismatch():
    with pytest.raises(ShapeError):
        dominates([1, 2], [1, 2, 3])


def test_dominance_is_a_strict_partial_order():
    rng = np.random.default_rng(0)
    points = rng.integers(0, 3, size=(25, 2)).astype(float)
    for p in points:
        assert not dominates(p, p)
    for p, q, r in itertools.product(points[:10], repeat=3):
        if dominates(p, q) and dominates(q, r):
            assert dominates(p, r)


def test_nondominated_filter_examples():
    assert nondominated_filter([[1, 2], [2, 1], [2, 2]]) == [0, 1]
    assert nondominated_filter([[0, 0], [1, 1]]) == [0]
    assert nondominated_filter([[1, 1], [1, 1]]) == [0, 1]


def test_nondominated_filter_empty():
    with pytest.raises(DataError):
        nondominated_filter(np.zeros((0, 2)))


def test_nondominated_filter_matches_brute_force():
    rng = np.random.default_rng(1)
    for trial in range(200):
        num_objectives = 2 if trial % 2 == 0 else 3
        points = rng.uniform(size=(int(rng.integers(1, 30)), num_objectives))
        if trial % 5 == 0:
            points = np.round(points * 4) / 4  # force ties and duplicates
        kept = nondominated_filter(points)
        assert kept == brute_force_nondominated(points)
        survivors = points[kept]
        for i, j in itertools.permutations(range(len(survivors)), 2):
            assert not dominates(survivors[i], survivors[j])


def test_hypervolume_examples():
    assert hypervolume([[0.5, 0.5]], [1.0, 1.0]) == 0.25
    assert hypervolume([[0.2, 0.8], [0.8, 0.2]], [1.0, 1.0]) == pytest.approx(0.28, abs=1e-15)
    assert hypervolume([[0.5, 0.5, 0.5]], [1.0, 1.0, 1.0]) == pytest.approx(0.125, abs=1e-15)
    assert hypervolume([[0.0, 0.0, 0.5], [0.5, 0.5, 0.0]], [1.0, 1.0, 1.0]) == pytest.approx(0.625, abs=1e-15)


def test_hypervolume_ignores_points_outside_reference():
    assert hypervolume([[1.5, 0.1]], [1.0, 1.0]) == 0.0
    assert hypervolume([[1.0, 0.1]], [1.0, 1.0]) == 0.0
    assert hypervolume(np.zeros((0, 2)), [1.0, 1.0]) == 0.0


def test_hypervolume_properties():
    rng = np.random.default_rng(2)
    ref = np.array([1.1, 1.1])
    for _ in range(30):
        points = rng.uniform(size=(8, 2))
        hv = hypervolume(points, ref)
        assert hypervolume(points[rng.permutation(8)], ref) == pytest.approx(hv, abs=1e-12)
        assert hypervolume(np.vstack([points, points[:3]]), ref) == pytest.approx(hv, abs=1e-12)
        dominated = points[0] + 0.01
        assert hypervolume(np.vstack([points, dominated]), ref) == pytest.approx(hv, abs=1e-12)
        assert hypervolume(np.vstack([points, rng.uniform(size=(1, 2))]), ref) >= hv - 1e-12


def test_hypervolume_2d_closed_form():
    rng = np.random.default_rng(3)
    ref = np.array([1.0, 1.0])
    points = rng.uniform(size=(12, 2))
    front = points[nondominated_filter(points)]
    front = front[np.argsort(front[:, 0])]
    next_x = np.append(front[1:, 0], ref[0])
    expected = float(np.sum((next_x - front[:, 0]) * (ref[1] - front[:, 1])))
    assert hypervolume(points, ref) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("ref", [[1.0, np.inf], [1.0, np.nan]])
def test_hypervolume_rejects_nonfinite_reference(ref):
    with pytest.raises(DomainError):
        hypervolume([[0.5, 0.5]], ref)


def test_hypervolume_rejects_four_objectives():
    with pytest.raises(DomainError):
        hypervolume([[0.1, 0.1, 0.1, 0.1]], [1.0, 1.0, 1.0, 1.0])


@pytest.mark.parametrize("num_objectives", [2, 3])
def test_hypervolume_agrees_with_monte_carlo(num_objectives):
    rng = np.random.default_rng(10 + num_objectives)
    ref = np.full(num_objectives, 1.1)
    agreements = 0
    for trial in range(50):
        points = rng.uniform(size=(5, num_objectives))
        exact = hypervolume(points, ref)
        estimate, stderr = hypervolume_mc(points, ref, 1_000_000, seed=trial)
        if abs(exact - estimate) <= 3.0 * stderr + 1e-12:
            agreements += 1
    assert agreements >= 48


def test_hypervolume_mc_without_dominating_points():
    assert hypervolume_mc([[2.0, 2.0]], [1.0, 1.0], 100, seed=0) == (0.0, 0.0)


def test_spearman_examples():
    assert spearman([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert spearman([1, 1, 1], [1, 2, 3]) == 0.0
    assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)


def test_spearman_is_rank_based():
    rng = np.random.default_rng(4)
    xs, ys = rng.normal(size=20), rng.normal(size=20)
    rho = spearman(xs, ys)
    assert spearman(np.exp(xs), ys ** 3) == pytest.approx(rho, abs=1e-12)
    assert -1.0 <= rho <= 1.0


def test_spearman_needs_two_points():
    with pytest.raises(DomainError):
        spearman([1.0], [2.0])
    with pytest.raises(ShapeError):
        spearman([1.0, 2.0], [1.0, 2.0, 3.0])


def front_from(preferences, losses):
    return [
        FrontRecord(preference=list(p), losses=list(l), task_metrics=[0.0] * len(l), nondominated=True)
        for p, l in zip(preferences, losses)
    ]


def test_pareto_alignment_on_ideal_front():
    preferences = [[i / 4, 1 - i / 4] for i in range(5)]
    losses = [[1 - p[0], 1 - p[1]] for p in preferences]
    np.testing.assert_allclose(pareto_alignment(front_from(preferences, losses)), [-1.0, -1.0])


def test_pareto_alignment_on_constant_front():
    preferences = [[i / 4, 1 - i / 4] for i in range(5)]
    losses = [[0.3, 0.7]] * 5
    np.testing.assert_array_equal(pareto_alignment(front_from(preferences, losses)), [0.0, 0.0])


def test_pareto_alignment_matches_rank_formula():
    rng = np.random.default_rng(5)
    preferences = [[i / 9, 1 - i / 9] for i in range(10)]
    losses = rng.uniform(size=(10, 2))
    lam = np.array(preferences)

    def ranks(values):
        out = np.empty(len(values))
        out[np.argsort(values)] = np.arange(len(values))
        return out

    for t, rho in enumerate(pareto_alignment(front_from(preferences, losses))):
        d = ranks(lam[:, t]) - ranks(losses[:, t])
        assert rho == pytest.approx(1 - 6 * np.sum(d * d) / (10 * 99), abs=1e-12)


def test_pareto_alignment_needs_distinct_preferences():
    with pytest.raises(DomainError):
        pareto_alignment(front_from([[0.5, 0.5]] * 3, [[0.1, 0.2]] * 3))


def test_summarize_front_uses_auto_reference():
    preferences = [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]
    losses = [[0.1, 1.0], [0.5, 0.5], [1.0, 0.1]]
    summary = summarize_front(front_from(preferences, losses))
    np.testing.assert_allclose(summary["hv_reference"], auto_reference(losses))
    np.testing.assert_allclose(summary["hv_reference"], [1.2, 1.2])
    assert summary["hv"] == pytest.approx(hypervolume(losses, [1.2, 1.2]))
    assert summary["nondominated_count"] == 3
    assert summary["alignment"] == pytest.approx([-1.0, -1.0])
