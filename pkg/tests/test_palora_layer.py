import numpy as np
import pytest

from src.core.exceptions import ShapeError
from src.nn.palora_layer import PaLoRALayer
from src.nn.tensor_core import finite_diff_grad


def random_layer(rng, n, m, num_tasks, rank, alpha=1.0):
    """A layer with nonzero B so every adapter contributes."""
    layer = PaLoRALayer.init(n, m, num_tasks, rank, alpha, int(rng.integers(1 << 30)))
    layer.B = [rng.normal(size=(rank, m)) for _ in range(num_tasks)]
    layer.bias = rng.normal(size=n)
    return layer


def test_init_shapes_and_zero_residual():
    layer = PaLoRALayer.init(4, 4, 2, 1, 1.0, seed=3)
    assert layer.W.shape == (4, 4)
    assert [a.shape for a in layer.A] == [(4, 1), (4, 1)]
    assert [b.shape for b in layer.B] == [(1, 4), (1, 4)]
    assert all(not b.any() for b in layer.B)

    x = np.random.default_rng(0).normal(size=(5, 4))
    expected = x @ layer.W.T + layer.bias
    for lam in ([1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.3, 0.7]):
        np.testing.assert_array_equal(layer.forward(lam, x), expected)


def test_init_is_deterministic():
    first = PaLoRALayer.init(6, 5, 3, 2, 1.0, seed=11)
    second = PaLoRALayer.init(6, 5, 3, 2, 1.0, seed=11)
    for name, block in first.parameters().items():
        np.testing.assert_array_equal(block, second.parameters()[name])


@pytest.mark.parametrize("n,m,num_tasks,rank", [(4, 3, 2, 4), (4, 3, 0, 1), (4, 3, 2, 0)])
def test_init_rejects_bad_dimensions(n, m, num_tasks, rank):
    with pytest.raises(ShapeError):
        PaLoRALayer.init(n, m, num_tasks, rank, 1.0, seed=0)


def test_compose_with_zero_preference_is_base():
    layer = random_layer(np.random.default_rng(1), 5, 4, 3, 2)
    np.testing.assert_array_equal(layer.compose_effective_weight([0.0, 0.0, 0.0]), layer.W)


def test_compose_single_adapter_example():
    layer = PaLoRALayer(
        W=np.zeros((2, 2)),
        bias=np.zeros(2),
        A=[np.array([[1.0], [0.0]])],
        B=[np.array([[0.0, 1.0]])],
        rank=1,
        alpha=1.0,
    )
    np.testing.assert_array_equal(layer.compose_effective_weight([1.0]), [[0.0, 1.0], [0.0, 0.0]])


def test_compose_matches_explicit_sum():
    rng = np.random.default_rng(2)
    layer = random_layer(rng, 4, 6, 2, 2, alpha=3.0)
    lam = [0.3, 0.7]
    expected = layer.W.copy()
    expected = expected + (1.5 * 0.3) * (layer.A[0] @ layer.B[0])
    expected = expected + (1.5 * 0.7) * (layer.A[1] @ layer.B[1])
    np.testing.assert_array_equal(layer.compose_effective_weight(lam), expected)


def test_compose_is_affine_in_preference():
    rng = np.random.default_rng(3)
    layer = random_layer(rng, 5, 5, 3, 2)
    lam1, lam2 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    a, b = 0.4, 0.6
    mixed = layer.compose_effective_weight(a * lam1 + b * lam2)
    combined = a * layer.compose_effective_weight(lam1) + b * layer.compose_effective_weight(lam2)
    np.testing.assert_allclose(mixed, combined, rtol=1e-12, atol=1e-12)


def test_factored_forward_matches_composed(rel_err):
    rng = np.random.default_rng(4)
    for _ in range(100):
        n, m = rng.integers(1, 10, size=2)
        num_tasks = int(rng.integers(1, 4))
        rank = int(rng.integers(1, min(n, m) + 1))
        layer = random_layer(rng, int(n), int(m), num_tasks, rank, alpha=float(rng.uniform(0.5, 4.0)))
        x = rng.normal(size=(3, int(m)))
        lam = rng.dirichlet(np.ones(num_tasks))
        assert rel_err(layer.forward_factored(lam, x), layer.forward(lam, x), floor=1e-300) < 1e-12


def test_vertex_preference_ignores_other_adapters():
    rng = np.random.default_rng(5)
    layer = random_layer(rng, 4, 3, 2, 1)
    x = rng.normal(size=(6, 3))
    before = layer.forward([1.0, 0.0], x)
    layer.A[1] = rng.normal(size=layer.A[1].shape)
    layer.B[1] = rng.normal(size=layer.B[1].shape)
    np.testing.assert_array_equal(layer.forward([1.0, 0.0], x), before)


def test_zero_alpha_is_base_only():
    rng = np.random.default_rng(6)
    layer = random_layer(rng, 4, 4, 2, 2, alpha=0.0)
    x = rng.normal(size=(3, 4))
    np.testing.assert_allclose(layer.forward([0.2, 0.8], x), x @ layer.W.T + layer.bias, rtol=0, atol=0)


def test_forward_rejects_wrong_preference_length():
    layer = PaLoRALayer.init(3, 3, 2, 1, 1.0, seed=0)
    with pytest.raises(ShapeError):
        layer.forward([1.0, 0.0, 0.0], np.zeros((1, 3)))


def _check_layer_gradients(layer, lam, x, target, rel_err):
    def loss():
        diff = layer.forward(lam, x) - target
        return 0.5 * float(np.sum(diff * diff))

    upstream = layer.forward(lam, x) - target
    grads, dx = layer.backward(lam, x, upstream)
    analytic = layer.gradient_blocks(grads)

    for name, block in layer.parameters().items():

        def perturbed(values, block=block):
            saved = block.copy()
            block[...] = values
            value = loss()
            block[...] = saved
            return value

        numeric = finite_diff_grad(perturbed, block, 1e-5)
        assert rel_err(analytic[name], numeric) < 1e-4, name

    numeric_dx = finite_diff_grad(
        lambda z: 0.5 * float(np.sum((layer.forward(lam, z) - target) ** 2)), x, 1e-5
    )
    assert rel_err(dx, numeric_dx) < 1e-4


def test_backward_matches_finite_differences(rel_err):
    rng = np.random.default_rng(7)
    for instance in range(24):
        n, m = (int(v) for v in rng.integers(2, 9, size=2))
        num_tasks = int(rng.integers(2, 4))
        rank = int(rng.integers(1, min(n, m, 3) + 1))
        layer = random_layer(rng, n, m, num_tasks, rank, alpha=float(rng.uniform(0.5, 3.0)))
        if instance % 3 == 0:
            lam = np.eye(num_tasks)[instance % num_tasks]
        elif instance % 3 == 1:
            lam = np.full(num_tasks, 1.0 / num_tasks)
        else:
            lam = rng.uniform(-1.0, 1.5, size=num_tasks)
        x = rng.normal(size=(4, m))
        target = rng.normal(size=(4, n))
        _check_layer_gradients(layer, lam, x, target, rel_err)


def test_backward_gates_and_freezing():
    rng = np.random.default_rng(8)
    layer = random_layer(rng, 4, 5, 3, 2)
    x, upstream = rng.normal(size=(3, 5)), rng.normal(size=(3, 4))

    grads, _ = layer.backward([0.6, 0.0, 0.4], x, upstream)
    assert not grads.dA[1].any() and not grads.dB[1].any()
    assert grads.dA[0].any() and grads.dB[2].any()

    layer.base_frozen = True
    frozen, _ = layer.backward([0.6, 0.0, 0.4], x, upstream)
    assert not frozen.dW.any() and not frozen.dbias.any()
    for t in range(3):
        np.testing.assert_array_equal(frozen.dA[t], grads.dA[t])
        np.testing.assert_array_equal(frozen.dB[t], grads.dB[t])

    layer.base_frozen = False
    layer.adapters_frozen = True
    fixed, _ = layer.backward([0.6, 0.0, 0.4], x, upstream)
    assert all(not a.any() for a in fixed.dA)
    np.testing.assert_array_equal(fixed.dW, grads.dW)


def test_param_count():
    layer = PaLoRALayer.init(10, 10, 2, 1, 1.0, seed=0)
    count = layer.param_count()
    assert count.base == 100
    assert count.adapters == 40
    assert count.base + count.adapters == 140
    assert count.total == 150


def test_merge_agrees_with_forward():
    rng = np.random.default_rng(9)
    layer = random_layer(rng, 5, 4, 2, 2)
    x = rng.normal(size=(7, 4))
    lam = [0.25, 0.75]
    merged = layer.merge(lam)
    np.testing.assert_array_equal(merged.forward(x), layer.forward(lam, x))
    np.testing.assert_array_equal(layer.merge(lam).weight, merged.weight)
    np.testing.assert_array_equal(layer.merge([0.0, 0.0]).weight, layer.W)


@pytest.mark.parametrize("n,m,num_tasks,rank", [(2, 2, 1, 1), (7, 3, 3, 2), (12, 12, 2, 3)])
def test_param_count_formula(n, m, num_tasks, rank):
    count = PaLoRALayer.init(n, m, num_tasks, rank, 1.0, seed=0).param_count()
    assert count.base + count.adapters == m * n + num_tasks * rank * (m + n)
    assert count.bias == n
    assert count.overhead == pytest.approx(num_tasks * rank * (m + n) / (m * n + n))
