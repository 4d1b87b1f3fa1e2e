"""Finite-difference gradient checks for every differentiable operator."""

import numpy as np
import pytest

from src.models.fusion import FusionHead
from src.nn import functional as F
from src.nn.gradcheck import check_gradients, numerical_grad, relative_error
from src.nn.tensor import Tensor

CASES = 100
TOLERANCE = 1e-4


def _leaf(array: np.ndarray, name: str) -> Tensor:
    return Tensor(np.asarray(array, dtype=np.float64), requires_grad=True, name=name)


def _weighted(op, shape_rng: np.random.Generator):
    """Scalar loss sum(op() * R) with a fixed random R sized from a first forward pass."""
    weights = Tensor(shape_rng.standard_normal(op().shape))
    return lambda: (op() * weights).sum()


def _assert_close(errors: dict[str, float], seed: int) -> None:
    worst = max(errors.values())
    assert worst < TOLERANCE, f"seed {seed}: {errors}"


class TestGradcheckHelpers:
    """Sanity of the checker itself."""

    def test_numerical_grad_of_square(self):
        x = _leaf(np.array([1.0, -2.0, 3.0]), "x")
        numeric = numerical_grad(lambda: (x * x).sum(), x)
        np.testing.assert_allclose(numeric, [2.0, -4.0, 6.0], atol=1e-6)

    def test_relative_error_zero_when_both_vanish(self):
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0


class TestOperatorGradients:
    """Analytic vs. central-difference gradients on random float64 inputs."""

    def test_conv2d(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            stride = int(rng.integers(1, 3))
            padding = int(rng.integers(0, 2))
            x = _leaf(rng.standard_normal((2, 2, 5, 6)), "x")
            w = _leaf(rng.standard_normal((3, 2, 3, 3)), "w")
            b = _leaf(rng.standard_normal(3), "b")
            fn = _weighted(lambda: F.conv2d(x, w, b, stride=stride, padding=padding), rng)
            _assert_close(check_gradients(fn, [x, w, b]), seed)

    def test_conv1d(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            stride = int(rng.integers(1, 3))
            padding = int(rng.integers(0, 3))
            x = _leaf(rng.standard_normal((2, 3, 9)), "x")
            w = _leaf(rng.standard_normal((2, 3, 4)), "w")
            b = _leaf(rng.standard_normal(2), "b")
            fn = _weighted(lambda: F.conv1d(x, w, b, stride=stride, padding=padding), rng)
            _assert_close(check_gradients(fn, [x, w, b]), seed)

    @pytest.mark.parametrize("training", [True, False])
    def test_batch_norm(self, training):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            x = _leaf(rng.standard_normal((4, 3, 2, 3)) * 2.0 + 1.0, "x")
            gamma = _leaf(rng.uniform(0.5, 1.5, 3), "gamma")
            beta = _leaf(rng.standard_normal(3), "beta")
            running_mean = rng.standard_normal(3)
            running_var = rng.uniform(0.5, 2.0, 3)

            def op():
                # fresh buffers so repeated evaluations see the same running stats
                return F.batch_norm(
                    x, gamma, beta, running_mean.copy(), running_var.copy(), training=training
                )

            fn = _weighted(op, rng)
            _assert_close(check_gradients(fn, [x, gamma, beta]), seed)

    def test_gem_pool(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            x = _leaf(rng.uniform(0.1, 1.0, (2, 3, 3, 4)), "x")
            p = _leaf(np.array([rng.uniform(1.5, 4.0)]), "p")
            fn = _weighted(lambda: F.gem_pool(x, p), rng)
            errors = check_gradients(fn, [x, p])
            _assert_close(errors, seed)
            assert "p" in errors

    def test_linear(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            x = _leaf(rng.standard_normal((5, 4)), "x")
            w = _leaf(rng.standard_normal((3, 4)), "w")
            b = _leaf(rng.standard_normal(3), "b")
            fn = _weighted(lambda: F.linear(x, w, b), rng)
            _assert_close(check_gradients(fn, [x, w, b]), seed)

    def test_bce_with_logits(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            z = _leaf(rng.standard_normal(12) * 3.0, "z")
            y = rng.integers(0, 2, 12).astype(np.float64)
            _assert_close(check_gradients(lambda: F.bce_with_logits(z, y), [z]), seed)

    def test_fusion_head(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            head = FusionHead(e2_dim=5, e1_dim=4, rng=rng, dtype=np.float64)
            head.fit_standardization(rng.standard_normal((20, 9)) * 3.0 + 1.0)
            e1 = _leaf(rng.standard_normal((3, 4)), "e1")
            e2 = _leaf(rng.standard_normal((3, 5)), "e2")
            head.fc.weight.name, head.fc.bias.name = "fc.weight", "fc.bias"
            fn = _weighted(lambda: head(e1, e2), rng)
            _assert_close(check_gradients(fn, [e1, e2, head.fc.weight, head.fc.bias]), seed)

    def test_shape_ops(self):
        for seed in range(CASES):
            rng = np.random.default_rng(seed)
            # keep inputs clear of the relu kink
            signs = rng.choice([-1.0, 1.0], (2, 2, 4, 6))
            x = _leaf(signs * rng.uniform(0.1, 2.0, (2, 2, 4, 6)), "x")
            y = _leaf(rng.standard_normal((2, 2, 4, 3)), "y")

            def op():
                pooled = F.avg_pool2d(F.relu(x), (2, 2))
                wide = F.repeat(pooled, 2, axis=2)
                seq = F.adaptive_avg_pool1d(y.reshape(2, 2 * 4, 3), 5)
                return F.concat([wide.reshape(2, -1), seq.reshape(2, -1)], axis=1)

            fn = _weighted(op, rng)
            _assert_close(check_gradients(fn, [x, y]), seed)
