import numpy as np
import pytest

from urban_video.exceptions import GraphStateError, ShapeMismatchError
from urban_video.nn_conv import BatchNorm, Conv2D, Dense, ReLU, conv2d
from urban_video.test_utils import naive_conv2d, numeric_gradient


@pytest.mark.parametrize('kernel_size', [1, 3, 5])
def test_conv2d_matches_loops(rng: np.random.Generator,
                              kernel_size: int) -> None:
    x = rng.normal(size=(2, 5, 4, 3))
    kernel = rng.normal(size=(kernel_size, kernel_size, 3, 2))
    bias = rng.normal(size=2)
    out, _ = conv2d(x, kernel, bias)
    assert out.shape == (2, 5, 4, 2)
    assert np.allclose(out, naive_conv2d(x, kernel, bias), atol=1e-12)


def test_conv2d_shape_errors(rng: np.random.Generator) -> None:
    kernel = np.zeros((3, 3, 2, 1))
    with pytest.raises(ShapeMismatchError):
        conv2d(np.zeros((4, 4, 2)), kernel, np.zeros(1))
    with pytest.raises(ShapeMismatchError):
        conv2d(np.zeros((1, 4, 4, 3)), kernel, np.zeros(1))


def test_conv_layer_gradients(rng: np.random.Generator) -> None:
    layer = Conv2D('conv', 2, 3, rng)
    x = rng.normal(size=(2, 4, 4, 2))
    weights = rng.normal(size=(2, 4, 4, 3))

    def objective() -> float:
        out = layer.forward(x)
        layer.clear_tape()
        return float(np.sum(out * weights))

    layer.forward(x)
    dx = layer.backward(weights)
    assert np.allclose(dx, numeric_gradient(objective, x), atol=1e-6)
    assert np.allclose(layer.kernel.grad,
                       numeric_gradient(objective, layer.kernel.value),
                       atol=1e-6)
    assert np.allclose(layer.bias.grad, weights.sum(axis=(0, 1, 2)))


def test_conv_layer_relu_records_kinks(rng: np.random.Generator) -> None:
    layer = Conv2D('conv', 1, 2, rng, activation='relu')
    out = layer.forward(rng.normal(size=(1, 3, 3, 1)))
    assert out.min() >= 0
    assert len(layer.kinks()) == 1
    layer.backward(np.ones_like(out))
    assert layer.recorded == 0


def test_conv_layer_rejects_bad_settings(rng: np.random.Generator) -> None:
    with pytest.raises(ValueError):
        Conv2D('conv', 1, 1, rng, kernel_size=2)
    with pytest.raises(ValueError):
        Conv2D('conv', 1, 1, rng, activation='tanh')


def test_backward_without_forward(rng: np.random.Generator) -> None:
    layer = Dense('dense', 3, 2, rng)
    with pytest.raises(GraphStateError):
        layer.backward(np.zeros((1, 2)))


def test_batch_norm_train_and_infer(rng: np.random.Generator) -> None:
    layer = BatchNorm('bn', 2, momentum=0.5, epsilon=0.0)
    x = rng.normal(loc=3.0, scale=2.0, size=(4, 3, 3, 2))
    out = layer.forward(x)
    assert np.allclose(out.mean(axis=(0, 1, 2)), 0.0, atol=1e-12)
    assert np.allclose(out.var(axis=(0, 1, 2)), 1.0)
    assert np.allclose(layer.running_mean.value,
                       0.5 * x.mean(axis=(0, 1, 2)))

    layer.running_mean.value[...] = 1.0
    layer.running_var.value[...] = 4.0
    inferred = layer.forward(np.full((1, 1, 1, 2), 3.0), train=False)
    assert np.allclose(inferred, 1.0)


def test_batch_norm_gradient(rng: np.random.Generator) -> None:
    layer = BatchNorm('bn', 2)
    x = rng.normal(size=(3, 2, 2, 2))
    weights = rng.normal(size=x.shape)

    def objective() -> float:
        out = layer.forward(x)
        layer.clear_tape()
        return float(np.sum(out * weights))

    layer.forward(x)
    dx = layer.backward(weights)
    assert np.allclose(dx, numeric_gradient(objective, x), atol=1e-6)


def test_dense_and_relu(rng: np.random.Generator) -> None:
    dense = Dense('dense', 3, 2, rng)
    x = rng.normal(size=(4, 3))
    out = dense.forward(x)
    assert np.allclose(out, x @ dense.weight.value)
    grad = dense.backward(np.ones((4, 2)))
    assert np.allclose(grad, np.ones((4, 2)) @ dense.weight.value.T)
    assert np.allclose(dense.bias.grad, [4.0, 4.0])

    relu = ReLU('relu')
    y = relu.forward(np.array([-1.0, 0.0, 2.0]))
    assert y.tolist() == [0.0, 0.0, 2.0]
    assert relu.backward(np.ones(3)).tolist() == [0.0, 0.0, 1.0]

    with pytest.raises(ShapeMismatchError):
        dense.forward(np.zeros((1, 4)))
