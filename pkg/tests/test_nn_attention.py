import numpy as np
import pytest

from urban_video.exceptions import ShapeMismatchError
from urban_video.nn_attention import Attention, attention_weights, softmax
from urban_video.test_utils import numeric_gradient


def test_softmax_is_stable() -> None:
    out = softmax(np.array([[1000.0, 1000.0]]))
    assert out.tolist() == [[0.5, 0.5]]


def test_weights_sum_to_one(rng: np.random.Generator) -> None:
    layer = Attention('att', (3, 3, 2), rng)
    x = rng.normal(size=(4, 5, 3, 3, 2))
    out = layer.forward(x)
    assert out.shape == (4, 3, 3, 2)
    alpha = layer.last_weights
    assert alpha.shape == (4, 5)
    assert np.allclose(alpha.sum(axis=1), 1.0)
    assert np.all(alpha > 0)


def test_identical_states_pass_through(rng: np.random.Generator) -> None:
    layer = Attention('att', (2, 2, 1), rng)
    state = rng.normal(size=(1, 1, 2, 2, 1))
    out = layer.forward(np.repeat(state, 4, axis=1))
    assert np.allclose(out, state[:, 0])
    assert np.allclose(layer.last_weights, 0.25)


def test_scores_are_bounded(rng: np.random.Generator) -> None:
    states = rng.normal(scale=100.0, size=(2, 3, 2, 2, 1))
    z, alpha = attention_weights(states, rng.normal(size=(4, 1)),
                                 np.zeros(1))
    assert np.all(np.abs(z) <= 1.0)
    assert np.allclose(alpha.sum(axis=1), 1.0)


def test_gradients(rng: np.random.Generator) -> None:
    layer = Attention('att', (2, 2, 2), rng)
    x = rng.normal(size=(2, 3, 2, 2, 2))
    weights = rng.normal(size=(2, 2, 2, 2))

    def objective() -> float:
        out = layer.forward(x)
        layer.clear_tape()
        return float(np.sum(out * weights))

    layer.forward(x)
    dx = layer.backward(weights)
    assert np.allclose(dx, numeric_gradient(objective, x), atol=1e-7)
    assert np.allclose(layer.weight.grad,
                       numeric_gradient(objective, layer.weight.value),
                       atol=1e-7)
    assert np.allclose(layer.bias.grad,
                       numeric_gradient(objective, layer.bias.value),
                       atol=1e-7)


def test_rejects_wrong_state_shape(rng: np.random.Generator) -> None:
    layer = Attention('att', (2, 2, 1), rng)
    with pytest.raises(ShapeMismatchError):
        layer.forward(np.zeros((1, 3, 2, 2, 2)))
    with pytest.raises(ShapeMismatchError):
        layer.forward(np.zeros((1, 0, 2, 2, 1)))
