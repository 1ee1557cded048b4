import numpy as np
import pytest

from urban_video.exceptions import ShapeMismatchError
from urban_video.nn_optim import count_params
from urban_video.nn_recurrent import ConvLSTM, convlstm_param_count, sigmoid
from urban_video.test_utils import numeric_gradient


def test_sigmoid() -> None:
    assert sigmoid(np.array([0.0]))[0] == 0.5
    assert sigmoid(np.array([50.0]))[0] == pytest.approx(1.0)


@pytest.mark.parametrize('in_channels,hidden,expected', [
    (1, 40, 59200),
    (2, 40, 60640),
    (40, 40, 115360),
])
def test_param_count(rng: np.random.Generator, in_channels: int,
                     hidden: int, expected: int) -> None:
    layer = ConvLSTM('lstm', in_channels, hidden, rng)
    assert convlstm_param_count(in_channels, hidden) == expected
    assert count_params(layer).total == expected


def test_forget_bias_starts_at_one(rng: np.random.Generator) -> None:
    layer = ConvLSTM('lstm', 1, 3, rng)
    assert layer.bias.value.tolist() == [0.0] * 3 + [1.0] * 3 + [0.0] * 6


def test_output_shape_and_bound(rng: np.random.Generator) -> None:
    layer = ConvLSTM('lstm', 2, 3, rng)
    out = layer.forward(rng.normal(size=(2, 4, 3, 3, 2)))
    assert out.shape == (2, 4, 3, 3, 3)
    assert np.abs(out).max() < 1.0


def test_zero_input_zero_weights_is_zero(rng: np.random.Generator) -> None:
    layer = ConvLSTM('lstm', 1, 2, rng)
    layer.kernel.value[...] = 0.0
    layer.bias.value[...] = 0.0
    out = layer.forward(np.zeros((1, 3, 2, 2, 1)))
    # g = tanh(0) = 0 keeps the cell empty
    assert not out.any()


def test_gradients_through_time(rng: np.random.Generator) -> None:
    layer = ConvLSTM('lstm', 2, 2, rng)
    x = rng.normal(size=(2, 3, 3, 3, 2))
    weights = rng.normal(size=(2, 3, 3, 3, 2))

    def objective() -> float:
        out = layer.forward(x)
        layer.clear_tape()
        return float(np.sum(out * weights))

    layer.forward(x)
    dx = layer.backward(weights)
    assert np.allclose(dx, numeric_gradient(objective, x), atol=1e-7)
    assert np.allclose(layer.kernel.grad,
                       numeric_gradient(objective, layer.kernel.value),
                       atol=1e-7)
    assert np.allclose(layer.bias.grad,
                       numeric_gradient(objective, layer.bias.value),
                       atol=1e-7)


def test_rejects_bad_input(rng: np.random.Generator) -> None:
    layer = ConvLSTM('lstm', 2, 2, rng)
    with pytest.raises(ShapeMismatchError):
        layer.forward(np.zeros((1, 3, 3, 2)))
    with pytest.raises(ShapeMismatchError):
        layer.forward(np.zeros((1, 2, 3, 3, 1)))
    with pytest.raises(ValueError):
        ConvLSTM('lstm', 1, 1, rng, kernel_size=4)
