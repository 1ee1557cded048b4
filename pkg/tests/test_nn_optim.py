import numpy as np
import pytest

from urban_video.exceptions import NonFiniteError, ShapeMismatchError
from urban_video.nn_base import Parameter
from urban_video.nn_optim import AdamState, adam_step, count_params, mse_loss
from urban_video.test_utils import numeric_gradient


def test_mse_loss_value_and_gradient() -> None:
    pred = np.array([1.0, 2.0, 3.0, 4.0])
    target = np.array([1.0, 0.0, 3.0, 5.0])
    loss, grad = mse_loss(pred, target)
    assert loss == pytest.approx(5.0 / 4)
    numeric = numeric_gradient(lambda: mse_loss(pred, target)[0], pred)
    assert np.allclose(grad, numeric, atol=1e-8)


def test_mse_loss_shape_mismatch() -> None:
    with pytest.raises(ShapeMismatchError):
        mse_loss(np.zeros(3), np.zeros(4))


def test_adam_first_step_moves_by_learning_rate() -> None:
    param = Parameter('w', np.array([1.0, -1.0]))
    frozen = Parameter('m', np.array([2.0]), trainable=False)
    state = AdamState(learning_rate=0.1)
    adam_step(state, [param, frozen],
              [np.array([0.5, -3.0]), np.array([1.0])])
    assert param.value == pytest.approx([0.9, -0.9], abs=1e-6)
    assert frozen.value.tolist() == [2.0]
    assert state.step == 1


def test_adam_uses_accumulated_gradients() -> None:
    param = Parameter('w', np.array([0.0]))
    param.grad[...] = -1.0
    adam_step(AdamState(learning_rate=0.01), [param])
    assert param.value[0] == pytest.approx(0.01, abs=1e-6)


def test_adam_minimises_quadratic() -> None:
    param = Parameter('w', np.array([3.0, -2.0]))
    state = AdamState(learning_rate=0.05)
    for _ in range(2000):
        _, grad = mse_loss(param.value, np.zeros(2))
        adam_step(state, [param], [grad])
    assert np.abs(param.value).max() < 5e-2


def test_adam_rejects_non_finite_gradient() -> None:
    param = Parameter('w', np.zeros(1))
    with pytest.raises(NonFiniteError):
        adam_step(AdamState(), [param], [np.array([np.nan])])
    with pytest.raises(ShapeMismatchError):
        adam_step(AdamState(), [param], [np.zeros(2)])
    with pytest.raises(ShapeMismatchError):
        adam_step(AdamState(), [param], [])


def test_count_params() -> None:
    params = [Parameter('a', np.zeros((3, 3, 1, 4))),
              Parameter('b', np.zeros(4)),
              Parameter('c', np.zeros(4), trainable=False)]
    count = count_params(params)
    assert count.trainable == 40
    assert count.non_trainable == 4
    assert tuple(count) == (40, 4, 44)
