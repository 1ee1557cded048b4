"""Loss, the Adam optimiser and parameter accounting."""

from typing import Any, Iterable, Optional, Sequence, Tuple  # noqa

import attr
import numpy as np

from .exceptions import NonFiniteError, ShapeMismatchError
from .log import nn_logger
from .nn_base import Parameter
from .typedefs import Array

__all__ = ('mse_loss', 'AdamState', 'adam_step', 'count_params',
           'ParamCount')


def mse_loss(pred: Array, target: Array) -> Tuple[float, Array]:
    """Mean squared error and its gradient with respect to pred."""
    if pred.shape != target.shape:
        raise ShapeMismatchError('loss operands', target.shape, pred.shape)
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


@attr.s(slots=True)
class AdamState:
    learning_rate = attr.ib(type=float, default=1e-4)
    beta1 = attr.ib(type=float, default=0.9)
    beta2 = attr.ib(type=float, default=0.999)
    epsilon = attr.ib(type=float, default=1e-8)
    step = attr.ib(type=int, default=0)
    first = attr.ib(type=dict, factory=dict)
    second = attr.ib(type=dict, factory=dict)


def adam_step(state: AdamState, params: Sequence[Parameter],
              grads: Optional[Sequence[Array]]=None) -> None:
    """Apply one bias-corrected Adam update in place.

    grads default to the gradients accumulated on the parameters.
    Non-trainable parameters are left alone.
    """
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ShapeMismatchError('gradient list', (len(params),),
                                 (len(grads),))
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for param, grad in zip(params, grads):
        if not param.trainable:
            continue
        if grad.shape != param.shape:
            raise ShapeMismatchError('gradient of ' + param.name,
                                     param.shape, grad.shape)
        if not np.all(np.isfinite(grad)):
            nn_logger.error('Non-finite gradient for %s', param.name)
            raise NonFiniteError('gradient of ' + param.name,
                                 {'step': state.step})
        m = state.first.get(param.name)
        if m is None:
            m = state.first[param.name] = np.zeros_like(param.value)
            state.second[param.name] = np.zeros_like(param.value)
        v = state.second[param.name]
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.value -= state.learning_rate * m_hat / (np.sqrt(v_hat) +
                                                      state.epsilon)


@attr.s(frozen=True, slots=True)
class ParamCount:
    trainable = attr.ib(type=int)
    non_trainable = attr.ib(type=int)

    @property
    def total(self) -> int:
        return self.trainable + self.non_trainable

    def __iter__(self) -> Any:
        return iter((self.trainable, self.non_trainable, self.total))


def count_params(model: Any) -> ParamCount:
    """Trainable and non-trainable scalar counts of a model or of a
    sequence of parameters."""
    params = (model.parameters() if hasattr(model, 'parameters')
              else list(model))  # type: Iterable[Parameter]
    trainable = non_trainable = 0
    for param in params:
        if param.trainable:
            trainable += param.size
        else:
            non_trainable += param.size
    return ParamCount(trainable, non_trainable)
