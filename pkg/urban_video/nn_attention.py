"""Temporal attention over a sequence of spatial states."""

from typing import List, Optional, Tuple  # noqa

import numpy as np

from .exceptions import ShapeMismatchError
from .nn_base import Layer, Parameter, glorot_uniform
from .typedefs import Array

__all__ = ('Attention', 'attention_weights', 'softmax')


def softmax(z: Array, axis: int=-1) -> Array:
    shifted = np.exp(z - z.max(axis=axis, keepdims=True))
    return shifted / shifted.sum(axis=axis, keepdims=True)


def attention_weights(states: Array, weight: Array,
                      bias: Array) -> Tuple[Array, Array]:
    """Scores z = tanh(W . flatten(h_i) + b) and their softmax over the
    sequence axis; states is (B, L, H, W, C)."""
    b, steps = states.shape[:2]
    flat = states.reshape(b, steps, -1)
    z = np.tanh(flat @ weight[:, 0] + bias[0])
    return z, softmax(z, axis=1)


class Attention(Layer):
    """Collapses (B, L, H, W, C) to (B, H, W, C) as the alpha-weighted sum
    of the L states.  The scorer is one fully connected unit shared across
    timesteps."""

    def __init__(self, name: str, state_shape: Tuple[int, int, int],
                 rng: np.random.Generator) -> None:
        super().__init__(name)
        self.state_shape = tuple(state_shape)
        size = int(np.prod(state_shape))
        self.weight = Parameter(name + '.weight',
                                glorot_uniform((size, 1), rng, size, 1))
        self.bias = Parameter(name + '.bias', np.zeros(1))
        self.last_weights = None  # type: Optional[Array]

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: Array, *, train: bool=True) -> Array:
        if x.ndim != 5 or x.shape[2:] != self.state_shape:
            raise ShapeMismatchError(
                self.name + ' input', ('B', 'L') + self.state_shape,
                x.shape)
        if x.shape[1] < 1:
            raise ShapeMismatchError(self.name + ' sequence length',
                                     ('L>=1',), (x.shape[1],))
        z, alpha = attention_weights(x, self.weight.value, self.bias.value)
        self._record((x, z, alpha))
        self.last_weights = alpha
        return np.einsum('bl,bl...->b...', alpha, x)

    def backward(self, grad: Array) -> Array:
        x, z, alpha = self._replay()
        b, steps = x.shape[:2]
        flat = x.reshape(b, steps, -1)
        flat_grad = grad.reshape(b, 1, -1)
        d_alpha = (flat * flat_grad).sum(axis=-1)
        d_z = alpha * (d_alpha - (alpha * d_alpha).sum(axis=1,
                                                         keepdims=True))
        d_s = d_z * (1.0 - z ** 2)
        self.weight.grad[:, 0] += np.einsum('bl,bld->d', d_s, flat)
        self.bias.grad[0] += d_s.sum()
        dx = alpha[:, :, None] * flat_grad + \
            d_s[:, :, None] * self.weight.value[:, 0]
        return dx.reshape(x.shape)
