"""Convolutional LSTM layer with backpropagation through time."""

from typing import List, Optional, Tuple  # noqa

import numpy as np

from .exceptions import ShapeMismatchError
from .nn_base import Layer, Parameter, glorot_uniform
from .nn_conv import conv2d, conv2d_backward
from .typedefs import Array

__all__ = ('ConvLSTM', 'sigmoid', 'convlstm_param_count')

GATES = ('input', 'forget', 'cell', 'output')


def sigmoid(x: Array) -> Array:
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def convlstm_param_count(in_channels: int, hidden: int,
                         kernel_size: int=3) -> int:
    return 4 * (kernel_size * kernel_size * (in_channels + hidden) * hidden +
                hidden)


class ConvLSTM(Layer):
    """Gated recurrence whose pre-activations are same-padded convolutions
    over concat(x_t, h_{t-1}).

    One kernel of shape (k, k, in + hidden, 4 * hidden) holds the gates in
    the order input, forget, cell, output.  No peepholes.  The forget bias
    starts at 1.

    forward() maps a (B, L, H, W, in) sequence to the (B, L, H, W, hidden)
    sequence of hidden states; backward() takes the gradient of that whole
    sequence.
    """

    def __init__(self, name: str, in_channels: int, hidden: int,
                 rng: np.random.Generator, *, kernel_size: int=3) -> None:
        super().__init__(name)
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError('kernel_size must be a positive odd number')
        k = kernel_size
        shape = (k, k, in_channels + hidden, 4 * hidden)
        self.kernel = Parameter(
            name + '.kernel',
            glorot_uniform(shape, rng, k * k * (in_channels + hidden),
                           k * k * 4 * hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden:2 * hidden] = 1.0
        self.bias = Parameter(name + '.bias', bias)
        self.in_channels = in_channels
        self.hidden = hidden

    def parameters(self) -> List[Parameter]:
        return [self.kernel, self.bias]

    def forward(self, x: Array, *, train: bool=True,
                initial: Optional[Tuple[Array, Array]]=None) -> Array:
        if x.ndim != 5:
            raise ShapeMismatchError(self.name + ' input',
                                     ('B', 'L', 'H', 'W', 'C'), x.shape)
        self._check_channels(x, self.in_channels)
        b, steps, h, w, _ = x.shape
        n = self.hidden
        if initial is None:
            h_prev = np.zeros((b, h, w, n))
            c_prev = np.zeros((b, h, w, n))
        else:
            h_prev, c_prev = initial
        out = np.empty((b, steps, h, w, n))
        caches = []
        for t in range(steps):
            z = np.concatenate([x[:, t], h_prev], axis=-1)
            a, cols = conv2d(z, self.kernel.value, self.bias.value)
            i = sigmoid(a[..., :n])
            f = sigmoid(a[..., n:2 * n])
            g = np.tanh(a[..., 2 * n:3 * n])
            o = sigmoid(a[..., 3 * n:])
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h_prev = o * tanh_c
            caches.append((cols, z.shape, i, f, g, o, c_prev, tanh_c))
            c_prev = c
            out[:, t] = h_prev
        self._record(caches)
        return out

    def backward(self, grad: Array) -> Array:
        caches = self._replay()
        n = self.hidden
        cin = self.in_channels
        dx = np.empty(grad.shape[:-1] + (cin,))
        dh_next = np.zeros(grad.shape[:1] + grad.shape[2:])
        dc_next = np.zeros_like(dh_next)
        for t in reversed(range(len(caches))):
            cols, z_shape, i, f, g, o, c_prev, tanh_c = caches[t]
            dh = grad[:, t] + dh_next
            dc = dh * o * (1.0 - tanh_c ** 2) + dc_next
            da = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g ** 2),
                dh * tanh_c * o * (1.0 - o),
            ], axis=-1)
            dz, dk, db = conv2d_backward(da, cols, self.kernel.value,
                                         z_shape)
            self.kernel.grad += dk
            self.bias.grad += db
            dx[:, t] = dz[..., :cin]
            dh_next = dz[..., cin:]
            dc_next = dc * f
        return dx
