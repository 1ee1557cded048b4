"""Same-padded convolution, batch normalisation, dense and ReLU layers."""

from typing import List, Tuple  # noqa

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import ShapeMismatchError
from .nn_base import Layer, Parameter, glorot_uniform
from .typedefs import Array

__all__ = ('conv2d', 'conv2d_backward', 'Conv2D', 'BatchNorm', 'Dense',
           'ReLU', 'ACTIVATIONS')

ACTIVATIONS = ('none', 'relu')


def _padding(kh: int, kw: int) -> Tuple[Tuple[int, int], ...]:
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    return ((0, 0), (ph, kh - 1 - ph), (pw, kw - 1 - pw), (0, 0))


def im2col(x: Array, kh: int, kw: int) -> Array:
    """(B, H, W, C) -> (B*H*W, kh*kw*C) patches of the same-padded input,
    ordered (kh, kw, C) to match a (kh, kw, C, out) kernel."""
    b, h, w, c = x.shape
    xp = np.pad(x, _padding(kh, kw))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return windows.transpose(0, 1, 2, 4, 5, 3).reshape(b * h * w,
                                                      kh * kw * c)


def col2im(cols: Array, shape: Tuple[int, ...], kh: int, kw: int) -> Array:
    b, h, w, c = shape
    pad = _padding(kh, kw)
    xp = np.zeros((b, h + kh - 1, w + kw - 1, c))
    patches = cols.reshape(b, h, w, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            xp[:, i:i + h, j:j + w, :] += patches[:, :, :, i, j, :]
    return xp[:, pad[1][0]:pad[1][0] + h, pad[2][0]:pad[2][0] + w, :]


def conv2d(x: Array, kernel: Array, bias: Array) -> Tuple[Array, Array]:
    """Stride-1 same-padded cross-correlation plus bias.

    Returns the output and the patch matrix needed by conv2d_backward.
    """
    if x.ndim != 4:
        raise ShapeMismatchError('conv2d input', ('B', 'H', 'W', 'C'),
                                 x.shape)
    kh, kw, cin, cout = kernel.shape
    if x.shape[-1] != cin:
        raise ShapeMismatchError('conv2d input channels', (cin,),
                                 (x.shape[-1],))
    b, h, w, _ = x.shape
    cols = im2col(x, kh, kw)
    out = cols @ kernel.reshape(kh * kw * cin, cout) + bias
    return out.reshape(b, h, w, cout), cols


def conv2d_backward(grad: Array, cols: Array, kernel: Array,
                    x_shape: Tuple[int, ...]) -> Tuple[Array, Array, Array]:
    """Returns (input grad, kernel grad, bias grad)."""
    kh, kw, cin, cout = kernel.shape
    flat = grad.reshape(-1, cout)
    d_kernel = (cols.T @ flat).reshape(kernel.shape)
    d_bias = flat.sum(axis=0)
    d_cols = flat @ kernel.reshape(kh * kw * cin, cout).T
    return col2im(d_cols, x_shape, kh, kw), d_kernel, d_bias


class Conv2D(Layer):
    """Same-padded, stride-1 convolution with optional ReLU."""

    def __init__(self, name: str, in_channels: int, out_channels: int,
                 rng: np.random.Generator, *, kernel_size: int=3,
                 activation: str='none', kernel_scale: float=1.0,
                 bias_init: float=0.0) -> None:
        super().__init__(name)
        if activation not in ACTIVATIONS:
            raise ValueError('unknown activation %r' % activation)
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError('kernel_size must be a positive odd number')
        k = kernel_size
        shape = (k, k, in_channels, out_channels)
        self.kernel = Parameter(
            name + '.kernel',
            kernel_scale * glorot_uniform(shape, rng, k * k * in_channels,
                                          k * k * out_channels))
        self.bias = Parameter(name + '.bias',
                              np.full(out_channels, float(bias_init)))
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.activation = activation

    def parameters(self) -> List[Parameter]:
        return [self.kernel, self.bias]

    def forward(self, x: Array, *, train: bool=True) -> Array:
        out, cols = conv2d(x, self.kernel.value, self.bias.value)
        mask = None
        if self.activation == 'relu':
            mask = out > 0
            out = out * mask
        self._record((cols, x.shape, mask))
        return out

    def backward(self, grad: Array) -> Array:
        cols, x_shape, mask = self._replay()
        if mask is not None:
            grad = grad * mask
        dx, dk, db = conv2d_backward(grad, cols, self.kernel.value, x_shape)
        self.kernel.grad += dk
        self.bias.grad += db
        return dx

    def kinks(self) -> List[Array]:
        return [entry[2] for entry in self._tape if entry[2] is not None]


class BatchNorm(Layer):
    """Per-channel normalisation over every non-channel axis.

    Train mode uses batch statistics and folds them into the running
    statistics with the given momentum; infer mode uses the running ones.
    """

    def __init__(self, name: str, channels: int, *, momentum: float=0.99,
                 epsilon: float=1e-3) -> None:
        super().__init__(name)
        self.channels = channels
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = Parameter(name + '.gamma', np.ones(channels))
        self.beta = Parameter(name + '.beta', np.zeros(channels))
        self.running_mean = Parameter(name + '.running_mean',
                                      np.zeros(channels), trainable=False)
        self.running_var = Parameter(name + '.running_var',
                                     np.ones(channels), trainable=False)

    def parameters(self) -> List[Parameter]:
        return [self.gamma, self.beta, self.running_mean, self.running_var]

    def forward(self, x: Array, *, train: bool=True) -> Array:
        self._check_channels(x, self.channels)
        if train:
            axes = tuple(range(x.ndim - 1))
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.running_mean.value[...] = (
                m * self.running_mean.value + (1 - m) * mean)
            self.running_var.value[...] = (
                m * self.running_var.value + (1 - m) * var)
        else:
            mean = self.running_mean.value
            var = self.running_var.value
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - mean) * inv_std
        self._record((xhat, inv_std, train))
        return self.gamma.value * xhat + self.beta.value

    def backward(self, grad: Array) -> Array:
        xhat, inv_std, train = self._replay()
        axes = tuple(range(grad.ndim - 1))
        self.gamma.grad += (grad * xhat).sum(axis=axes)
        self.beta.grad += grad.sum(axis=axes)
        dxhat = grad * self.gamma.value
        if not train:
            return dxhat * inv_std
        n = grad.size // grad.shape[-1]
        return inv_std / n * (n * dxhat - dxhat.sum(axis=axes) -
                              xhat * (dxhat * xhat).sum(axis=axes))


class Dense(Layer):
    """x @ W + b over the last axis."""

    def __init__(self, name: str, in_features: int, out_features: int,
                 rng: np.random.Generator) -> None:
        super().__init__(name)
        self.weight = Parameter(
            name + '.weight',
            glorot_uniform((in_features, out_features), rng,
                           in_features, out_features))
        self.bias = Parameter(name + '.bias', np.zeros(out_features))
        self.in_features = in_features
        self.out_features = out_features

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: Array, *, train: bool=True) -> Array:
        self._check_channels(x, self.in_features)
        self._record(x)
        return x @ self.weight.value + self.bias.value

    def backward(self, grad: Array) -> Array:
        x = self._replay()
        flat_x = x.reshape(-1, self.in_features)
        flat_g = grad.reshape(-1, self.out_features)
        self.weight.grad += flat_x.T @ flat_g
        self.bias.grad += flat_g.sum(axis=0)
        return grad @ self.weight.value.T


class ReLU(Layer):

    def forward(self, x: Array, *, train: bool=True) -> Array:
        mask = x > 0
        self._record(mask)
        return x * mask

    def backward(self, grad: Array) -> Array:
        return grad * self._replay()

    def kinks(self) -> List[Array]:
        return list(self._tape)
