"""Utilities shared by the tests: slow reference implementations."""

from typing import Callable, Optional, Sequence  # noqa

import numpy as np

from .rasterize import MeshSpec, VideoTensor, labels_for
from .typedefs import Array, Cell

__all__ = ('brute_density', 'brute_flow', 'naive_conv2d',
           'numeric_gradient', 'make_video')


def brute_density(positions: Sequence[Optional[Cell]],
                  mesh: MeshSpec) -> Array:
    """Count of {u : position(u) = (i, j)} for every cell, one by one."""
    out = np.zeros((mesh.height, mesh.width, 1))
    for i in range(mesh.height):
        for j in range(mesh.width):
            out[i, j, 0] = sum(1 for p in positions if p == (i, j))
    return out


def brute_flow(prev: Sequence[Optional[Cell]],
               curr: Sequence[Optional[Cell]], mesh: MeshSpec) -> Array:
    """Inflow |{u : prev(u) != g, curr(u) = g}| and outflow
    |{u : prev(u) = g, curr(u) != g}| for every cell g.  None is absent."""
    out = np.zeros((mesh.height, mesh.width, 2))
    for i in range(mesh.height):
        for j in range(mesh.width):
            g = (i, j)
            out[i, j, 0] = sum(1 for a, b in zip(prev, curr)
                               if a != g and b == g)
            out[i, j, 1] = sum(1 for a, b in zip(prev, curr)
                               if a == g and b != g)
    return out


def naive_conv2d(x: Array, kernel: Array, bias: Array) -> Array:
    """Zero-padded 'same' cross-correlation with explicit loops.

    x: (B, H, W, C); kernel: (kh, kw, C, F); bias: (F,).
    """
    b, h, w, _ = x.shape
    kh, kw, _, f = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    out = np.zeros((b, h, w, f))
    for n in range(b):
        for r in range(h):
            for c in range(w):
                patch = padded[n, r:r + kh, c:c + kw, :]
                for k in range(f):
                    out[n, r, c, k] = np.sum(patch * kernel[..., k]) + \
                        bias[k]
    return out


def numeric_gradient(func: Callable[[], float], values: Array,
                     step: float=1e-6) -> Array:
    """Central differences of func() with respect to values, which func
    must read; values are perturbed in place and restored."""
    grad = np.zeros_like(values)
    flat = values.reshape(-1)
    out = grad.reshape(-1)
    for idx in range(flat.size):
        old = flat[idx]
        flat[idx] = old + step
        plus = func()
        flat[idx] = old - step
        minus = func()
        flat[idx] = old
        out[idx] = (plus - minus) / (2 * step)
    return grad


def make_video(data: Array, kind: str='density', *,
               start_timestamp: int=0,
               frame_interval: int=1800) -> VideoTensor:
    return VideoTensor(channel_labels=labels_for(kind),
                       data=np.asarray(data, dtype=np.float64),
                       start_timestamp=start_timestamp,
                       frame_interval=frame_interval)
