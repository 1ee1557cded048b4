"""Parameters, the layer protocol and weight initialisation.

Every layer keeps a tape of the intermediate values of its forward calls.
backward() consumes the most recent entry, so a layer may be applied
several times per pass as long as the gradients flow back in reverse
order.  All math is float64.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, List, Tuple  # noqa

import attr
import numpy as np

from .exceptions import GraphStateError, ShapeMismatchError
from .typedefs import Array

__all__ = ('Parameter', 'Layer', 'glorot_uniform', 'collect_parameters',
           'get_state', 'set_state')


@attr.s(slots=True, eq=False, repr=False)
class Parameter:
    name = attr.ib(type=str)
    value = attr.ib(type=np.ndarray)
    trainable = attr.ib(type=bool, default=True)
    grad = attr.ib(type=np.ndarray, default=None)

    def __attrs_post_init__(self) -> None:
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape  # type: ignore

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return '<Parameter {} shape={} trainable={}>'.format(
            self.name, self.shape, self.trainable)


def glorot_uniform(shape: Tuple[int, ...], rng: np.random.Generator,
                   fan_in: int, fan_out: int) -> Array:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer(ABC):

    def __init__(self, name: str) -> None:
        self.name = name
        self._tape = []  # type: List[Any]

    def parameters(self) -> List[Parameter]:
        return []

    def trainable_parameters(self) -> List[Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    @abstractmethod
    def forward(self, x: Array, *, train: bool=True) -> Array:
        pass  # pragma: no cover

    @abstractmethod
    def backward(self, grad: Array) -> Array:
        """Accumulate parameter gradients; return the input gradient."""

    def __call__(self, x: Array, *, train: bool=True) -> Array:
        return self.forward(x, train=train)

    def _record(self, entry: Any) -> None:
        self._tape.append(entry)

    def _replay(self) -> Any:
        if not self._tape:
            raise GraphStateError(
                '{}: backward called without a recorded forward '
                'pass'.format(self.name))
        return self._tape.pop()

    @property
    def recorded(self) -> int:
        return len(self._tape)

    def clear_tape(self) -> None:
        self._tape.clear()

    def kinks(self) -> List[Array]:
        """Activation masks of the recorded passes at non-smooth points."""
        return []

    def _check_channels(self, x: Array, channels: int) -> None:
        if x.shape[-1] != channels:
            raise ShapeMismatchError(
                '{} input channels'.format(self.name), (channels,),
                (x.shape[-1],))

    def __repr__(self) -> str:
        return '<{} {}>'.format(self.__class__.__name__, self.name)


def collect_parameters(layers: Iterable[Layer]) -> List[Parameter]:
    params = []  # type: List[Parameter]
    for layer in layers:
        params.extend(layer.parameters())
    return params


def get_state(params: Iterable[Parameter]) -> Dict[str, Array]:
    return {p.name: p.value.copy() for p in params}


def set_state(params: Iterable[Parameter], state: Dict[str, Array]) -> None:
    for param in params:
        try:
            value = state[param.name]
        except KeyError:
            raise ShapeMismatchError(
                'parameter {} missing from state'.format(param.name),
                param.shape, ())
        if tuple(np.shape(value)) != param.shape:
            raise ShapeMismatchError(
                'parameter {}'.format(param.name), param.shape,
                np.shape(value))
        param.value[...] = value
