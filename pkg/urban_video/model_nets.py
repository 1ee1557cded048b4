"""Neural next-frame predictors and their registry.

Every model consumes a Batch and returns one prediction per head; the
first head is the primary task.  Models are built from a ModelConfig by
kind:

    model = build_model(ModelConfig(kind='convlstm', channels=2), seed=7)
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type  # noqa

import attr
import numpy as np

from .config import ModelConfig
from .dataset import Batch
from .exceptions import MissingBranchError, ShapeMismatchError
from .helpers import check_finite, make_rng
from .nn_attention import Attention
from .nn_base import Layer, Parameter, collect_parameters, get_state
from .nn_base import set_state
from .nn_conv import BatchNorm, Conv2D, Dense, ReLU
from .nn_optim import mse_loss
from .nn_recurrent import ConvLSTM
from .typedefs import Array

__all__ = ('MODEL_REGISTRY', 'model_type', 'build_model', 'Model', 'CNN',
           'ConvLSTMNet', 'MultitaskDF', 'VLUCNet', 'build_cnn',
           'build_convlstm', 'build_multitask_df', 'build_vluc_net',
           'BRANCHES')

BRANCHES = ('closeness', 'period', 'trend')
# initial scale of the CNN output kernel and its bias
HEAD_KERNEL_SCALE = 0.1
HEAD_BIAS = 0.5


class ModelRegistry:

    def __init__(self) -> None:
        self._factories = {}  # type: Dict[str, Type[Model]]

    def register(self, factory: Type['Model'], kind: str) -> None:
        if kind in self._factories:
            raise ValueError('model kind {!r} already registered'.format(
                kind))
        self._factories[kind] = factory

    def get(self, kind: str) -> Type['Model']:
        try:
            return self._factories[kind]
        except KeyError:
            raise ValueError('unknown model kind {!r}, known: {}'.format(
                kind, ', '.join(self.kinds())))

    def kinds(self) -> List[str]:
        return sorted(self._factories)


MODEL_REGISTRY = ModelRegistry()


class model_type:

    def __init__(self, kind: str) -> None:
        self.kind = kind

    def __call__(self, factory: Type['Model']) -> Type['Model']:
        MODEL_REGISTRY.register(factory, self.kind)
        return factory


def build_model(config: ModelConfig, seed: int=0) -> 'Model':
    factory = MODEL_REGISTRY.get(config.kind)
    return factory(config, make_rng(seed, 0))


def _last_step_grad(grad: Array, steps: int) -> Array:
    full = np.zeros((grad.shape[0], steps) + grad.shape[1:])
    full[:, -1] = grad
    return full


class Model(ABC):
    """A predictor built from layers.

    forward() records what backward() needs; predict() runs inference and
    drops the record.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.layers = []  # type: List[Layer]
        self._steps = []  # type: List[int]

    def add(self, layer: Layer) -> Any:
        self.layers.append(layer)
        return layer

    @property
    def kind(self) -> str:
        return self.config.kind

    def parameters(self) -> List[Parameter]:
        return collect_parameters(self.layers)

    def trainable_parameters(self) -> List[Parameter]:
        return [p for p in self.parameters() if p.trainable]

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def clear_tape(self) -> None:
        for layer in self.layers:
            layer.clear_tape()
        self._steps.clear()

    def kinks(self) -> List[Array]:
        masks = []  # type: List[Array]
        for layer in self.layers:
            masks.extend(layer.kinks())
        return masks

    def state(self) -> Dict[str, Array]:
        return get_state(self.parameters())

    def load_state(self, state: Dict[str, Array]) -> None:
        set_state(self.parameters(), state)

    def targets(self, batch: Batch) -> Tuple[Array, ...]:
        return (batch.target,)

    @property
    def loss_weights(self) -> Tuple[float, ...]:
        return (1.0,)

    def _sequence(self, batch: Batch, field: str,
                  channels: int) -> Array:
        x = getattr(batch, field)
        if x is None:
            raise MissingBranchError('batch has no {} data'.format(field))
        cfg = self.config
        expected = (cfg.l_c, cfg.height, cfg.width, channels)
        if x.ndim != 5 or x.shape[1:] != expected:
            raise ShapeMismatchError(field, ('B',) + expected, x.shape)
        return x

    @abstractmethod
    def forward(self, batch: Batch, *,
                train: bool=True) -> Tuple[Array, ...]:
        pass  # pragma: no cover

    @abstractmethod
    def backward(self, grads: Sequence[Array]) -> None:
        pass  # pragma: no cover

    def loss(self, batch: Batch, *, train: bool=True,
             backward: bool=True) -> float:
        """Weighted MSE over the heads; with backward=True the gradients
        are accumulated on the parameters."""
        outputs = self.forward(batch, train=train)
        total = 0.0
        grads = []
        for out, target, weight in zip(outputs, self.targets(batch),
                                       self.loss_weights):
            value, grad = mse_loss(out, target)
            total += weight * value
            grads.append(weight * grad)
        if backward:
            self.backward(grads)
        else:
            self.clear_tape()
        return total

    def predict(self, batch: Batch) -> Tuple[Array, ...]:
        outputs = self.forward(batch, train=False)
        self.clear_tape()
        return tuple(check_finite(out, '%s prediction' % self.kind)
                     for out in outputs)

    def __repr__(self) -> str:
        return '<{} kind={} layers={}>'.format(
            self.__class__.__name__, self.kind, len(self.layers))


@model_type('cnn')
class CNN(Model):
    """Four 3x3 convolutions over the channel-stacked Closeness window,
    batch normalisation in between and ReLU on the output.

    The output convolution starts small with a positive bias so that no
    output pixel begins on the flat side of the ReLU.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        super().__init__(config, rng)
        f, c, k = config.filters, config.channels, config.kernel_size
        width = config.l_c * c
        for n in (1, 2, 3):
            self.add(Conv2D('conv%d' % n, width, f, rng, kernel_size=k))
            self.add(BatchNorm('bn%d' % n, f))
            width = f
        self.add(Conv2D('conv4', f, c, rng, kernel_size=k,
                        activation='relu', kernel_scale=HEAD_KERNEL_SCALE,
                        bias_init=HEAD_BIAS))

    def forward(self, batch: Batch, *,
                train: bool=True) -> Tuple[Array, ...]:
        x = self._sequence(batch, 'closeness', self.config.channels)
        b, steps, h, w, c = x.shape
        x = x.transpose(0, 2, 3, 1, 4).reshape(b, h, w, steps * c)
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return (x,)

    def backward(self, grads: Sequence[Array]) -> None:
        grad = grads[0]
        for layer in reversed(self.layers):
            grad = layer.backward(grad)


@model_type('convlstm')
class ConvLSTMNet(Model):
    """Three ConvLSTM(filters) layers with batch normalisation, then a
    ConvLSTM with one hidden channel per output channel; the last hidden
    state through ReLU is the prediction."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        super().__init__(config, rng)
        f, c, k = config.filters, config.channels, config.kernel_size
        width = c
        for n in (1, 2, 3):
            self.add(ConvLSTM('lstm%d' % n, width, f, rng, kernel_size=k))
            self.add(BatchNorm('bn%d' % n, f))
            width = f
        self.head = self.add(ConvLSTM('lstm4', f, c, rng, kernel_size=k))
        self.relu = self.add(ReLU('relu'))

    def forward(self, batch: Batch, *,
                train: bool=True) -> Tuple[Array, ...]:
        x = self._sequence(batch, 'closeness', self.config.channels)
        self._steps.append(x.shape[1])
        for layer in self.layers[:-1]:
            x = layer.forward(x, train=train)
        return (self.relu.forward(x[:, -1], train=train),)

    def backward(self, grads: Sequence[Array]) -> None:
        grad = _last_step_grad(self.relu.backward(grads[0]),
                               self._steps.pop())
        for layer in reversed(self.layers[:-1]):
            grad = layer.backward(grad)


@model_type('multitask_df')
class MultitaskDF(Model):
    """Joint density (1 channel) and flow (2 channel) predictor.

    Two input ConvLSTM branches are concatenated, normalised and passed
    through a shared ConvLSTM trunk into one head per task.  The loss is
    lam * L_density + (1 - lam) * L_flow.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        super().__init__(config, rng)
        f, k = config.filters, config.kernel_size
        self.density_in = self.add(ConvLSTM('density_in', 1, f, rng,
                                            kernel_size=k))
        self.flow_in = self.add(ConvLSTM('flow_in', 2, f, rng,
                                         kernel_size=k))
        self.trunk = [
            self.add(BatchNorm('bn_merge', 2 * f)),
            self.add(ConvLSTM('trunk1', 2 * f, f, rng, kernel_size=k)),
            self.add(BatchNorm('bn1', f)),
            self.add(ConvLSTM('trunk2', f, f, rng, kernel_size=k)),
            self.add(BatchNorm('bn2', f)),
        ]
        self.density_head = self.add(ConvLSTM('density_head', f, 1, rng,
                                              kernel_size=k))
        self.flow_head = self.add(ConvLSTM('flow_head', f, 2, rng,
                                           kernel_size=k))
        self.density_relu = self.add(ReLU('density_relu'))
        self.flow_relu = self.add(ReLU('flow_relu'))

    def targets(self, batch: Batch) -> Tuple[Array, ...]:
        if batch.aux_target is None:
            raise MissingBranchError('batch has no flow target')
        return batch.target, batch.aux_target

    @property
    def loss_weights(self) -> Tuple[float, ...]:
        return self.config.lam, 1.0 - self.config.lam

    def forward(self, batch: Batch, *,
                train: bool=True) -> Tuple[Array, ...]:
        xd = self._sequence(batch, 'closeness', 1)
        xf = self._sequence(batch, 'aux_closeness', 2)
        self._steps.append(xd.shape[1])
        z = np.concatenate([self.density_in.forward(xd, train=train),
                            self.flow_in.forward(xf, train=train)], axis=-1)
        for layer in self.trunk:
            z = layer.forward(z, train=train)
        yd = self.density_relu.forward(
            self.density_head.forward(z, train=train)[:, -1], train=train)
        yf = self.flow_relu.forward(
            self.flow_head.forward(z, train=train)[:, -1], train=train)
        return yd, yf

    def backward(self, grads: Sequence[Array]) -> None:
        steps = self._steps.pop()
        gd, gf = grads
        dz = self.density_head.backward(
            _last_step_grad(self.density_relu.backward(gd), steps))
        dz = dz + self.flow_head.backward(
            _last_step_grad(self.flow_relu.backward(gf), steps))
        for layer in reversed(self.trunk):
            dz = layer.backward(dz)
        f = self.config.filters
        self.density_in.backward(dz[..., :f])
        self.flow_in.backward(dz[..., f:])


class _Branch:
    """Meta dense layer, ConvLSTM stack and attention for one window."""

    def __init__(self, model: 'VLUCNet', name: str,
                 rng: np.random.Generator) -> None:
        cfg = model.config
        f, k = cfg.filters, cfg.kernel_size
        self.name = name
        self.pyramid = model.pyramid
        self.meta = model.add(Dense(name + '.meta', cfg.meta_dim,
                                    cfg.height * cfg.width, rng))
        self.lstms = []  # type: List[ConvLSTM]
        width = cfg.channels + 1
        for n in range(1, cfg.depth + 1):
            self.lstms.append(model.add(ConvLSTM(
                '%s.lstm%d' % (name, n), width, f, rng, kernel_size=k)))
            width = f
        self.attention = model.add(Attention(
            name + '.attention', (cfg.height, cfg.width, model.features),
            rng))

    def forward(self, frames: Array, meta: Array, train: bool) -> Array:
        b, steps, h, w, _ = frames.shape
        m = self.meta.forward(meta, train=train).reshape(b, steps, h, w, 1)
        x = np.concatenate([frames, m], axis=-1)
        outputs = []
        for lstm in self.lstms:
            x = lstm.forward(x, train=train)
            outputs.append(x)
        seq = np.concatenate(outputs, axis=-1) if self.pyramid else x
        return self.attention.forward(seq, train=train)

    def backward(self, grad: Array) -> None:
        d_seq = self.attention.backward(grad)
        depth = len(self.lstms)
        if self.pyramid:
            direct = np.split(d_seq, depth, axis=-1)
        else:
            direct = [None] * (depth - 1) + [d_seq]  # type: ignore
        carry = None  # type: Optional[Array]
        for lstm, d in zip(reversed(self.lstms), reversed(direct)):
            total = d if carry is None else (carry if d is None
                                             else d + carry)
            carry = lstm.backward(total)
        assert carry is not None
        b, steps, h, w, _ = carry.shape
        self.meta.backward(carry[..., -1].reshape(b, steps, h * w))


@model_type('vluc')
class VLUCNet(Model):
    """Closeness, Period and Trend branches, each a meta-fused ConvLSTM
    stack collapsed by temporal attention, fused by a second attention
    over the three branch states and decoded by a 3x3 convolution with
    ReLU.

    After forward() branch_states maps each branch to its attention state.
    """

    pyramid = False

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        super().__init__(config, rng)
        self.features = config.filters * (config.depth if self.pyramid
                                          else 1)
        self.branches = [_Branch(self, name, rng) for name in BRANCHES]
        self.fusion = self.add(Attention(
            'fusion', (config.height, config.width, self.features), rng))
        self.head = self.add(Conv2D('head', self.features, config.channels,
                                    rng, kernel_size=config.kernel_size,
                                    activation='relu'))
        self.branch_states = {}  # type: Dict[str, Array]

    def forward(self, batch: Batch, *,
                train: bool=True) -> Tuple[Array, ...]:
        c = self.config.channels
        states = []
        for branch in self.branches:
            frames = self._sequence(batch, branch.name, c)
            meta = getattr(batch, 'meta_' + branch.name)
            if meta is None:
                raise MissingBranchError(
                    'batch has no {} metadata'.format(branch.name))
            if meta.shape != frames.shape[:2] + (self.config.meta_dim,):
                raise ShapeMismatchError(
                    'meta_' + branch.name,
                    frames.shape[:2] + (self.config.meta_dim,), meta.shape)
            states.append(branch.forward(frames, meta, train))
        self.branch_states = dict(zip(BRANCHES, states))
        fused = self.fusion.forward(np.stack(states, axis=1), train=train)
        return (self.head.forward(fused, train=train),)

    def backward(self, grads: Sequence[Array]) -> None:
        d_states = self.fusion.backward(self.head.backward(grads[0]))
        for i, branch in enumerate(self.branches):
            branch.backward(d_states[:, i])


@model_type('vluc_pyramid')
class PyramidVLUCNet(VLUCNet):
    """VLUCNet whose branches attend over the channel concatenation of
    every ConvLSTM layer's output sequence."""

    pyramid = True


def build_cnn(config: ModelConfig, seed: int=0) -> Model:
    return build_model(attr.evolve(config, kind='cnn'), seed)


def build_convlstm(config: ModelConfig, seed: int=0) -> Model:
    return build_model(attr.evolve(config, kind='convlstm'), seed)


def build_multitask_df(config: ModelConfig, seed: int=0) -> Model:
    return build_model(attr.evolve(config, kind='multitask_df'), seed)


def build_vluc_net(config: ModelConfig, variant: str='plain',
                   seed: int=0) -> Model:
    kinds = {'plain': 'vluc', 'pyramid': 'vluc_pyramid'}
    if variant not in kinds:
        raise ValueError('unknown VLUC-Net variant %r' % variant)
    return build_model(attr.evolve(config, kind=kinds[variant]), seed)
