"""Central finite-difference verification of the analytic gradients.

The scalar objective is sum(output * R) for a fixed random R, so the
analytic gradient is what backward(R) accumulates.  Each perturbation is
1e-5 * max(1, |theta|).  Entries whose perturbation flips a ReLU mask are
skipped, the objective having a kink there.
"""

from typing import Any, Callable, List, Optional, Sequence, Tuple  # noqa

import attr
import numpy as np

from .config import ModelConfig
from .dataset import Batch, meta_size
from .exceptions import GradientCheckError
from .helpers import make_rng
from .log import nn_logger
from .model_nets import Model, build_model
from .nn_attention import Attention
from .nn_base import Layer, get_state, set_state
from .nn_conv import BatchNorm, Conv2D, Dense, ReLU
from .nn_recurrent import ConvLSTM
from .typedefs import Array

__all__ = ('GradCheckResult', 'relative_error', 'check_layer',
           'check_model', 'gradcheck_all', 'assert_passed', 'random_batch',
           'DEFAULT_TOLERANCE', 'MODEL_ENTRIES', 'TOY_MODELS')

DEFAULT_TOLERANCE = 1e-4
# denominators below this are replaced by it
ERROR_FLOOR = 1e-3
STEP = 1e-5
# entries sampled per model parameter tensor
MODEL_ENTRIES = 64

TOY_MODELS = ('cnn', 'convlstm', 'multitask_df', 'vluc', 'vluc_pyramid')


@attr.s(frozen=True, slots=True)
class GradCheckResult:
    name = attr.ib(type=str)
    max_error = attr.ib(type=float)
    checked = attr.ib(type=int)
    skipped = attr.ib(type=int)
    tolerance = attr.ib(type=float, default=DEFAULT_TOLERANCE)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: Any, numeric: Any,
                   floor: float=ERROR_FLOOR) -> Any:
    a = np.abs(analytic)
    n = np.abs(numeric)
    return np.abs(np.subtract(analytic, numeric)) / np.maximum(
        np.maximum(a, n), floor)


def _same_kinks(a: List[Array], b: List[Array]) -> bool:
    return len(a) == len(b) and all(np.array_equal(x, y)
                                    for x, y in zip(a, b))


def _entries(size: int, rng: np.random.Generator,
             max_entries: Optional[int]) -> Array:
    if max_entries is None or size <= max_entries:
        return np.arange(size)
    return np.sort(rng.choice(size, max_entries, replace=False))


def _compare(name: str, objective: Callable[[], Tuple[float, List[Array]]],
             base_kinks: List[Array],
             targets: Sequence[Tuple[Array, Array]],
             rng: np.random.Generator, max_entries: Optional[int],
             tolerance: float) -> GradCheckResult:
    worst = 0.0
    checked = skipped = 0
    for values, analytic in targets:
        flat = values.reshape(-1)
        for idx in _entries(flat.size, rng, max_entries):
            old = flat[idx]
            h = STEP * max(1.0, abs(old))
            flat[idx] = old + h
            f_plus, k_plus = objective()
            flat[idx] = old - h
            f_minus, k_minus = objective()
            flat[idx] = old
            if not (_same_kinks(base_kinks, k_plus) and
                    _same_kinks(base_kinks, k_minus)):
                skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2 * h)
            err = float(relative_error(analytic.reshape(-1)[idx], numeric))
            worst = max(worst, err)
            checked += 1
    result = GradCheckResult(name, worst, checked, skipped, tolerance)
    level = nn_logger.info if result.passed else nn_logger.error
    level('gradcheck %s: max rel error %.3g over %d entries (%d skipped)',
          name, worst, checked, skipped)
    return result


def check_layer(layer: Layer, x: Array, rng: np.random.Generator, *,
                train: bool=True, max_entries: Optional[int]=None,
                tolerance: float=DEFAULT_TOLERANCE) -> GradCheckResult:
    """Check every trainable parameter and the input gradient."""
    x = np.array(x, dtype=np.float64)
    saved = get_state(layer.parameters())
    layer.clear_tape()
    weights = rng.standard_normal(layer.forward(x, train=train).shape)
    layer.clear_tape()

    def objective() -> Tuple[float, List[Array]]:
        out = layer.forward(x, train=train)
        kinks = [m.copy() for m in layer.kinks()]
        layer.clear_tape()
        return float(np.sum(out * weights)), kinks

    layer.zero_grad()
    layer.forward(x, train=train)
    base_kinks = [m.copy() for m in layer.kinks()]
    dx = layer.backward(weights)
    targets = [(p.value, p.grad.copy())
               for p in layer.trainable_parameters()] + [(x, dx)]
    try:
        return _compare(layer.name, objective, base_kinks, targets, rng,
                        max_entries, tolerance)
    finally:
        set_state(layer.parameters(), saved)


def check_model(model: Model, batch: Batch, rng: np.random.Generator, *,
                name: Optional[str]=None,
                max_entries: Optional[int]=MODEL_ENTRIES,
                tolerance: float=DEFAULT_TOLERANCE) -> GradCheckResult:
    """Check up to max_entries entries of every trainable parameter, all
    of them when max_entries is None."""
    saved = model.state()
    model.clear_tape()
    weights = [rng.standard_normal(out.shape)
               for out in model.forward(batch, train=True)]
    model.clear_tape()

    def objective() -> Tuple[float, List[Array]]:
        outs = model.forward(batch, train=True)
        kinks = [m.copy() for m in model.kinks()]
        model.clear_tape()
        return float(sum(np.sum(o * w) for o, w in zip(outs, weights))), \
            kinks

    model.zero_grad()
    model.forward(batch, train=True)
    base_kinks = [m.copy() for m in model.kinks()]
    model.backward(weights)
    targets = [(p.value, p.grad.copy())
               for p in model.trainable_parameters()]
    try:
        return _compare(name or model.kind, objective, base_kinks, targets,
                        rng, max_entries, tolerance)
    finally:
        model.load_state(saved)


def random_batch(config: ModelConfig, rng: np.random.Generator, *,
                 size: int=2) -> Batch:
    """Random inputs in [0, 1] for every branch, with paired flow data."""
    h, w, c, steps = config.height, config.width, config.channels, config.l_c

    def frames(channels: int) -> Array:
        return rng.uniform(0.0, 1.0, (size, steps, h, w, channels))

    def meta() -> Array:
        return rng.uniform(0.0, 1.0, (size, steps, config.meta_dim))

    return Batch(
        closeness=frames(1 if config.kind == 'multitask_df' else c),
        period=frames(c), trend=frames(c),
        meta_closeness=meta(), meta_period=meta(), meta_trend=meta(),
        target=rng.uniform(0.0, 1.0, (size, h, w, c)),
        t_index=np.arange(size, dtype=np.int64),
        aux_closeness=frames(2),
        aux_target=rng.uniform(0.0, 1.0, (size, h, w, 2)))


def _layer_cases(rng: np.random.Generator) -> List[Tuple[Layer, Array,
                                                         bool]]:
    bn = BatchNorm('batchnorm', 3)
    bn.gamma.value[...] = rng.uniform(0.5, 1.5, 3)
    bn.beta.value[...] = rng.standard_normal(3)
    bn_infer = BatchNorm('batchnorm_infer', 3)
    bn_infer.running_mean.value[...] = rng.standard_normal(3)
    bn_infer.running_var.value[...] = rng.uniform(0.5, 2.0, 3)
    lstm = ConvLSTM('convlstm', 2, 3, rng)
    lstm.bias.value[...] = rng.standard_normal(lstm.bias.value.shape) * 0.1
    return [
        (Conv2D('conv', 3, 2, rng), rng.standard_normal((2, 4, 4, 3)), True),
        (Conv2D('conv_relu', 2, 3, rng, activation='relu'),
         rng.standard_normal((2, 4, 4, 2)), True),
        (bn, rng.standard_normal((2, 4, 4, 3)) * 2.0 + 1.0, True),
        (bn_infer, rng.standard_normal((2, 4, 4, 3)), False),
        (Dense('dense', 5, 3, rng), rng.standard_normal((2, 3, 5)), True),
        (ReLU('relu'), rng.standard_normal((2, 4, 4, 2)), True),
        (lstm, rng.standard_normal((2, 3, 4, 4, 2)), True),
        (Attention('attention', (4, 4, 2), rng),
         rng.standard_normal((2, 3, 4, 4, 2)), True),
    ]


def toy_config(kind: str) -> ModelConfig:
    return ModelConfig(kind=kind, channels=2 if kind == 'convlstm' else 1,
                       l_c=3, filters=4, height=4, width=4,
                       meta_dim=meta_size(48))


def gradcheck_all(seed: int=0, *,
                  tolerance: float=DEFAULT_TOLERANCE,
                  models: Sequence[str]=TOY_MODELS
                  ) -> List[GradCheckResult]:
    """Every layer type, then every model at H=W=4, l_c=3."""
    rng = make_rng(seed, 2)
    results = [check_layer(layer, x, rng, train=train, tolerance=tolerance)
               for layer, x, train in _layer_cases(rng)]
    for kind in models:
        config = toy_config(kind)
        model = build_model(config, seed)
        results.append(check_model(model, random_batch(config, rng), rng,
                                   tolerance=tolerance))
    return results


def assert_passed(results: Sequence[GradCheckResult]) -> None:
    failures = [r.name for r in results if not r.passed]
    if failures:
        raise GradientCheckError(failures)
