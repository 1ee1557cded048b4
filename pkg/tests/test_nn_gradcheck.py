import numpy as np
import pytest

from urban_video.exceptions import GradientCheckError
from urban_video.model_nets import build_model
from urban_video.nn_conv import Dense
from urban_video.nn_gradcheck import (
    MODEL_ENTRIES,
    GradCheckResult,
    assert_passed,
    check_layer,
    check_model,
    gradcheck_all,
    random_batch,
    relative_error,
    toy_config,
)
from urban_video.nn_optim import count_params


def test_relative_error_floor() -> None:
    assert relative_error(1e-6, 2e-6) == pytest.approx(1e-3)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


def test_every_layer_and_model_passes() -> None:
    results = gradcheck_all(seed=0)
    names = [r.name for r in results]
    for name in ('conv', 'conv_relu', 'batchnorm', 'batchnorm_infer',
                 'dense', 'relu', 'convlstm', 'attention', 'cnn',
                 'convlstm', 'multitask_df', 'vluc', 'vluc_pyramid'):
        assert name in names
    for result in results:
        assert result.checked > 0, result.name
        assert result.passed, (result.name, result.max_error)
    assert_passed(results)


def test_check_layer_restores_parameters(rng: np.random.Generator) -> None:
    layer = Dense('dense', 3, 2, rng)
    before = layer.weight.value.copy()
    result = check_layer(layer, rng.normal(size=(4, 3)), rng)
    assert result.passed
    assert result.checked == 3 * 2 + 2 + 4 * 3
    assert np.array_equal(layer.weight.value, before)


def test_broken_backward_is_caught(rng: np.random.Generator) -> None:
    class Leaky(Dense):
        def backward(self, grad: np.ndarray) -> np.ndarray:
            return 2.0 * super().backward(grad)

    result = check_layer(Leaky('leaky', 2, 2, rng),
                         rng.normal(size=(3, 2)), rng)
    assert not result.passed
    with pytest.raises(GradientCheckError, match='leaky'):
        assert_passed([result])


def test_assert_passed_lists_failures() -> None:
    ok = GradCheckResult('a', 0.0, 1, 0)
    bad = GradCheckResult('b', 1.0, 1, 0)
    assert_passed([ok])
    with pytest.raises(GradientCheckError) as ctx:
        assert_passed([ok, bad])
    assert ctx.value.failures == ('b',)


def test_model_check_covers_every_cnn_entry(
        rng: np.random.Generator) -> None:
    config = toy_config('cnn')
    model = build_model(config, seed=1)
    result = check_model(model, random_batch(config, rng), rng,
                         max_entries=None)
    assert result.checked + result.skipped == \
        count_params(model).trainable
    assert result.checked > 0.9 * count_params(model).trainable
    assert result.passed, result.max_error


def test_model_check_samples_many_entries(
        rng: np.random.Generator) -> None:
    config = toy_config('convlstm')
    model = build_model(config, seed=1)
    result = check_model(model, random_batch(config, rng), rng)
    expected = sum(min(p.value.size, MODEL_ENTRIES)
                   for p in model.trainable_parameters())
    assert result.checked + result.skipped == expected
