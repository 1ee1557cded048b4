import attr
import numpy as np
import pytest

from urban_video.config import ModelConfig
from urban_video.exceptions import MissingBranchError, ShapeMismatchError
from urban_video.model_nets import (
    MODEL_REGISTRY,
    build_cnn,
    build_convlstm,
    build_model,
    build_multitask_df,
    build_vluc_net,
    model_type,
)
from urban_video.nn_gradcheck import random_batch, toy_config
from urban_video.nn_optim import count_params


@pytest.mark.parametrize('builder,channels,expected', [
    (build_cnn, 1, 20929),
    (build_cnn, 2, 22946),
    (build_convlstm, 1, 187432),
    (build_convlstm, 2, 189848),
    (build_multitask_df, 1, 266176),
])
def test_parameter_counts(builder, channels: int,  # type: ignore
                          expected: int) -> None:
    model = builder(ModelConfig(channels=channels, l_c=6, filters=32))
    assert count_params(model).total == expected


def test_batch_norm_statistics_are_not_trainable() -> None:
    count = count_params(build_cnn(ModelConfig()))
    assert count.non_trainable == 3 * 2 * 32
    assert count.trainable == 20929 - 192


def test_registry() -> None:
    assert MODEL_REGISTRY.kinds() == ['cnn', 'convlstm', 'multitask_df',
                                      'vluc', 'vluc_pyramid']
    with pytest.raises(ValueError):
        MODEL_REGISTRY.get('resnet')
    with pytest.raises(ValueError):
        model_type('cnn')(object)  # type: ignore
    with pytest.raises(ValueError):
        build_vluc_net(ModelConfig(), variant='deep')


@pytest.mark.parametrize('kind', ['cnn', 'convlstm', 'vluc',
                                  'vluc_pyramid'])
def test_single_task_shapes(kind: str, rng: np.random.Generator) -> None:
    config = toy_config(kind)
    model = build_model(config, seed=1)
    batch = random_batch(config, rng, size=3)
    (out,) = model.predict(batch)
    assert out.shape == (3, 4, 4, config.channels)
    assert out.min() >= 0
    assert model.kind == kind
    # predict leaves nothing on the tape
    assert all(layer.recorded == 0 for layer in model.layers)


def test_multitask_outputs_and_loss(rng: np.random.Generator) -> None:
    config = attr.evolve(toy_config('multitask_df'), lam=0.3)
    model = build_model(config)
    batch = random_batch(config, rng)
    density, flow = model.predict(batch)
    assert density.shape == (2, 4, 4, 1)
    assert flow.shape == (2, 4, 4, 2)
    assert model.loss_weights == (0.3, 0.7)

    total = model.loss(batch, train=False, backward=False)
    d = np.mean((density - batch.target) ** 2)
    f = np.mean((flow - batch.aux_target) ** 2)
    assert total == pytest.approx(0.3 * d + 0.7 * f)


def test_multitask_needs_flow(rng: np.random.Generator) -> None:
    config = toy_config('multitask_df')
    batch = attr.evolve(random_batch(config, rng), aux_closeness=None)
    with pytest.raises(MissingBranchError):
        build_model(config).predict(batch)


def test_vluc_needs_meta(rng: np.random.Generator) -> None:
    config = toy_config('vluc')
    batch = attr.evolve(random_batch(config, rng), meta_trend=None)
    with pytest.raises(MissingBranchError):
        build_model(config).predict(batch)
    bad = attr.evolve(random_batch(config, rng),
                      meta_period=np.zeros((2, 3, 5)))
    with pytest.raises(ShapeMismatchError):
        build_model(config).predict(bad)


def test_vluc_branch_states(rng: np.random.Generator) -> None:
    config = toy_config('vluc')
    model = build_model(config)
    model.predict(random_batch(config, rng))
    assert sorted(model.branch_states) == ['closeness', 'period', 'trend']
    assert model.branch_states['period'].shape == (2, 4, 4, 4)


def test_pyramid_attends_over_every_layer() -> None:
    plain = build_vluc_net(toy_config('vluc'))
    pyramid = build_vluc_net(toy_config('vluc'), variant='pyramid')
    assert pyramid.features == 2 * plain.features
    assert count_params(pyramid).total > count_params(plain).total


def test_wrong_window_shape(rng: np.random.Generator) -> None:
    config = toy_config('cnn')
    batch = random_batch(attr.evolve(config, l_c=2), rng)
    with pytest.raises(ShapeMismatchError):
        build_model(config).predict(batch)


def test_seeded_build_and_state_round_trip() -> None:
    config = toy_config('convlstm')
    a = build_model(config, seed=5)
    b = build_model(config, seed=5)
    c = build_model(config, seed=6)
    state = a.state()
    assert all(np.array_equal(state[k], v) for k, v in b.state().items())
    assert not all(np.array_equal(state[k], v)
                   for k, v in c.state().items())
    c.load_state(state)
    assert all(np.array_equal(state[k], v) for k, v in c.state().items())
    with pytest.raises(ShapeMismatchError):
        c.load_state({})


def test_loss_backward_accumulates_gradients(
        rng: np.random.Generator) -> None:
    config = toy_config('cnn')
    model = build_model(config)
    batch = random_batch(config, rng)
    model.zero_grad()
    loss = model.loss(batch)
    assert loss > 0
    assert any(p.grad.any() for p in model.trainable_parameters())
    assert all(layer.recorded == 0 for layer in model.layers)


def test_cnn_output_starts_above_the_relu(rng: np.random.Generator) -> None:
    config = toy_config('cnn')
    model = build_model(config, seed=3)
    (out,) = model.forward(random_batch(config, rng, size=4), train=True)
    model.clear_tape()
    assert np.mean(out > 0) > 0.9


def test_multitask_full_density_weight_ignores_flow(
        rng: np.random.Generator) -> None:
    config = attr.evolve(toy_config('multitask_df'), lam=1.0)
    model = build_model(config, seed=2)
    batch = random_batch(config, rng)

    def trunk_grads(batch):  # type: ignore
        model.zero_grad()
        model.loss(batch)
        return [p.grad.copy() for layer in model.trunk
                for p in layer.trainable_parameters()]

    joint = trunk_grads(batch)
    noisy = attr.evolve(batch, aux_target=batch.aux_target * 7.0 + 3.0)
    assert all(np.array_equal(a, b)
               for a, b in zip(joint, trunk_grads(noisy)))

    # density-only backward through the same graph
    model.zero_grad()
    density, flow = model.forward(batch, train=True)
    grad = 2.0 * (density - batch.target) / density.size
    model.backward([grad, np.zeros_like(flow)])
    alone = [p.grad.copy() for layer in model.trunk
             for p in layer.trainable_parameters()]
    assert all(np.allclose(a, b, rtol=1e-12, atol=1e-15)
               for a, b in zip(joint, alone))


def test_vluc_identical_branches_fuse_to_one_state(
        rng: np.random.Generator) -> None:
    config = toy_config('vluc')
    model = build_model(config, seed=4)
    state = model.state()
    for key in list(state):
        for other in ('period.', 'trend.'):
            if key.startswith(other):
                state[key] = state['closeness.' + key[len(other):]].copy()
    model.load_state(state)
    batch = random_batch(config, rng)
    batch = attr.evolve(batch, period=batch.closeness,
                        trend=batch.closeness,
                        meta_period=batch.meta_closeness,
                        meta_trend=batch.meta_closeness)

    (out,) = model.predict(batch)
    states = model.branch_states
    assert np.array_equal(states['period'], states['closeness'])
    assert np.array_equal(states['trend'], states['closeness'])
    assert np.allclose(model.fusion.last_weights, 1.0 / 3.0)
    single = model.head.forward(states['closeness'], train=False)
    model.clear_tape()
    assert np.allclose(out, single, rtol=1e-12, atol=1e-12)
