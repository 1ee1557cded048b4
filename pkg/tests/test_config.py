import datetime
from pathlib import Path

import attr
import pytest

from urban_video.config import (
    EvalConfig,
    ExperimentSpec,
    ModelConfig,
    TrainConfig,
    apply_overrides,
    load_config,
    parse_config,
)
from urban_video.exceptions import ConfigError

TOML = '''
seed = 7
name = "tokyo"
out_dir = "results"

[paths]
trajectories = "raw.csv"

[mesh]
preset = "tokyo"
delta_tau = 600
k_anonymity = 5

[window]
l_c = 4
T_p = 48
T_t = 336

[model]
kind = "convlstm"
channels = 2

[train]
batch_size = 8
max_epochs = 3

[eval]
threshold = 1.0
cells = { station = [40, 41], park = [10, 12] }
times = ["08:00", "18:30"]

[calendar]
holidays = ["2017-04-29"]
'''


def test_load_config(tmp_path: Path) -> None:
    path = tmp_path / 'experiment.toml'
    path.write_text(TOML)
    spec = load_config(path)
    assert spec.seed == 7
    assert spec.name == 'tokyo'
    assert spec.out_dir == tmp_path / 'results'
    assert spec.paths.trajectories == tmp_path / 'raw.csv'
    assert spec.paths.density is None
    assert (spec.mesh.height, spec.mesh.width) == (80, 80)
    assert spec.delta_tau == 600
    assert spec.k_anonymity == 5
    assert spec.window.l_c == 4
    assert spec.model == ModelConfig(kind='convlstm', channels=2, l_c=4,
                                     height=80, width=80, meta_dim=56)
    assert spec.train == TrainConfig(batch_size=8, max_epochs=3)
    assert spec.eval.threshold == 1.0
    assert spec.eval.named_cells() == {'park': (10, 12),
                                       'station': (40, 41)}
    assert spec.eval.times == ('08:00', '18:30')
    assert spec.calendar.is_holiday(datetime.date(2017, 4, 29))


def test_defaults() -> None:
    spec = parse_config({})
    assert spec.out_dir == ExperimentSpec().out_dir
    assert (spec.model.height, spec.model.width) == (80, 80)
    assert spec.model.kind == 'cnn'
    assert spec.train.repeats == 1
    assert spec.k_anonymity == 10.0
    assert spec.eval.times == ('08:00', '12:00', '16:00', '20:00')


def test_explicit_mesh_sets_model_shape() -> None:
    spec = parse_config({'mesh': {'lon_min': 139.70, 'lon_max': 139.72,
                                  'lat_min': 35.64, 'lat_max': 35.656,
                                  'frame_interval': 3600}})
    assert (spec.model.height, spec.model.width) == (4, 4)
    assert spec.model.meta_dim == 24 + 8


@pytest.mark.parametrize('data,message', [
    ({'mesh': {'preset': 'tokyo', 'colour': 'red'}}, 'unknown \\[mesh\\]'),
    ({'mesh': {'preset': 'atlantis'}}, 'unknown mesh preset'),
    ({'mesh': {'preset': 'tokyo', 'delta_tau': 7}}, 'delta_tau'),
    ({'window': {'T_p': 500}}, 'window offsets'),
    ({'model': {'filters': 0}}, 'filters'),
    ({'model': {'lam': 1.5}}, 'lam'),
    ({'train': {'learning_rate': 0}}, 'learning_rate'),
    ({'train': {'momentum': 0.9}}, 'momentum'),
    ({'eval': {'times': ['25:00']}}, 'out of range'),
    ({'paths': 'raw.csv'}, 'must be a table'),
    ({'window': {'l_c': 4}, 'model': {'l_c': 3}},
     'model l_c=3 differs from window l_c=4'),
    ({'model': {'height': 16}}, 'differs from the 80x80 mesh'),
    ({'model': {'meta_dim': 9}}, 'meta_dim=9'),
])
def test_invalid_configs(data: dict, message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        parse_config(data)


def test_unreadable_config(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match='cannot read'):
        load_config(tmp_path / 'missing.toml')
    broken = tmp_path / 'broken.toml'
    broken.write_text('seed = = 1')
    with pytest.raises(ConfigError, match='cannot parse'):
        load_config(broken)


def test_overrides() -> None:
    spec = apply_overrides(ExperimentSpec(), seed=3, model='vluc',
                           channels=2, l_c=None, repeats=5,
                           out_dir=Path('elsewhere'))
    assert spec.seed == 3
    assert spec.model.kind == 'vluc'
    assert spec.model.channels == 2
    assert spec.model.l_c == 6
    assert spec.train.repeats == 5
    assert spec.out_dir == Path('elsewhere')
    with pytest.raises(ConfigError, match='unknown override'):
        apply_overrides(spec, colour='red')
    with pytest.raises(ConfigError, match='invalid override'):
        apply_overrides(spec, repeats=0)


def test_l_c_override_moves_the_window() -> None:
    base = ExperimentSpec()
    spec = apply_overrides(base, l_c=3)
    assert spec.window == attr.evolve(base.window, l_c=3)
    assert spec.model.l_c == 3


def test_grid_override_must_match_the_mesh() -> None:
    spec = ExperimentSpec()
    assert apply_overrides(spec, height=80, width=80) == spec
    with pytest.raises(ConfigError, match='differs from the 80x80 mesh'):
        apply_overrides(spec, height=16)


def test_require(tmp_path: Path) -> None:
    raw = tmp_path / 'raw.csv'
    spec = parse_config({'paths': {'trajectories': 'raw.csv'}}, tmp_path)
    with pytest.raises(ConfigError, match='does not exist'):
        spec.require('trajectories')
    raw.write_text('object_id,timestamp,lat,lon\n')
    assert spec.require('trajectories') == (raw,)
    with pytest.raises(ConfigError, match='not configured'):
        spec.require('density')


def test_eval_config_times() -> None:
    with pytest.raises(ValueError):
        EvalConfig(times=('noon',))
