"""Experiment configuration: a TOML file parsed into frozen attrs classes.

    seed = 7
    out_dir = "out"
    name = "tokyo"

    [paths]
    trajectories = "raw.csv"

    [mesh]
    preset = "tokyo"          # or lon_min/lon_max/lat_min/lat_max
    delta_tau = 300
    k_anonymity = 10

    [window]
    l_c = 6
    T_p = 48
    T_t = 336

    [model]
    kind = "convlstm"

    [train]
    batch_size = 4

    [eval]
    cells = { station = [40, 40] }

    [calendar]
    holidays = ["2017-04-29"]

Command-line flags override file values through attr.evolve.
"""

import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple  # noqa

import attr

from .dataset import Calendar, WindowSpec, meta_size
from .exceptions import ConfigError
from .helpers import SECONDS_PER_DAY, parse_time_of_day
from .rasterize import MeshSpec, preset_mesh
from .typedefs import Cell, PathLike

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ('ModelConfig', 'TrainConfig', 'EvalConfig', 'PathsConfig',
           'ExperimentSpec', 'load_config', 'parse_config',
           'apply_overrides', 'CASE_STUDY_TIMES')

CASE_STUDY_TIMES = ('08:00', '12:00', '16:00', '20:00')


def _at_least(minimum: float) -> Any:
    def check(inst: Any, attribute: Any, value: Any) -> None:
        if value < minimum:
            raise ValueError('%s must be >= %r, got %r' % (
                attribute.name, minimum, value))
    return check


def _unit_interval(inst: Any, attribute: Any, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError('%s must lie in [0, 1], got %r' % (
            attribute.name, value))


def _odd(inst: Any, attribute: Any, value: int) -> None:
    if value < 1 or value % 2 == 0:
        raise ValueError('%s must be a positive odd number, got %r' % (
            attribute.name, value))


@attr.s(frozen=True, slots=True)
class ModelConfig:
    kind = attr.ib(type=str, default='cnn')
    channels = attr.ib(type=int, default=1, validator=_at_least(1))
    l_c = attr.ib(type=int, default=6, validator=_at_least(1))
    filters = attr.ib(type=int, default=32, validator=_at_least(1))
    height = attr.ib(type=int, default=16, validator=_at_least(1))
    width = attr.ib(type=int, default=16, validator=_at_least(1))
    lam = attr.ib(type=float, default=0.3, validator=_unit_interval)
    meta_dim = attr.ib(type=int, default=meta_size(48),
                       validator=_at_least(1))
    kernel_size = attr.ib(type=int, default=3, validator=_odd)
    depth = attr.ib(type=int, default=2, validator=_at_least(1))


@attr.s(frozen=True, slots=True)
class TrainConfig:
    batch_size = attr.ib(type=int, default=4, validator=_at_least(1))
    learning_rate = attr.ib(type=float, default=1e-4)
    max_epochs = attr.ib(type=int, default=200, validator=_at_least(1))
    patience = attr.ib(type=int, default=10, validator=_at_least(1))
    repeats = attr.ib(type=int, default=1, validator=_at_least(1))

    @learning_rate.validator
    def _check_lr(self, attribute: Any, value: float) -> None:
        if not value > 0:
            raise ValueError('learning_rate must be positive')


@attr.s(frozen=True, slots=True)
class EvalConfig:
    """threshold restricts metrics to cells whose truth is >= threshold.
    cells maps case-study names to (row, col)."""

    threshold = attr.ib(type=Optional[float], default=None)
    cells = attr.ib(type=tuple, default=(), converter=tuple)
    times = attr.ib(type=tuple, default=CASE_STUDY_TIMES, converter=tuple)

    @times.validator
    def _check_times(self, attribute: Any, value: Tuple[str, ...]) -> None:
        for text in value:
            seconds = parse_time_of_day(text)
            if not 0 <= seconds < SECONDS_PER_DAY:
                raise ValueError('time of day %r out of range' % text)

    def named_cells(self) -> Dict[str, Cell]:
        return {name: (int(row), int(col)) for name, row, col in self.cells}


@attr.s(frozen=True, slots=True)
class PathsConfig:
    trajectories = attr.ib(type=Optional[Path], default=None)
    calibrated = attr.ib(type=Optional[Path], default=None)
    density = attr.ib(type=Optional[Path], default=None)
    flow = attr.ib(type=Optional[Path], default=None)


@attr.s(frozen=True, slots=True)
class ExperimentSpec:
    paths = attr.ib(type=PathsConfig, factory=PathsConfig)
    mesh = attr.ib(type=MeshSpec, factory=lambda: preset_mesh('tokyo'))
    window = attr.ib(type=WindowSpec, factory=WindowSpec)
    model = attr.ib(type=ModelConfig)
    train = attr.ib(type=TrainConfig, factory=TrainConfig)
    eval = attr.ib(type=EvalConfig, factory=EvalConfig)
    calendar = attr.ib(type=Calendar, factory=Calendar)
    seed = attr.ib(type=int, default=0)
    out_dir = attr.ib(type=Path, default=Path('out'), converter=Path)
    name = attr.ib(type=str, default='synthetic')
    delta_tau = attr.ib(type=int, default=300)
    max_speed = attr.ib(type=float, default=50.0)
    k_anonymity = attr.ib(type=float, default=10.0, validator=_at_least(0))

    @model.default
    def _model_for_mesh(self) -> ModelConfig:
        return ModelConfig(l_c=self.window.l_c, height=self.mesh.height,
                           width=self.mesh.width,
                           meta_dim=meta_size(self.mesh.steps_per_day))

    @model.validator
    def _check_model(self, attribute: Any, value: ModelConfig) -> None:
        """The model must consume the windows and frames this spec
        produces."""
        mesh = self.mesh
        if value.l_c != self.window.l_c:
            raise ValueError('model l_c=%d differs from window l_c=%d'
                             % (value.l_c, self.window.l_c))
        if (value.height, value.width) != (mesh.height, mesh.width):
            raise ValueError('model grid %dx%d differs from the %dx%d mesh'
                             % (value.height, value.width, mesh.height,
                                mesh.width))
        if value.meta_dim != meta_size(mesh.steps_per_day):
            raise ValueError('model meta_dim=%d differs from %d for %d '
                             'frames a day' % (
                                 value.meta_dim,
                                 meta_size(mesh.steps_per_day),
                                 mesh.steps_per_day))

    @delta_tau.validator
    def _check_delta_tau(self, attribute: Any, value: int) -> None:
        if value <= 0 or self.mesh.frame_interval % value:
            raise ValueError('delta_tau=%r must divide the frame interval %d'
                             % (value, self.mesh.frame_interval))

    def require(self, *names: str) -> Tuple[Path, ...]:
        """Configured input paths that must exist."""
        found = []
        for name in names:
            path = getattr(self.paths, name)
            if path is None:
                raise ConfigError('[paths] %s is not configured' % name)
            if not Path(path).exists():
                raise ConfigError('[paths] %s: %s does not exist' % (
                    name, path))
            found.append(Path(path))
        return tuple(found)


def _section(data: Mapping[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError('[%s] must be a table' % name)
    return dict(value)


def _mesh(table: Dict[str, Any]) -> MeshSpec:
    preset = table.pop('preset', None)
    keys = ('lon_min', 'lon_max', 'lat_min', 'lat_max', 'd_lon', 'd_lat',
            'frame_interval')
    fields = {k: table.pop(k) for k in keys if k in table}
    if preset is not None:
        return attr.evolve(preset_mesh(preset), **fields)
    return MeshSpec(**fields)


def parse_config(data: Mapping[str, Any],
                 base_dir: Optional[PathLike]=None) -> ExperimentSpec:
    """Build an ExperimentSpec from a parsed TOML document.

    Relative paths are resolved against base_dir.
    """
    base = Path(base_dir) if base_dir is not None else Path('.')
    try:
        paths = {key: base / value
                 for key, value in _section(data, 'paths').items()}
        mesh_table = _section(data, 'mesh')
        extras = {key: mesh_table.pop(key)
                  for key in ('delta_tau', 'max_speed', 'k_anonymity')
                  if key in mesh_table}
        mesh = _mesh(mesh_table)
        if mesh_table:
            raise ConfigError('unknown [mesh] keys: %s' % ', '.join(
                sorted(mesh_table)))
        eval_table = _section(data, 'eval')
        cells = eval_table.pop('cells', {})
        calendar = Calendar.from_strings(
            _section(data, 'calendar').get('holidays', []))
        model_table = _section(data, 'model')
        model_table.setdefault('height', mesh.height)
        model_table.setdefault('width', mesh.width)
        model_table.setdefault('meta_dim', meta_size(mesh.steps_per_day))
        window = WindowSpec(**_section(data, 'window'))
        model_table.setdefault('l_c', window.l_c)
        top = {key: data[key] for key in ('seed', 'name') if key in data}
        if 'out_dir' in data:
            top['out_dir'] = base / data['out_dir']
        return ExperimentSpec(
            paths=PathsConfig(**paths),
            mesh=mesh,
            window=window,
            model=ModelConfig(**model_table),
            train=TrainConfig(**_section(data, 'train')),
            eval=EvalConfig(cells=tuple(
                (name, int(rc[0]), int(rc[1]))
                for name, rc in sorted(cells.items())), **eval_table),
            calendar=calendar,
            **top, **extras)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError('invalid configuration: %s' % exc)


def load_config(path: PathLike) -> ExperimentSpec:
    try:
        with open(path, 'rb') as fp:
            data = tomllib.load(fp)
    except OSError as exc:
        raise ConfigError('cannot read config %s: %s' % (path, exc))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError('cannot parse config %s: %s' % (path, exc))
    return parse_config(data, Path(path).parent)


def apply_overrides(spec: ExperimentSpec, **flags: Any) -> ExperimentSpec:
    """Replace config values with the flags that were given.

    Recognised flags: seed, out_dir, model (kind), repeats, channels, l_c,
    height, width.  None means not given.  l_c sets the window and the
    model; height and width must agree with the mesh.
    """
    flags = {k: v for k, v in flags.items() if v is not None}
    top = {k: flags.pop(k) for k in ('seed', 'out_dir') if k in flags}
    model = {}
    if 'model' in flags:
        model['kind'] = flags.pop('model')
    for key in ('channels', 'l_c', 'height', 'width'):
        if key in flags:
            model[key] = flags.pop(key)
    window = {}
    if 'l_c' in model:
        window['l_c'] = model['l_c']
    train = {}
    if 'repeats' in flags:
        train['repeats'] = flags.pop('repeats')
    if flags:
        raise ConfigError('unknown override(s): %s' % ', '.join(
            sorted(flags)))
    try:
        return attr.evolve(spec, window=attr.evolve(spec.window, **window),
                           model=attr.evolve(spec.model, **model),
                           train=attr.evolve(spec.train, **train), **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError('invalid override: %s' % exc)
