"""Seeded synthetic trajectories with a commuting pattern.

Each object gets a home and a work cell.  Weekdays go home -> work ->
home with jittered departures, weekends make an optional excursion near
home.  Records are emitted at irregular times (about records_per_day per
day, plus the waypoints of the day plan) as trajectory-CSV text.
"""

import datetime
from typing import Any, List, Tuple  # noqa

import attr
import numpy as np
import pandas as pd

from .helpers import SECONDS_PER_DAY, date_timestamp, make_rng
from .ingest import trajectories_text
from .log import ingest_logger
from .rasterize import MeshSpec
from .typedefs import Cell

__all__ = ('SynthConfig', 'generate', 'generate_frame', 'make_closed_world',
           'closed_world_frame', 'object_cells', 'default_mesh', 'PATTERNS')

PATTERNS = ('commuting', 'stationary')
HOUR = 3600
LAST_SECOND = SECONDS_PER_DAY - 1
# stationary points stay this fraction of a cell around the cell centre
JITTER = 0.3


def default_mesh() -> MeshSpec:
    return MeshSpec(lon_min=139.70, lon_max=139.78, lat_min=35.64,
                    lat_max=35.704)


def _positive(inst: Any, attribute: Any, value: Any) -> None:
    if value < 1:
        raise ValueError('%s must be >= 1, got %r' % (attribute.name, value))


@attr.s(frozen=True, slots=True)
class SynthConfig:
    n_objects = attr.ib(type=int, default=50, validator=_positive)
    n_days = attr.ib(type=int, default=7, validator=_positive)
    mesh = attr.ib(type=MeshSpec, factory=default_mesh)
    delta_tau = attr.ib(type=int, default=300)
    seed = attr.ib(type=int, default=0)
    start_date = attr.ib(type=datetime.date,
                         default=datetime.date(2017, 4, 1))
    records_per_day = attr.ib(type=float, default=20.0)
    pattern = attr.ib(type=str, default='commuting')
    move_probability = attr.ib(type=float, default=0.3)

    @delta_tau.validator
    def _check_delta_tau(self, attribute: Any, value: int) -> None:
        if value <= 0 or self.mesh.frame_interval % value:
            raise ValueError('delta_tau=%r must divide the frame interval'
                             % value)

    @pattern.validator
    def _check_pattern(self, attribute: Any, value: str) -> None:
        if value not in PATTERNS:
            raise ValueError('pattern must be one of %s' % (PATTERNS,))

    @move_probability.validator
    def _check_probability(self, attribute: Any, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError('move_probability must lie in [0, 1]')


def _object_id(index: int) -> str:
    return 'u%05d' % index


def _draw_cells(rng: np.random.Generator, mesh: MeshSpec) -> Tuple[Cell,
                                                                   Cell]:
    home = (int(rng.integers(mesh.height)), int(rng.integers(mesh.width)))
    work = home
    while mesh.cells > 1 and work == home:
        work = (int(rng.integers(mesh.height)),
                int(rng.integers(mesh.width)))
    return home, work


def object_cells(config: SynthConfig) -> List[Tuple[Cell, Cell]]:
    """(home, work) of every object, as generate() draws them."""
    return [_draw_cells(make_rng(config.seed, 3, i), config.mesh)
            for i in range(config.n_objects)]


def _clip_cell(cell: Cell, mesh: MeshSpec) -> Cell:
    return (min(max(cell[0], 0), mesh.height - 1),
            min(max(cell[1], 0), mesh.width - 1))


def _day_plan(config: SynthConfig, rng: np.random.Generator,
              day: datetime.date, home: Cell,
              work: Cell) -> List[Tuple[int, Cell]]:
    """Waypoints (second of day, cell); the object stays put between equal
    consecutive cells and moves in a straight line otherwise."""
    if config.pattern == 'stationary':
        return [(0, home), (LAST_SECOND, home)]
    if day.weekday() < 5:
        leave = int(np.clip(7.5 * HOUR + rng.normal(0, 1800),
                            6 * HOUR, 9.5 * HOUR))
        arrive = leave + int(rng.integers(1800, 3601))
        back = int(np.clip(18 * HOUR + rng.normal(0, 2700),
                           16 * HOUR, 20.5 * HOUR))
        home_again = back + int(rng.integers(1800, 3601))
        return [(0, home), (leave, home), (arrive, work), (back, work),
                (home_again, home), (LAST_SECOND, home)]
    if rng.random() < 0.7:
        offset = rng.integers(-3, 4, size=2)
        spot = _clip_cell((home[0] + int(offset[0]),
                           home[1] + int(offset[1])), config.mesh)
        leave = int(rng.integers(10 * HOUR, 14 * HOUR))
        arrive = leave + int(rng.integers(900, 2701))
        back = arrive + int(rng.integers(HOUR, 4 * HOUR))
        home_again = back + int(rng.integers(900, 2701))
        return [(0, home), (leave, home), (arrive, spot), (back, spot),
                (home_again, home), (LAST_SECOND, home)]
    return [(0, home), (LAST_SECOND, home)]


def _object_frame(config: SynthConfig, index: int) -> pd.DataFrame:
    mesh = config.mesh
    rng = make_rng(config.seed, 3, index)
    home, work = _draw_cells(rng, mesh)
    parts = []
    for d in range(config.n_days):
        day = config.start_date + datetime.timedelta(days=d)
        plan = _day_plan(config, rng, day, home, work)
        key_t = np.array([t for t, _ in plan], dtype=np.float64)
        centers = [mesh.cell_center(*cell) for _, cell in plan]
        extra = rng.poisson(max(config.records_per_day - len(plan), 0.0))
        times = np.unique(np.concatenate([
            key_t.astype(np.int64),
            rng.integers(0, SECONDS_PER_DAY, size=extra)]))
        lat = np.interp(times, key_t, [c[0] for c in centers])
        lon = np.interp(times, key_t, [c[1] for c in centers])
        lat += rng.uniform(-JITTER, JITTER, times.size) * mesh.d_lat
        lon += rng.uniform(-JITTER, JITTER, times.size) * mesh.d_lon
        parts.append(pd.DataFrame({
            'object_id': _object_id(index),
            'timestamp': date_timestamp(day) + times,
            'lat': np.round(lat, 6),
            'lon': np.round(lon, 6),
        }))
    return pd.concat(parts, ignore_index=True)


def generate_frame(config: SynthConfig) -> pd.DataFrame:
    frame = pd.concat([_object_frame(config, i)
                       for i in range(config.n_objects)], ignore_index=True)
    ingest_logger.info('Generated %d records for %d objects over %d days',
                       len(frame), config.n_objects, config.n_days)
    return frame


def generate(config: SynthConfig) -> str:
    """Trajectory-CSV text; identical for identical configs."""
    return trajectories_text(generate_frame(config))


def closed_world_frame(config: SynthConfig) -> pd.DataFrame:
    """One record per object at every delta_tau slot, always at the centre
    of a cell inside the mesh.  At each frame boundary an object moves to
    a neighbouring cell with probability move_probability."""
    mesh = config.mesh
    slots = config.n_days * SECONDS_PER_DAY // config.delta_tau
    per_frame = mesh.frame_interval // config.delta_tau
    base = date_timestamp(config.start_date)
    stamps = base + np.arange(slots, dtype=np.int64) * config.delta_tau
    parts = []
    for index in range(config.n_objects):
        rng = make_rng(config.seed, 4, index)
        cell = (int(rng.integers(mesh.height)),
                int(rng.integers(mesh.width)))
        rows = np.empty(slots, dtype=np.int64)
        cols = np.empty(slots, dtype=np.int64)
        for s in range(slots):
            if s and s % per_frame == 0 and \
                    rng.random() < config.move_probability:
                step = rng.integers(-1, 2, size=2)
                cell = _clip_cell((cell[0] + int(step[0]),
                                   cell[1] + int(step[1])), mesh)
            rows[s], cols[s] = cell
        parts.append(pd.DataFrame({
            'object_id': _object_id(index),
            'timestamp': stamps,
            'lat': mesh.lat_min + (rows + 0.5) * mesh.d_lat,
            'lon': mesh.lon_min + (cols + 0.5) * mesh.d_lon,
        }))
    return pd.concat(parts, ignore_index=True)


def make_closed_world(config: SynthConfig) -> str:
    return trajectories_text(closed_world_frame(config))
