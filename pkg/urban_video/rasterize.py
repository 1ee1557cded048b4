"""Mesh-grid aggregation of calibrated trajectories into urban videos."""

import datetime
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional, Sequence, Tuple  # noqa

import attr
import numpy as np

from .exceptions import CalibrationRateError, ShapeMismatchError
from .helpers import SECONDS_PER_DAY, cell_index, date_timestamp, to_datetime
from .ingest import CalibratedTrajectory
from .log import raster_logger
from .typedefs import Array, Cell, IntArray

__all__ = ('MeshSpec', 'VideoTensor', 'VideoSummary', 'DENSITY', 'FLOW',
           'grid_of', 'grid_cells', 'density_frame', 'flow_frame',
           'build_video', 'k_anonymize', 'summarize', 'preset_mesh',
           'MESH_PRESETS')

DENSITY = 'density'
FLOW = 'flow'
CHANNEL_LABELS = {
    DENSITY: ('density',),
    FLOW: ('inflow', 'outflow'),
}
ABSENT = -1


def _positive(inst: Any, attribute: Any, value: float) -> None:
    if not value > 0:
        raise ValueError('%s must be positive, got %r' % (
            attribute.name, value))


def _divides_day(inst: Any, attribute: Any, value: int) -> None:
    if value <= 0 or SECONDS_PER_DAY % value:
        raise ValueError('frame_interval=%r does not divide a day' % value)


@attr.s(frozen=True, slots=True)
class MeshSpec:
    """Regular lat/lon partition of an urban bounding box.

    Row 0 is the southernmost row (lat_min), col 0 the westernmost column
    (lon_min).  Cells are half-open: [edge, edge + d).
    """

    lon_min = attr.ib(type=float)
    lon_max = attr.ib(type=float)
    lat_min = attr.ib(type=float)
    lat_max = attr.ib(type=float)
    d_lon = attr.ib(type=float, default=0.005, validator=_positive)
    d_lat = attr.ib(type=float, default=0.004, validator=_positive)
    frame_interval = attr.ib(type=int, default=1800, validator=_divides_day)

    def __attrs_post_init__(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError('mesh must have at least one row and column')

    @property
    def height(self) -> int:
        return int(round((self.lat_max - self.lat_min) / self.d_lat))

    @property
    def width(self) -> int:
        return int(round((self.lon_max - self.lon_min) / self.d_lon))

    @property
    def cells(self) -> int:
        return self.height * self.width

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.frame_interval

    def cell_center(self, row: int, col: int) -> Tuple[float, float]:
        return (self.lat_min + (row + 0.5) * self.d_lat,
                self.lon_min + (col + 0.5) * self.d_lon)


MESH_PRESETS = {
    'tokyo': MeshSpec(lon_min=139.50, lon_max=139.90,
                      lat_min=35.50, lat_max=35.82),
    'osaka': MeshSpec(lon_min=135.35, lon_max=135.65,
                      lat_min=34.58, lat_max=34.82),
}  # type: Dict[str, MeshSpec]


def preset_mesh(name: str) -> MeshSpec:
    try:
        return MESH_PRESETS[name.lower()]
    except KeyError:
        raise ValueError('unknown mesh preset %r, known: %s' % (
            name, ', '.join(sorted(MESH_PRESETS))))


def _check_video(inst: 'VideoTensor', attribute: Any, value: Array) -> None:
    if value.ndim != 4:
        raise ShapeMismatchError('video data', ('T', 'H', 'W', 'C'),
                                 value.shape)
    if value.shape[-1] != len(inst.channel_labels):
        raise ShapeMismatchError(
            'video channels', (len(inst.channel_labels),),
            (value.shape[-1],))
    if value.size and (not np.all(np.isfinite(value)) or value.min() < 0):
        raise ValueError('video values must be finite and non-negative')


@attr.s(frozen=True, slots=True, eq=False)
class VideoTensor:
    """A (T, H, W, C) stack of citywide frames, one per frame_interval."""

    channel_labels = attr.ib(type=tuple, converter=tuple)
    data = attr.ib(type=np.ndarray, validator=_check_video)
    start_timestamp = attr.ib(type=int, default=0)
    frame_interval = attr.ib(type=int, default=1800,
                             validator=_divides_day)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.data.shape  # type: ignore

    @property
    def frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def channels(self) -> int:
        return int(self.data.shape[-1])

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.frame_interval

    @property
    def kind(self) -> str:
        for kind, labels in CHANNEL_LABELS.items():
            if labels == self.channel_labels:
                return kind
        return 'custom'

    def frame_timestamp(self, t: int) -> int:
        return self.start_timestamp + int(t) * self.frame_interval

    def frame_timestamps(self) -> IntArray:
        return (self.start_timestamp +
                np.arange(self.frames, dtype=np.int64) * self.frame_interval)

    def with_data(self, data: Array) -> 'VideoTensor':
        return attr.evolve(self, data=data)


def labels_for(kind: str) -> Tuple[str, ...]:
    try:
        return CHANNEL_LABELS[kind]
    except KeyError:
        raise ValueError('unknown video kind %r' % kind)


def grid_of(lat: float, lon: float, mesh: MeshSpec) -> Optional[Cell]:
    """Cell containing a point, or None outside the bounding box."""
    rows, cols = grid_cells(np.array([lat], dtype=np.float64),
                            np.array([lon], dtype=np.float64), mesh)
    if rows[0] == ABSENT:
        return None
    return int(rows[0]), int(cols[0])


def grid_cells(lat: Array, lon: Array,
               mesh: MeshSpec) -> Tuple[IntArray, IntArray]:
    """Vectorised grid_of; NaN or outside points map to (-1, -1)."""
    valid = ~(np.isnan(lat) | np.isnan(lon))
    rows = np.full(lat.shape, ABSENT, dtype=np.int64)
    cols = np.full(lat.shape, ABSENT, dtype=np.int64)
    r = cell_index(lat[valid], mesh.lat_min, mesh.d_lat)
    c = cell_index(lon[valid], mesh.lon_min, mesh.d_lon)
    inside = (r >= 0) & (r < mesh.height) & (c >= 0) & (c < mesh.width)
    rows[valid] = np.where(inside, r, ABSENT)
    cols[valid] = np.where(inside, c, ABSENT)
    return rows, cols


def cell_ids(rows: IntArray, cols: IntArray, mesh: MeshSpec) -> IntArray:
    """Flat cell ids (row * W + col); absent positions stay -1."""
    ids = rows * mesh.width + cols
    return np.where((rows == ABSENT) | (cols == ABSENT), ABSENT, ids)


def density_frame(positions: IntArray, mesh: MeshSpec) -> Array:
    """Per-cell object count for one slot.

    positions: flat cell id per object, -1 for absent or out-of-box.
    """
    positions = np.asarray(positions, dtype=np.int64)
    counts = np.bincount(positions[positions >= 0], minlength=mesh.cells)
    return counts.astype(np.float64).reshape(mesh.height, mesh.width, 1)


def flow_frame(prev: IntArray, curr: IntArray, mesh: MeshSpec) -> Array:
    """Inflow (channel 0) and outflow (channel 1) between two slots.

    An absent position never equals a cell, so objects appearing count as
    inflow and objects disappearing count as outflow.
    """
    prev = np.asarray(prev, dtype=np.int64)
    curr = np.asarray(curr, dtype=np.int64)
    if prev.shape != curr.shape:
        raise ShapeMismatchError('flow positions', prev.shape, curr.shape)
    moved = prev != curr
    inflow = np.bincount(curr[moved & (curr >= 0)], minlength=mesh.cells)
    outflow = np.bincount(prev[moved & (prev >= 0)], minlength=mesh.cells)
    frame = np.stack([inflow, outflow], axis=-1).astype(np.float64)
    return frame.reshape(mesh.height, mesh.width, 2)


def _position_matrix(trajectories: Sequence[CalibratedTrajectory],
                     mesh: MeshSpec, first_day: datetime.date,
                     n_days: int) -> IntArray:
    objects = sorted({traj.object_id for traj in trajectories})
    index = {object_id: i for i, object_id in enumerate(objects)}
    steps = mesh.steps_per_day
    positions = np.full((len(objects), n_days * steps), ABSENT,
                        dtype=np.int64)
    for traj in trajectories:
        if mesh.frame_interval % traj.delta_tau:
            raise CalibrationRateError(
                'delta_tau=%d does not divide frame_interval=%d' % (
                    traj.delta_tau, mesh.frame_interval))
        offset = (traj.day - first_day).days
        if not 0 <= offset < n_days:
            continue
        stride = mesh.frame_interval // traj.delta_tau
        lat = traj.lat[::stride]
        lon = traj.lon[::stride]
        rows, cols = grid_cells(lat, lon, mesh)
        start = offset * steps
        positions[index[traj.object_id], start:start + steps] = cell_ids(
            rows, cols, mesh)
    return positions


def _aggregate(positions: IntArray, mesh: MeshSpec, kind: str,
               start: int, stop: int) -> Array:
    frames = stop - start
    hw = mesh.cells
    if kind == DENSITY:
        block = positions[:, start:stop]
        t = np.broadcast_to(np.arange(frames), block.shape)
        mask = block >= 0
        counts = np.bincount((t[mask] * hw + block[mask]),
                             minlength=frames * hw)
        return counts.astype(np.float64).reshape(frames, mesh.height,
                                                 mesh.width, 1)
    out = np.zeros((frames, mesh.height, mesh.width, 2))
    for i, t in enumerate(range(start, stop)):
        if t == 0:
            continue
        out[i] = flow_frame(positions[:, t - 1], positions[:, t], mesh)
    return out


def build_video(trajectories: Sequence[CalibratedTrajectory],
                mesh: MeshSpec, kind: str, *,
                first_day: Optional[datetime.date]=None,
                n_days: Optional[int]=None,
                workers: int=1) -> VideoTensor:
    """Aggregate calibrated trajectories into a density or flow video.

    The video covers whole days from first_day (default: earliest
    trajectory day) for n_days (default: through the latest trajectory
    day).  Flow frame 0 is all-zero as it has no predecessor.  Frames are
    split into contiguous chunks when workers > 1; chunk results are exact
    integer counts, so the output does not depend on the worker count.
    """
    labels = labels_for(kind)
    if first_day is None:
        first_day = (min(traj.day for traj in trajectories)
                     if trajectories else to_datetime(0).date())
    if n_days is None:
        if trajectories:
            n_days = (max(traj.day for traj in trajectories) -
                      first_day).days + 1
        else:
            n_days = 1
    positions = _position_matrix(trajectories, mesh, first_day, n_days)
    total = n_days * mesh.steps_per_day

    if workers > 1 and total > 1:
        edges = np.linspace(0, total, min(workers, total) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                lambda span: _aggregate(positions, mesh, kind, *span),
                zip(edges[:-1], edges[1:])))
        data = np.concatenate(chunks, axis=0)
    else:
        data = _aggregate(positions, mesh, kind, 0, total)

    raster_logger.info('Built %s video %s from %d trajectories',
                       kind, data.shape, len(trajectories))
    return VideoTensor(channel_labels=labels, data=data,
                       start_timestamp=date_timestamp(first_day),
                       frame_interval=mesh.frame_interval)


def k_anonymize(video: VideoTensor, k: float) -> VideoTensor:
    """Zero every value strictly below k."""
    if k < 0:
        raise ValueError('k must be non-negative, got %r' % k)
    data = np.where(video.data < k, 0.0, video.data)
    return video.with_data(data)


@attr.s(frozen=True, slots=True)
class VideoSummary:
    kind = attr.ib(type=str)
    frames = attr.ib(type=int)
    height = attr.ib(type=int)
    width = attr.ib(type=int)
    channels = attr.ib(type=int)
    start = attr.ib(type=str)
    end = attr.ib(type=str)
    frame_interval = attr.ib(type=int)
    max_value = attr.ib(type=float)


def summarize(video: VideoTensor) -> VideoSummary:
    """Shape, time period and maximum value of a video."""
    t, h, w, c = video.shape
    last = video.frame_timestamp(max(t - 1, 0))
    return VideoSummary(
        kind=video.kind, frames=t, height=h, width=w, channels=c,
        start=to_datetime(video.start_timestamp).isoformat(sep=' '),
        end=to_datetime(last).isoformat(sep=' '),
        frame_interval=video.frame_interval,
        max_value=float(video.data.max()) if video.data.size else 0.0)
