"""Trajectory parsing, cleaning and constant-rate calibration."""

import datetime
import io
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import (  # noqa
    Any,
    Iterator,
    List,
    Sequence,
    Tuple,
    Union,
)

import attr
import numpy as np
import pandas as pd

from .exceptions import (
    CalibrationRateError,
    EmptyObjectDayError,
    MalformedInputError,
)
from .helpers import (
    SECONDS_PER_DAY,
    TIMESTAMP_FORMAT,
    date_timestamp,
    format_timestamp,
    haversine_m,
    to_datetime,
)
from .log import ingest_logger
from .typedefs import Array, ByteSource, TextSink

__all__ = ('RawRecord', 'LineDiagnostic', 'ParseResult',
           'CalibratedTrajectory', 'parse_trajectories', 'clean',
           'calibrate', 'calibrate_all', 'write_trajectories',
           'write_calibrated', 'read_calibrated', 'TRAJECTORY_COLUMNS')

TRAJECTORY_COLUMNS = ('object_id', 'timestamp', 'lat', 'lon')
CALIBRATED_COLUMNS = ('object_id', 'date', 'slot', 'lat', 'lon')
DEFAULT_MAX_SPEED = 50.0
# bytes that were not UTF-8, kept as lone surrogates by _read_text
UNDECODABLE = re.compile('[\udc80-\udcff]')


def _check_lat(inst: Any, attribute: Any, value: float) -> None:
    if not -90.0 <= value <= 90.0:
        raise ValueError('lat %r outside [-90, 90]' % value)


def _check_lon(inst: Any, attribute: Any, value: float) -> None:
    if not -180.0 <= value <= 180.0:
        raise ValueError('lon %r outside [-180, 180]' % value)


@attr.s(frozen=True, slots=True)
class RawRecord:
    object_id = attr.ib(type=str)
    timestamp = attr.ib(type=int)
    lat = attr.ib(type=float, validator=_check_lat)
    lon = attr.ib(type=float, validator=_check_lon)

    @property
    def time(self) -> datetime.datetime:
        return to_datetime(self.timestamp)


@attr.s(frozen=True, slots=True)
class LineDiagnostic:
    line = attr.ib(type=int)
    reason = attr.ib(type=str)
    text = attr.ib(type=str)


def _empty_frame() -> pd.DataFrame:
    return pd.DataFrame({
        'object_id': pd.Series([], dtype=object),
        'timestamp': pd.Series([], dtype=np.int64),
        'lat': pd.Series([], dtype=np.float64),
        'lon': pd.Series([], dtype=np.float64),
    })


@attr.s(frozen=True, slots=True)
class ParseResult:
    """Records parsed from one trajectory-CSV stream.

    frame holds the well-formed records in input order with columns
    object_id, timestamp (seconds since the naive local epoch), lat, lon.
    diagnostics lists every rejected line.
    """

    frame = attr.ib(type=pd.DataFrame)
    diagnostics = attr.ib(type=tuple, default=())

    @property
    def malformed(self) -> int:
        return len(self.diagnostics)

    def records(self) -> List[RawRecord]:
        return [RawRecord(str(row.object_id), int(row.timestamp),
                          float(row.lat), float(row.lon))
                for row in self.frame.itertuples(index=False)]


def _read_text(source: ByteSource) -> str:
    try:
        if isinstance(source, (bytes, bytearray)):
            data = bytes(source)
        elif hasattr(source, 'read'):
            data = source.read()  # type: ignore
        else:
            data = Path(source).read_bytes()  # type: ignore
        if isinstance(data, str):
            return data
        return data.decode('utf-8', 'surrogateescape')
    except OSError as exc:
        raise MalformedInputError('unreadable trajectory stream: %s' % exc)


def parse_trajectories(source: ByteSource) -> ParseResult:
    """Parse a trajectory-CSV stream.

    Every well-formed line yields one record; every malformed line yields
    one LineDiagnostic carrying its 1-based line number.  A missing or
    wrong header is fatal.
    """
    lines = _read_text(source).split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise MalformedInputError('missing header', line=1)
    header = lines[0].rstrip('\r')
    if header != ','.join(TRAJECTORY_COLUMNS):
        raise MalformedInputError('bad header %r' % header, line=1)

    diagnostics = []  # type: List[LineDiagnostic]
    rows = []  # type: List[List[str]]
    numbers = []  # type: List[int]
    for lineno, text in enumerate(lines[1:], start=2):
        text = text.rstrip('\r')
        if not text:
            continue
        if UNDECODABLE.search(text):
            diagnostics.append(LineDiagnostic(
                lineno, 'invalid UTF-8',
                text.encode('utf-8', 'surrogateescape').decode(
                    'utf-8', 'replace')))
            continue
        fields = text.split(',')
        if len(fields) != len(TRAJECTORY_COLUMNS):
            diagnostics.append(LineDiagnostic(
                lineno, 'expected %d fields, got %d' % (
                    len(TRAJECTORY_COLUMNS), len(fields)), text))
            continue
        rows.append(fields)
        numbers.append(lineno)

    if not rows:
        frame = _empty_frame()
    else:
        raw = pd.DataFrame(rows, columns=list(TRAJECTORY_COLUMNS))
        when = pd.to_datetime(raw['timestamp'], format=TIMESTAMP_FORMAT,
                              errors='coerce')
        lat = pd.to_numeric(raw['lat'], errors='coerce')
        lon = pd.to_numeric(raw['lon'], errors='coerce')
        problems = pd.Series('', index=raw.index)
        problems[raw['object_id'] == ''] = 'empty object_id'
        problems[when.isna()] = 'bad timestamp'
        problems[lat.isna() | ~lat.between(-90.0, 90.0)] = 'bad lat'
        problems[lon.isna() | ~lon.between(-180.0, 180.0)] = 'bad lon'
        bad = problems != ''
        for idx in np.flatnonzero(bad.to_numpy()):
            diagnostics.append(LineDiagnostic(
                numbers[idx], problems.iat[idx], ','.join(rows[idx])))
        good = ~bad
        seconds = (when[good].to_numpy().astype('datetime64[s]')
                   .astype(np.int64))
        frame = pd.DataFrame({
            'object_id': raw['object_id'][good].to_numpy(dtype=object),
            'timestamp': seconds,
            'lat': lat[good].to_numpy(dtype=np.float64),
            'lon': lon[good].to_numpy(dtype=np.float64),
        })
        diagnostics.sort(key=lambda d: d.line)

    for diag in diagnostics:
        ingest_logger.warning('Skipping line %d: %s', diag.line, diag.reason)
    ingest_logger.info('Parsed %d records, %d malformed lines',
                       len(frame), len(diagnostics))
    return ParseResult(frame, tuple(diagnostics))


def _canonical_sort(frame: pd.DataFrame) -> pd.DataFrame:
    ordered = frame.reset_index(drop=True)
    ordered = ordered.assign(_order=np.arange(len(ordered)))
    ordered = ordered.sort_values(['object_id', 'timestamp', '_order'])
    return ordered.drop(columns='_order').reset_index(drop=True)


def _speed_mask(timestamps: Array, lat: Array, lon: Array,
                max_speed: float) -> Array:
    keep = np.ones(len(timestamps), dtype=bool)
    last = 0
    for i in range(1, len(timestamps)):
        dt = timestamps[i] - timestamps[last]
        dist = haversine_m(lat[last], lon[last], lat[i], lon[i])
        if dist > max_speed * dt:
            keep[i] = False
        else:
            last = i
    return keep


def clean(frame: pd.DataFrame,
          max_speed: float=DEFAULT_MAX_SPEED) -> pd.DataFrame:
    """Deduplicate and speed-filter records.

    Output is sorted by (object_id, timestamp).  A record is dropped when
    the straight-line speed from the last kept record of the same object
    exceeds max_speed (m/s).
    """
    if frame.empty:
        return _empty_frame()
    ordered = _canonical_sort(frame)
    ordered = ordered.drop_duplicates(subset=['object_id', 'timestamp'],
                                      keep='first')
    ordered = ordered.reset_index(drop=True)

    keep = np.ones(len(ordered), dtype=bool)
    ts = ordered['timestamp'].to_numpy(dtype=np.int64)
    lat = ordered['lat'].to_numpy(dtype=np.float64)
    lon = ordered['lon'].to_numpy(dtype=np.float64)
    ids = ordered['object_id'].to_numpy()
    bounds = np.flatnonzero(ids[1:] != ids[:-1]) + 1
    starts = np.concatenate([[0], bounds])
    stops = np.concatenate([bounds, [len(ordered)]])
    for start, stop in zip(starts, stops):
        keep[start:stop] = _speed_mask(ts[start:stop], lat[start:stop],
                                       lon[start:stop], max_speed)

    dropped = int(len(keep) - keep.sum())
    if dropped:
        ingest_logger.info('Speed filter removed %d records', dropped)
    return ordered[keep].reset_index(drop=True)


@attr.s(frozen=True, slots=True, eq=False)
class CalibratedTrajectory:
    """One object-day resampled at a constant interval.

    lat/lon hold one entry per slot of the day (86400 / delta_tau entries);
    slots outside the observed span are NaN (absent).
    """

    object_id = attr.ib(type=str)
    day = attr.ib(type=datetime.date)
    delta_tau = attr.ib(type=int)
    lat = attr.ib(type=np.ndarray)
    lon = attr.ib(type=np.ndarray)

    @property
    def slots_per_day(self) -> int:
        return SECONDS_PER_DAY // self.delta_tau

    @property
    def present(self) -> Array:
        return ~np.isnan(self.lat)

    @property
    def slot_indices(self) -> Array:
        return np.flatnonzero(self.present)

    @property
    def day_timestamp(self) -> int:
        return date_timestamp(self.day)

    def points(self) -> Iterator[Tuple[int, float, float]]:
        for slot in self.slot_indices:
            yield int(slot), float(self.lat[slot]), float(self.lon[slot])


def _interpolate(obs_t: Array, obs_v: Array, slot_t: Array) -> Array:
    # clamped outside the observed span
    right = np.searchsorted(obs_t, slot_t, side='right')
    left = np.clip(right - 1, 0, len(obs_t) - 1)
    right = np.clip(right, 0, len(obs_t) - 1)
    t0 = obs_t[left]
    t1 = obs_t[right]
    v0 = obs_v[left]
    v1 = obs_v[right]
    span = np.where(t1 > t0, t1 - t0, 1)
    frac = np.clip((slot_t - t0) / span, 0.0, 1.0)
    frac = np.where(t1 > t0, frac, 0.0)
    values = v0 + frac * (v1 - v0)
    values = np.clip(values, np.minimum(v0, v1), np.maximum(v0, v1))
    return np.where(slot_t == t0, v0, values)


def calibrate(records: pd.DataFrame, delta_tau: int) -> CalibratedTrajectory:
    """Resample one object-day to a constant interval of delta_tau seconds.

    Slots between the first and last observation (rounded outward to the
    slot grid) are filled by linear interpolation in lat and lon; the
    outward rounding is filled with the nearest observation.
    """
    if delta_tau <= 0 or SECONDS_PER_DAY % delta_tau:
        raise CalibrationRateError(
            'delta_tau=%r does not divide a day' % delta_tau)
    if records.empty:
        raise EmptyObjectDayError()

    ordered = records.sort_values('timestamp', kind='mergesort')
    ordered = ordered.drop_duplicates(subset='timestamp', keep='first')
    ts = ordered['timestamp'].to_numpy(dtype=np.int64)
    day_start = int(ts[0] - ts[0] % SECONDS_PER_DAY)
    seconds = ts - day_start
    if seconds[-1] >= SECONDS_PER_DAY:
        raise CalibrationRateError('records span more than one day')

    slots = SECONDS_PER_DAY // delta_tau
    first = int(seconds[0] // delta_tau)
    last = min(int(-(-seconds[-1] // delta_tau)), slots - 1)
    slot_t = np.arange(first, last + 1, dtype=np.int64) * delta_tau

    lat = np.full(slots, np.nan)
    lon = np.full(slots, np.nan)
    lat[first:last + 1] = _interpolate(
        seconds, ordered['lat'].to_numpy(dtype=np.float64), slot_t)
    lon[first:last + 1] = _interpolate(
        seconds, ordered['lon'].to_numpy(dtype=np.float64), slot_t)

    return CalibratedTrajectory(
        object_id=str(ordered['object_id'].iat[0]),
        day=to_datetime(day_start).date(),
        delta_tau=int(delta_tau),
        lat=lat, lon=lon)


def calibrate_all(frame: pd.DataFrame, delta_tau: int, *,
                  workers: int=1) -> List[CalibratedTrajectory]:
    """Calibrate every object-day of a record table.

    Object-days are independent; with workers > 1 they are processed on a
    thread pool.  The result is sorted by (object_id, day) whatever the
    scheduling.
    """
    if frame.empty:
        return []
    days = frame['timestamp'].to_numpy(dtype=np.int64) // SECONDS_PER_DAY
    groups = [group for _, group in
              frame.assign(_day=days).groupby(['object_id', '_day'],
                                              sort=True)]

    def job(group: pd.DataFrame) -> CalibratedTrajectory:
        return calibrate(group, delta_tau)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            result = list(pool.map(job, groups))
    else:
        result = [job(group) for group in groups]
    result.sort(key=lambda traj: (traj.object_id, traj.day))
    ingest_logger.info('Calibrated %d object-days at %ds',
                       len(result), delta_tau)
    return result


def _write_frame(frame: pd.DataFrame, sink: TextSink) -> None:
    if hasattr(sink, 'write'):
        frame.to_csv(sink, index=False, lineterminator='\n')
    else:
        with open(sink, 'w', encoding='utf-8', newline='') as fp:  # type: ignore  # noqa
            frame.to_csv(fp, index=False, lineterminator='\n')


def write_trajectories(frame: pd.DataFrame, sink: TextSink) -> None:
    """Write records as trajectory-CSV."""
    out = pd.DataFrame({
        'object_id': frame['object_id'].astype(str),
        'timestamp': [format_timestamp(t) for t in frame['timestamp']],
        'lat': frame['lat'].map(repr),
        'lon': frame['lon'].map(repr),
    }, columns=list(TRAJECTORY_COLUMNS))
    _write_frame(out, sink)


def trajectories_text(frame: pd.DataFrame) -> str:
    buf = io.StringIO()
    write_trajectories(frame, buf)
    return buf.getvalue()


def write_calibrated(trajectories: Sequence[CalibratedTrajectory],
                     sink: TextSink) -> None:
    """Calibrated CSV: one line per present slot."""
    parts = []
    for traj in trajectories:
        slots = traj.slot_indices
        parts.append(pd.DataFrame({
            'object_id': traj.object_id,
            'date': traj.day.isoformat(),
            'slot': slots,
            'lat': traj.lat[slots].astype(object),
            'lon': traj.lon[slots].astype(object),
        }, columns=list(CALIBRATED_COLUMNS)))
    if parts:
        out = pd.concat(parts, ignore_index=True)
        out['lat'] = out['lat'].map(repr)
        out['lon'] = out['lon'].map(repr)
    else:
        out = pd.DataFrame(columns=list(CALIBRATED_COLUMNS))
    _write_frame(out, sink)


def read_calibrated(source: Union[str, Path, Any],
                    delta_tau: int) -> List[CalibratedTrajectory]:
    """Inverse of write_calibrated."""
    table = pd.read_csv(source, dtype={'object_id': str, 'date': str},
                        keep_default_na=False)
    if list(table.columns) != list(CALIBRATED_COLUMNS):
        raise MalformedInputError('bad calibrated header %r' % (
            ','.join(table.columns),), line=1)
    slots = SECONDS_PER_DAY // delta_tau
    result = []
    for (object_id, day), group in table.groupby(['object_id', 'date'],
                                                 sort=True):
        index = group['slot'].to_numpy(dtype=np.int64)
        if index.min() < 0 or index.max() >= slots:
            raise CalibrationRateError(
                'slot index out of range for delta_tau=%d' % delta_tau)
        lat = np.full(slots, np.nan)
        lon = np.full(slots, np.nan)
        lat[index] = group['lat'].to_numpy(dtype=np.float64)
        lon[index] = group['lon'].to_numpy(dtype=np.float64)
        result.append(CalibratedTrajectory(
            object_id=str(object_id),
            day=datetime.date.fromisoformat(day),
            delta_tau=int(delta_tau), lat=lat, lon=lon))
    return result
