"""Scaling, calendar metadata and Closeness/Period/Trend sample windows.

Samples are views into one scaled copy of the video; nothing is
materialised per sample until batches are collated.
"""

import datetime
from typing import Any, Iterable, Iterator, List, Optional  # noqa
from typing import Sequence, Tuple  # noqa

import attr
import numpy as np

from .exceptions import ShapeMismatchError, TooFewSamplesError
from .exceptions import VideoTooShortError
from .helpers import SECONDS_PER_DAY, parse_date, to_datetime
from .log import dataset_logger
from .rasterize import VideoTensor
from .typedefs import Array, IntArray

__all__ = ('Scaler', 'fit_scaler', 'WindowSpec', 'Calendar', 'WEEKDAY',
           'WEEKEND', 'encode_meta', 'meta_size', 'Sample', 'Batch',
           'make_samples', 'make_paired_samples', 'split', 'collate',
           'iterate_batches', 'MIN_SAMPLES')

WEEKDAY = 'weekday'
WEEKEND = 'weekend'
MIN_SAMPLES = 5
SCALE_ON = ('all', 'train')


@attr.s(frozen=True, slots=True)
class Scaler:
    """Min-max scaling to [0, 1] with one pair of bounds per dataset.

    A degenerate scaler (max == min) maps everything to 0 and its inverse
    returns the constant.
    """

    min_value = attr.ib(type=float)
    max_value = attr.ib(type=float)

    @property
    def degenerate(self) -> bool:
        return self.max_value == self.min_value

    @property
    def span(self) -> float:
        return self.max_value - self.min_value

    def scale(self, x: Array) -> Array:
        x = np.asarray(x, dtype=np.float64)
        if self.degenerate:
            return np.zeros_like(x)
        return (x - self.min_value) / self.span

    def inverse_scale(self, y: Array) -> Array:
        y = np.asarray(y, dtype=np.float64)
        if self.degenerate:
            return np.full_like(y, self.min_value)
        return y * self.span + self.min_value


def fit_scaler(video: VideoTensor, upto: Optional[int]=None) -> Scaler:
    """Bounds over the whole tensor, or over frames [0, upto)."""
    data = video.data if upto is None else video.data[:upto]
    if not data.size:
        raise ValueError('cannot fit a scaler on an empty video')
    scaler = Scaler(float(data.min()), float(data.max()))
    if scaler.degenerate:
        dataset_logger.warning('Degenerate scaler: every value is %r',
                               scaler.min_value)
    return scaler


def _check_window(inst: 'WindowSpec', attribute: Any, value: Any) -> None:
    if inst.l_c < 1:
        raise ValueError('l_c must be >= 1, got %r' % inst.l_c)
    if not 0 == inst.T_c < inst.T_p < inst.T_t:
        raise ValueError('window offsets must satisfy 0 = T_c < T_p < T_t, '
                         'got %r, %r, %r' % (inst.T_c, inst.T_p, inst.T_t))
    if inst.scale_on not in SCALE_ON:
        raise ValueError('scale_on must be one of %s' % (SCALE_ON,))


@attr.s(frozen=True, slots=True)
class WindowSpec:
    """Window length and the Closeness/Period/Trend offsets in frames."""

    l_c = attr.ib(type=int, default=6)
    T_c = attr.ib(type=int, default=0)
    T_p = attr.ib(type=int, default=48)
    T_t = attr.ib(type=int, default=336)
    scale_on = attr.ib(type=str, default='all', validator=_check_window)

    @property
    def min_length(self) -> int:
        return self.T_t + self.l_c + 1

    @property
    def first_target(self) -> int:
        return self.T_t + self.l_c

    def indices(self, t: int, offset: int) -> range:
        return range(t - offset - self.l_c, t - offset)


@attr.s(frozen=True, slots=True)
class Calendar:
    """Weekday and holiday lookup; Monday is day 0."""

    holidays = attr.ib(type=frozenset, default=frozenset(),
                       converter=frozenset)

    @classmethod
    def from_strings(cls, dates: Iterable[str]) -> 'Calendar':
        return cls(frozenset(parse_date(d) for d in dates))

    def weekday(self, day: datetime.date) -> int:
        return day.weekday()

    def is_holiday(self, day: datetime.date) -> bool:
        return day in self.holidays

    def day_type(self, day: datetime.date) -> str:
        if self.weekday(day) >= 5 or self.is_holiday(day):
            return WEEKEND
        return WEEKDAY


def meta_size(steps_per_day: int) -> int:
    return steps_per_day + 7 + 1


def encode_meta(t_index: int, calendar: Calendar, steps_per_day: int, *,
                start_timestamp: int=0) -> Array:
    """One-hot time of day, one-hot day of week and the holiday flag of
    frame t_index."""
    interval = SECONDS_PER_DAY // steps_per_day
    stamp = start_timestamp + int(t_index) * interval
    day = to_datetime(stamp).date()
    vector = np.zeros(meta_size(steps_per_day))
    vector[(stamp % SECONDS_PER_DAY) // interval] = 1.0
    vector[steps_per_day + calendar.weekday(day)] = 1.0
    vector[-1] = float(calendar.is_holiday(day))
    return vector


def _meta_table(video: VideoTensor, calendar: Calendar) -> Array:
    steps = video.steps_per_day
    stamps = video.frame_timestamps()
    table = np.zeros((video.frames, meta_size(steps)))
    table[np.arange(video.frames),
          (stamps % SECONDS_PER_DAY) // video.frame_interval] = 1.0
    day_numbers = stamps // SECONDS_PER_DAY
    for number in np.unique(day_numbers):
        day = to_datetime(int(number) * SECONDS_PER_DAY).date()
        hit = day_numbers == number
        table[hit, steps + calendar.weekday(day)] = 1.0
        table[hit, -1] = float(calendar.is_holiday(day))
    return table


@attr.s(frozen=True, slots=True, eq=False)
class Sample:
    """One supervised instance.  Windows are (l_c, H, W, C), meta blocks
    (l_c, M), the target (H, W, C).  aux_* carry the second task of a
    paired density/flow sample."""

    closeness = attr.ib(type=np.ndarray)
    period = attr.ib(type=np.ndarray)
    trend = attr.ib(type=np.ndarray)
    meta_closeness = attr.ib(type=np.ndarray)
    meta_period = attr.ib(type=np.ndarray)
    meta_trend = attr.ib(type=np.ndarray)
    target = attr.ib(type=np.ndarray)
    t_index = attr.ib(type=int)
    aux_closeness = attr.ib(type=np.ndarray, default=None)
    aux_target = attr.ib(type=np.ndarray, default=None)


@attr.s(frozen=True, slots=True, eq=False)
class Batch:
    closeness = attr.ib(type=np.ndarray)
    period = attr.ib(type=np.ndarray)
    trend = attr.ib(type=np.ndarray)
    meta_closeness = attr.ib(type=np.ndarray)
    meta_period = attr.ib(type=np.ndarray)
    meta_trend = attr.ib(type=np.ndarray)
    target = attr.ib(type=np.ndarray)
    t_index = attr.ib(type=np.ndarray)
    aux_closeness = attr.ib(type=np.ndarray, default=None)
    aux_target = attr.ib(type=np.ndarray, default=None)

    @property
    def size(self) -> int:
        return int(self.target.shape[0])


def _windows(scaled: Array, meta: Array, spec: WindowSpec,
             t: int) -> Tuple[Array, ...]:
    out = []
    for offset in (spec.T_c, spec.T_p, spec.T_t):
        lo, hi = t - offset - spec.l_c, t - offset
        out.append((scaled[lo:hi], meta[lo:hi]))
    (c, mc), (p, mp), (tr, mt) = out
    return c, p, tr, mc, mp, mt


def make_samples(video: VideoTensor, spec: WindowSpec, scaler: Scaler,
                 calendar: Optional[Calendar]=None) -> List[Sample]:
    """One sample per target frame t in [T_t + l_c, T - 1]."""
    if video.frames < spec.min_length:
        raise VideoTooShortError(video.frames, spec.min_length)
    calendar = calendar or Calendar()
    scaled = scaler.scale(video.data)
    meta = _meta_table(video, calendar)
    samples = []
    for t in range(spec.first_target, video.frames):
        c, p, tr, mc, mp, mt = _windows(scaled, meta, spec, t)
        samples.append(Sample(closeness=c, period=p, trend=tr,
                              meta_closeness=mc, meta_period=mp,
                              meta_trend=mt, target=scaled[t], t_index=t))
    dataset_logger.info('Built %d samples (targets %d..%d)', len(samples),
                        spec.first_target, video.frames - 1)
    return samples


def make_paired_samples(density: VideoTensor, flow: VideoTensor,
                        spec: WindowSpec, density_scaler: Scaler,
                        flow_scaler: Scaler,
                        calendar: Optional[Calendar]=None) -> List[Sample]:
    """Density samples carrying the aligned flow closeness and target."""
    if density.shape[:3] != flow.shape[:3]:
        raise ShapeMismatchError('paired videos (T, H, W)',
                                 density.shape[:3], flow.shape[:3])
    if density.start_timestamp != flow.start_timestamp:
        raise ShapeMismatchError('paired video start',
                                 (density.start_timestamp,),
                                 (flow.start_timestamp,))
    base = make_samples(density, spec, density_scaler, calendar)
    flow_scaled = flow_scaler.scale(flow.data)
    return [attr.evolve(
        s, aux_closeness=flow_scaled[s.t_index - spec.T_c - spec.l_c:
                                     s.t_index - spec.T_c],
        aux_target=flow_scaled[s.t_index]) for s in base]


def split(samples: Sequence[Sample]) -> Tuple[List[Sample], List[Sample],
                                              List[Sample]]:
    """Chronological 64/16/20 train/validation/test split.

    Boundaries are floored, so any remainder goes to the training part.
    """
    n = len(samples)
    if n < MIN_SAMPLES:
        raise TooFewSamplesError(n, MIN_SAMPLES)
    train_end = (64 * n) // 100
    val_end = (80 * n) // 100
    return (list(samples[:train_end]), list(samples[train_end:val_end]),
            list(samples[val_end:]))


def _stack(samples: Sequence[Sample], field: str) -> Optional[Array]:
    values = [getattr(s, field) for s in samples]
    if any(v is None for v in values):
        return None
    return np.stack(values)


def collate(samples: Sequence[Sample]) -> Batch:
    if not samples:
        raise ValueError('cannot collate an empty batch')
    return Batch(
        closeness=_stack(samples, 'closeness'),
        period=_stack(samples, 'period'),
        trend=_stack(samples, 'trend'),
        meta_closeness=_stack(samples, 'meta_closeness'),
        meta_period=_stack(samples, 'meta_period'),
        meta_trend=_stack(samples, 'meta_trend'),
        target=_stack(samples, 'target'),
        t_index=np.array([s.t_index for s in samples], dtype=np.int64),
        aux_closeness=_stack(samples, 'aux_closeness'),
        aux_target=_stack(samples, 'aux_target'))


def iterate_batches(samples: Sequence[Sample], batch_size: int,
                    rng: Optional[np.random.Generator]=None
                    ) -> Iterator[Batch]:
    """Batches in order, or in a seeded permutation when rng is given.
    The last batch may be short."""
    if batch_size < 1:
        raise ValueError('batch_size must be >= 1')
    order = (rng.permutation(len(samples)) if rng is not None
             else np.arange(len(samples)))  # type: IntArray
    for start in range(0, len(order), batch_size):
        yield collate([samples[i] for i in order[start:start + batch_size]])
