"""Calendar baselines: HistoricalAverage and CopyYesterday."""

from typing import Dict, Optional, Sequence, Tuple  # noqa

import numpy as np
import pandas as pd

from .dataset import Calendar
from .exceptions import NoMatchingFrameError
from .helpers import SECONDS_PER_DAY, to_datetime
from .log import train_logger
from .rasterize import VideoTensor
from .typedefs import Array

__all__ = ('HistoricalAverage', 'historical_average', 'copy_yesterday',
           'baseline_frames')

GroupKey = Tuple[int, str]


def _group_keys(stamps: Sequence[int],
                calendar: Calendar) -> pd.DataFrame:
    stamps = np.asarray(stamps, dtype=np.int64)
    days = [calendar.day_type(to_datetime(int(s)).date()) for s in stamps]
    return pd.DataFrame({'time_of_day': stamps % SECONDS_PER_DAY,
                         'day_type': days})


class HistoricalAverage:
    """Per-cell mean of the training frames sharing a time of day and a
    day type (weekday or weekend)."""

    def __init__(self, calendar: Calendar) -> None:
        self.calendar = calendar
        self._means = {}  # type: Dict[GroupKey, Array]

    def fit(self, video: VideoTensor, upto: int) -> 'HistoricalAverage':
        """Learn from frames [0, upto)."""
        frames = video.data[:upto]
        keys = _group_keys(video.frame_timestamps()[:upto], self.calendar)
        self._means = {}
        for (tod, day_type), rows in keys.groupby(
                ['time_of_day', 'day_type']).groups.items():
            self._means[(int(tod), str(day_type))] = \
                frames[np.asarray(rows)].mean(axis=0)
        train_logger.info('HistoricalAverage fitted %d groups on %d frames',
                          len(self._means), len(frames))
        return self

    @property
    def groups(self) -> Tuple[GroupKey, ...]:
        return tuple(sorted(self._means))

    def query(self, time_of_day: int, day_type: str) -> Array:
        try:
            return self._means[(int(time_of_day), day_type)]
        except KeyError:
            raise NoMatchingFrameError(
                'no training frame at %02d:%02d on a %s' % (
                    time_of_day // 3600, time_of_day % 3600 // 60,
                    day_type))

    def predict(self, video: VideoTensor, t: int) -> Array:
        stamp = video.frame_timestamp(t)
        day_type = self.calendar.day_type(to_datetime(stamp).date())
        return self.query(stamp % SECONDS_PER_DAY, day_type)


def historical_average(video: VideoTensor, upto: int, calendar: Calendar,
                       time_of_day: int, day_type: str) -> Array:
    return HistoricalAverage(calendar).fit(video, upto).query(time_of_day,
                                                              day_type)


def copy_yesterday(video: VideoTensor, t: int) -> Array:
    """Frame t - steps_per_day."""
    steps = video.steps_per_day
    if t < steps:
        raise NoMatchingFrameError(
            'frame %d has no previous day (steps_per_day=%d)' % (t, steps))
    if t >= video.frames:
        raise NoMatchingFrameError('frame %d beyond video of %d frames' % (
            t, video.frames))
    return video.data[t - steps]


def baseline_frames(video: VideoTensor, t_indices: Sequence[int], *,
                    kind: str,
                    model: Optional[HistoricalAverage]=None) -> Array:
    """Stacked raw-scale baseline predictions for the given targets."""
    if kind == 'copy_yesterday':
        return np.stack([copy_yesterday(video, int(t)) for t in t_indices])
    if kind == 'historical_average':
        if model is None:
            raise ValueError('historical_average needs a fitted model')
        return np.stack([model.predict(video, int(t)) for t in t_indices])
    raise ValueError('unknown baseline %r' % kind)
