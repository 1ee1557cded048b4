"""Various helper functions"""

import contextlib
import datetime
import os
from pathlib import Path
from typing import Any, List  # noqa

import numpy as np

from .exceptions import NonFiniteError
from .log import cli_logger
from .typedefs import Array, PathLike

__all__ = ('haversine_m', 'make_rng', 'check_finite', 'OutputGuard')

SECONDS_PER_DAY = 86400
EARTH_RADIUS_M = 6371008.8
EPOCH = datetime.datetime(1970, 1, 1)
TIMESTAMP_FORMAT = '%Y-%m-%d %H:%M:%S'

# Cell boundaries are snapped by this fraction of a cell so that points
# written as ``edge + k * d`` land in cell k despite binary rounding.
CELL_SNAP = 1e-9


def haversine_m(lat1: Any, lon1: Any, lat2: Any, lon2: Any) -> Any:
    """Great-circle distance in meters; accepts scalars or arrays."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def to_datetime(timestamp: int) -> datetime.datetime:
    """Naive local datetime for seconds since the (naive) epoch."""
    return EPOCH + datetime.timedelta(seconds=int(timestamp))


def date_timestamp(day: datetime.date) -> int:
    return (day - EPOCH.date()).days * SECONDS_PER_DAY


def format_timestamp(timestamp: int) -> str:
    return to_datetime(timestamp).strftime(TIMESTAMP_FORMAT)


def parse_date(text: str) -> datetime.date:
    return datetime.datetime.strptime(text, '%Y-%m-%d').date()


def parse_time_of_day(text: str) -> int:
    """'HH:MM' or 'HH:MM:SS' to seconds after midnight."""
    parts = [int(p) for p in text.split(':')]
    if len(parts) == 2:
        parts.append(0)
    if len(parts) != 3:
        raise ValueError('bad time of day %r' % text)
    hours, minutes, seconds = parts
    return hours * 3600 + minutes * 60 + seconds


def cell_index(values: Array, origin: float, step: float) -> Array:
    return np.floor((values - origin) / step + CELL_SNAP).astype(np.int64)


def check_finite(array: Array, where: str) -> Array:
    if not np.all(np.isfinite(array)):
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        raise NonFiniteError(where, {'shape': np.shape(array),
                                     'non_finite': bad})
    return array


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed)] + [int(k) for k in key])


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *key))


class OutputGuard:
    """Tracks files written by one command and removes them if the command
    fails, so that no partial artifacts are left behind.

    Usage:
        with OutputGuard() as guard:
            write_video(video, guard.track(out_dir / 'density.vluc'))
    """

    def __init__(self) -> None:
        self._paths = []  # type: List[Path]

    def track(self, path: PathLike) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self._paths.append(target)
        return target

    @property
    def paths(self) -> List[Path]:
        return list(self._paths)

    def __enter__(self) -> 'OutputGuard':
        return self

    def __exit__(self, exc_type: Any, exc: Any, tb: Any) -> None:
        if exc_type is None:
            return
        for path in self._paths:
            with contextlib.suppress(FileNotFoundError):
                os.remove(path)
                cli_logger.info('Removed partial output %s', path)
